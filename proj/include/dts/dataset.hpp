#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

// One training pair: a video and one of its captions.
struct VideoTextPair {
    std::string video_id;
    std::size_t caption_index = 0;
};

// In-memory corpus. Maps are ordered so every traversal is deterministic.
struct Dataset {
    std::map<std::string, std::vector<Vec>> videos;  // id -> frame features
    std::map<std::string, std::vector<std::string>> captions;
    std::vector<VideoTextPair> pairs;

    // Frame feature width, or 0 while no videos are loaded.
    int frame_dim() const;

    // Every pair must reference a loaded video and an existing caption;
    // captions must be non-empty and frame dims consistent.
    void validate() const;

    std::vector<std::string> all_captions() const;
};

// Captions file: one "video_id<TAB>caption" per line. Appends to
// ds.captions and ds.pairs in file order.
void load_captions_file(const std::string& path, Dataset& ds);
void save_captions_file(const std::string& path, const Dataset& ds);

// Text feature format: per video a header "video_id<TAB>n_frames<TAB>dim"
// followed by n_frames lines of space-separated values.
void load_features_text(const std::string& path, Dataset& ds);
void save_features_text(const std::string& path, const Dataset& ds);

// Binary variant, magic "DTFF", little-endian, byte-exact doubles.
void load_features_binary(const std::string& path, Dataset& ds);
void save_features_binary(const std::string& path, const Dataset& ds);

class Vocabulary;

// Word-embedding text file: "token v1 ... vk" per line. Rows for tokens the
// vocabulary knows overwrite the matching matrix rows; other lines are
// ignored. Returns the number of rows filled. Dimension mismatches raise
// ParseError.
std::size_t apply_word_embedding_file(const std::string& path, const Vocabulary& vocab,
                                      Tensor2& embedding);

// One epoch's visit order over the pair list.
struct BatchPlan {
    std::uint64_t seed = 0;
    int batch_size = 32;
    std::vector<std::size_t> permutation;
};

// Deterministic in (seed, epoch): the same arguments always produce the
// same permutation, distinct epochs get distinct shuffles.
BatchPlan make_batch_plan(std::size_t n_pairs, int batch_size, std::uint64_t seed, int epoch);

// Consecutive slices of the permutation; the final batch may be short.
std::vector<std::span<const std::size_t>> plan_batches(const BatchPlan& plan);

}  // namespace dts
