#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dts/losses.hpp"

namespace dts {

// Lowercases and splits on runs of non-alphanumeric bytes. Pure rule
// application; stopword removal happens at vocabulary construction, not
// here.
std::vector<std::string> tokenize(std::string_view text);

// Bundled static English stopword list.
const std::set<std::string>& default_stopwords();

// One token per line; blank lines ignored. Replaces the bundled list.
std::set<std::string> load_stopwords(const std::string& path);

struct VocabEntry {
    std::string token;
    int caption_count = 0;
};

// Tokens kept by the frequency rule, in canonical order: descending
// caption count, ties by lexicographic token, indices contiguous from 0.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<VocabEntry> entries);

    int size() const { return static_cast<int>(entries_.size()); }
    const std::vector<VocabEntry>& entries() const { return entries_; }
    const std::string& token(int index) const;
    // -1 when the token is out of vocabulary.
    int index_of(std::string_view token) const;
    bool contains(std::string_view token) const { return index_of(token) >= 0; }

    // Vocabulary indices of the given tokens, out-of-vocabulary tokens
    // dropped. Order preserved.
    std::vector<int> map_tokens(std::span<const std::string> tokens) const;

    // FNV-1a over the canonical file serialization; checkpoints store this
    // to refuse mismatched vocabularies.
    std::uint64_t hash() const;

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::vector<VocabEntry> entries_;
    std::unordered_map<std::string, int> index_;
};

// Counts distinct captions containing each token; keeps tokens seen in at
// least min_count captions and absent from the stopword list. An empty
// result raises ValueError.
Vocabulary build_vocabulary(std::span<const std::string> captions, int min_count,
                            const std::set<std::string>& stopwords);

// Multi-label target for one video: bit i set iff vocabulary token i
// appears in any of the video's captions. All-zero vectors are legal;
// callers check all_zero() and decide whether to warn.
LabelVector caption_labels(std::span<const std::string> captions, const Vocabulary& vocab);

}  // namespace dts
