#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dts/dataset.hpp"
#include "dts/tensor.hpp"

namespace dts {

// Knobs of the synthetic corpus generator. Videos draw a small set of
// latent concepts; frames are noisy sums of per-concept prototypes and
// captions name the concepts amid filler words, so retrieval ground truth
// is known exactly.
struct SyntheticSpec {
    std::uint64_t seed = 1;
    int n_videos = 40;
    int n_concepts = 8;
    int frame_dim = 32;
    int min_frames = 3;
    int max_frames = 6;
    int min_concepts_per_video = 1;
    int max_concepts_per_video = 4;
    int captions_per_video = 2;
    double noise_stddev = 0.3;

    void validate() const;
};

struct SyntheticCorpus {
    Dataset data;
    std::vector<std::string> concept_tokens;
    // Sorted concept indices per video id; the retrieval ground truth.
    std::map<std::string, std::vector<int>> video_concepts;
    Tensor2 prototypes;  // n_concepts x frame_dim
};

// Pronounceable, collision-free name for a latent concept index.
std::string concept_token(int index);

// Fully deterministic in spec.seed: the same spec yields byte-identical
// corpora.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace dts
