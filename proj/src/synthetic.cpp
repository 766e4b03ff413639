#include "dts/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "dts/error.hpp"
#include "dts/rng.hpp"

namespace dts {

namespace {

// 10 consonants x 5 vowels; three syllables give 125k distinct tokens, all
// six letters long, none colliding with the filler or stopword lists.
const char* kSyllables[50] = {
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe", "fi",
    "fo", "fu", "ga", "ge", "gi", "go", "gu", "ha", "he", "hi", "ho", "hu", "ja",
    "je", "ji", "jo", "ju", "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo",
    "lu", "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu"};

const std::vector<std::string>& fillers() {
    static const std::vector<std::string> words{"video", "clip",    "shows", "scene",
                                                "camera", "footage", "shot",  "view"};
    return words;
}

std::string video_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%05d", index);
    return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_videos < 1 || n_concepts < 1 || frame_dim < 1)
        throw ValueError("SyntheticSpec: counts must be >= 1");
    if (min_frames < 1 || max_frames < min_frames)
        throw ValueError("SyntheticSpec: frame count range is invalid");
    if (min_concepts_per_video < 1 || max_concepts_per_video < min_concepts_per_video)
        throw ValueError("SyntheticSpec: concepts-per-video range is invalid");
    if (captions_per_video < 1) throw ValueError("SyntheticSpec: captions_per_video must be >= 1");
    if (noise_stddev < 0.0) throw ValueError("SyntheticSpec: noise_stddev must be >= 0");
}

std::string concept_token(int index) {
    if (index < 0) throw ValueError("concept_token: negative index");
    std::string out;
    out += kSyllables[index % 50];
    out += kSyllables[(index / 50) % 50];
    out += kSyllables[(index / 2500) % 50];
    return out;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SyntheticCorpus corpus;
    corpus.concept_tokens.reserve(static_cast<std::size_t>(spec.n_concepts));
    for (int c = 0; c < spec.n_concepts; ++c) corpus.concept_tokens.push_back(concept_token(c));

    corpus.prototypes = Tensor2(spec.n_concepts, spec.frame_dim);
    for (double& v : corpus.prototypes.data) v = rng.normal();

    std::vector<int> all_concepts(static_cast<std::size_t>(spec.n_concepts));
    std::iota(all_concepts.begin(), all_concepts.end(), 0);

    for (int v = 0; v < spec.n_videos; ++v) {
        const std::string id = video_id(v);

        const int cap = std::min(spec.max_concepts_per_video, spec.n_concepts);
        const int lo = std::min(spec.min_concepts_per_video, cap);
        const int k = static_cast<int>(rng.uniform_int(lo, cap));
        std::vector<int> pool = all_concepts;
        rng.shuffle(pool);
        std::vector<int> chosen(pool.begin(), pool.begin() + k);
        std::sort(chosen.begin(), chosen.end());

        // Frames: the sum of the chosen prototypes plus white noise.
        const int n_frames = static_cast<int>(rng.uniform_int(spec.min_frames, spec.max_frames));
        Vec signal(static_cast<std::size_t>(spec.frame_dim), 0.0);
        for (int c : chosen)
            for (int j = 0; j < spec.frame_dim; ++j)
                signal[static_cast<std::size_t>(j)] += corpus.prototypes.at(c, j);
        std::vector<Vec> frames;
        frames.reserve(static_cast<std::size_t>(n_frames));
        for (int f = 0; f < n_frames; ++f) {
            Vec frame = signal;
            for (double& x : frame) x += spec.noise_stddev * rng.normal();
            frames.push_back(std::move(frame));
        }
        corpus.data.videos.emplace(id, std::move(frames));

        // Captions name every chosen concept once, in caption-specific
        // order, padded with filler and glue words.
        auto& caps = corpus.data.captions[id];
        for (int c = 0; c < spec.captions_per_video; ++c) {
            std::vector<int> order = chosen;
            rng.shuffle(order);
            const std::string& filler =
                fillers()[static_cast<std::size_t>(rng.uniform_int(0, 7))];
            std::string caption = "the " + filler + " shows";
            for (std::size_t i = 0; i < order.size(); ++i) {
                caption += i == 0 ? " " : " and ";
                caption += corpus.concept_tokens[static_cast<std::size_t>(order[i])];
            }
            corpus.data.pairs.push_back(VideoTextPair{id, caps.size()});
            caps.push_back(std::move(caption));
        }

        corpus.video_concepts.emplace(id, std::move(chosen));
    }

    corpus.data.validate();
    return corpus;
}

}  // namespace dts
