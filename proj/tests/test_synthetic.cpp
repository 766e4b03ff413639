#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "dts/error.hpp"
#include "dts/synthetic.hpp"
#include "dts/vocab.hpp"

using dts::SyntheticCorpus;
using dts::SyntheticSpec;

TEST_CASE("the same seed reproduces the corpus exactly") {
    SyntheticSpec spec;
    spec.seed = 99;
    spec.n_videos = 12;
    SyntheticCorpus a = dts::generate_synthetic_corpus(spec);
    SyntheticCorpus b = dts::generate_synthetic_corpus(spec);

    REQUIRE(a.data.videos.size() == b.data.videos.size());
    for (const auto& [id, frames] : a.data.videos) {
        const auto& other = b.data.videos.at(id);
        REQUIRE(other.size() == frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f) CHECK(other[f] == frames[f]);
    }
    CHECK(a.data.captions == b.data.captions);
    CHECK(a.video_concepts == b.video_concepts);
    CHECK(a.prototypes.data == b.prototypes.data);

    SyntheticSpec other = spec;
    other.seed = 100;
    SyntheticCorpus c = dts::generate_synthetic_corpus(other);
    CHECK(a.data.captions != c.data.captions);
}

TEST_CASE("corpus structure follows the spec knobs") {
    SyntheticSpec spec;
    spec.seed = 5;
    spec.n_videos = 20;
    spec.n_concepts = 6;
    spec.frame_dim = 10;
    spec.min_frames = 2;
    spec.max_frames = 4;
    spec.captions_per_video = 3;
    SyntheticCorpus corpus = dts::generate_synthetic_corpus(spec);

    CHECK(corpus.data.videos.size() == 20);
    CHECK(corpus.data.pairs.size() == 60);
    CHECK(corpus.concept_tokens.size() == 6);
    CHECK(corpus.prototypes.rows == 6);
    CHECK(corpus.prototypes.cols == 10);
    CHECK(corpus.data.frame_dim() == 10);

    for (const auto& [id, frames] : corpus.data.videos) {
        CHECK(frames.size() >= 2);
        CHECK(frames.size() <= 4);
        CHECK(corpus.data.captions.at(id).size() == 3);
        const auto& concepts = corpus.video_concepts.at(id);
        CHECK(!concepts.empty());
        CHECK(concepts.size() <= 4);
        for (std::size_t i = 1; i < concepts.size(); ++i) CHECK(concepts[i - 1] < concepts[i]);
        for (int c : concepts) {
            CHECK(c >= 0);
            CHECK(c < 6);
        }
    }
    CHECK_NOTHROW(corpus.data.validate());
}

TEST_CASE("every caption names all of its video's concepts") {
    SyntheticSpec spec;
    spec.seed = 17;
    spec.n_videos = 15;
    spec.n_concepts = 9;
    SyntheticCorpus corpus = dts::generate_synthetic_corpus(spec);

    for (const auto& [id, caps] : corpus.data.captions) {
        const auto& concepts = corpus.video_concepts.at(id);
        for (const std::string& caption : caps) {
            std::set<std::string> words;
            for (const auto& t : dts::tokenize(caption)) words.insert(t);
            for (int c : concepts)
                CHECK(words.count(corpus.concept_tokens[static_cast<std::size_t>(c)]) == 1);
        }
    }
}

TEST_CASE("a single latent concept appears in every caption") {
    SyntheticSpec spec;
    spec.seed = 23;
    spec.n_videos = 8;
    spec.n_concepts = 1;
    SyntheticCorpus corpus = dts::generate_synthetic_corpus(spec);
    const std::string& token = corpus.concept_tokens[0];
    for (const auto& [id, caps] : corpus.data.captions)
        for (const std::string& caption : caps)
            CHECK(caption.find(token) != std::string::npos);
}

TEST_CASE("noise-free frames equal the prototype sum") {
    SyntheticSpec spec;
    spec.seed = 29;
    spec.n_videos = 10;
    spec.n_concepts = 5;
    spec.frame_dim = 7;
    spec.noise_stddev = 0.0;
    SyntheticCorpus corpus = dts::generate_synthetic_corpus(spec);

    for (const auto& [id, frames] : corpus.data.videos) {
        const auto& concepts = corpus.video_concepts.at(id);
        dts::Vec want(7, 0.0);
        for (int c : concepts)
            for (int j = 0; j < 7; ++j) want[static_cast<std::size_t>(j)] += corpus.prototypes.at(c, j);
        for (const auto& frame : frames)
            for (std::size_t j = 0; j < 7; ++j)
                CHECK(frame[j] == doctest::Approx(want[j]).epsilon(1e-12));
    }
}

TEST_CASE("concept frequencies match the declared draw within three sigma") {
    SyntheticSpec spec;
    spec.seed = 31;
    spec.n_videos = 2000;
    spec.n_concepts = 10;
    spec.min_frames = 1;
    spec.max_frames = 1;
    spec.captions_per_video = 1;
    spec.frame_dim = 2;
    SyntheticCorpus corpus = dts::generate_synthetic_corpus(spec);

    // Concept count k is uniform on {1..4}; subsets are uniform. So each
    // concept is present with probability E[k]/10 = 0.25, and a fixed pair
    // co-occurs with probability E[k(k-1)]/(10*9) = 5/90.
    std::vector<int> present(10, 0);
    int pair01 = 0;
    for (const auto& [id, concepts] : corpus.video_concepts) {
        bool has0 = false, has1 = false;
        for (int c : concepts) {
            ++present[static_cast<std::size_t>(c)];
            has0 = has0 || c == 0;
            has1 = has1 || c == 1;
        }
        if (has0 && has1) ++pair01;
    }

    const double n = 2000.0;
    const double p_single = 0.25;
    const double sigma_single = std::sqrt(p_single * (1.0 - p_single) / n);
    for (int c = 0; c < 10; ++c) {
        const double freq = present[static_cast<std::size_t>(c)] / n;
        CHECK(std::abs(freq - p_single) <= 3.0 * sigma_single);
    }

    const double p_pair = 5.0 / 90.0;
    const double sigma_pair = std::sqrt(p_pair * (1.0 - p_pair) / n);
    CHECK(std::abs(pair01 / n - p_pair) <= 3.0 * sigma_pair);
}

TEST_CASE("concept tokens are distinct, lowercase and six letters") {
    std::set<std::string> seen;
    for (int i = 0; i < 600; ++i) {
        const std::string tok = dts::concept_token(i);
        CHECK(tok.size() == 6);
        for (char c : tok) CHECK((c >= 'a' && c <= 'z'));
        CHECK(seen.insert(tok).second);
    }
    CHECK_THROWS_AS(dts::concept_token(-1), dts::ValueError);
}

TEST_CASE("spec validation rejects nonsense knobs") {
    SyntheticSpec bad;
    bad.n_videos = 0;
    CHECK_THROWS_AS(dts::generate_synthetic_corpus(bad), dts::ValueError);
    bad = SyntheticSpec{};
    bad.max_frames = 0;
    CHECK_THROWS_AS(dts::generate_synthetic_corpus(bad), dts::ValueError);
    bad = SyntheticSpec{};
    bad.noise_stddev = -1.0;
    CHECK_THROWS_AS(dts::generate_synthetic_corpus(bad), dts::ValueError);
}
