#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <doctest.h>

#include "dts/dataset.hpp"
#include "dts/error.hpp"
#include "dts/rng.hpp"
#include "dts/vocab.hpp"
#include "support/test_util.hpp"

using dts::Dataset;
using dts::Vec;

namespace {

Dataset small_dataset(dts::Rng& rng) {
    Dataset ds;
    ds.videos["vid_a"] = testutil::random_sequence(rng, 3, 4);
    ds.videos["vid_b"] = testutil::random_sequence(rng, 5, 4);
    ds.captions["vid_a"] = {"a horse running", "horse in a field"};
    ds.captions["vid_b"] = {"city street at night"};
    ds.pairs = {{"vid_a", 0}, {"vid_a", 1}, {"vid_b", 0}};
    return ds;
}

}  // namespace

TEST_CASE("captions file loads ids, captions and pairs in order") {
    {
        std::ofstream out("caps_ok.tsv");
        out << "vid_a\ta horse running\n";
        out << "vid_b\tcity street\n";
        out << "vid_a\thorse in a field\n";
    }
    Dataset ds;
    dts::load_captions_file("caps_ok.tsv", ds);
    REQUIRE(ds.captions.size() == 2);
    REQUIRE(ds.captions["vid_a"].size() == 2);
    CHECK(ds.captions["vid_a"][0] == "a horse running");
    CHECK(ds.captions["vid_a"][1] == "horse in a field");
    REQUIRE(ds.pairs.size() == 3);
    CHECK(ds.pairs[0].video_id == "vid_a");
    CHECK(ds.pairs[0].caption_index == 0);
    CHECK(ds.pairs[1].video_id == "vid_b");
    CHECK(ds.pairs[2].video_id == "vid_a");
    CHECK(ds.pairs[2].caption_index == 1);
}

TEST_CASE("captions file parse failures carry line numbers") {
    {
        std::ofstream out("caps_no_tab.tsv");
        out << "vid_a a horse\n";
    }
    CHECK_THROWS_AS(
        [] {
            Dataset ds;
            dts::load_captions_file("caps_no_tab.tsv", ds);
        }(),
        dts::ParseError);
    try {
        Dataset ds;
        dts::load_captions_file("caps_no_tab.tsv", ds);
    } catch (const dts::ParseError& e) {
        CHECK(e.position() == 1);
    }

    {
        std::ofstream out("caps_empty.tsv");
        out << "vid_a\tfine caption\n";
        out << "vid_b\t\n";
    }
    try {
        Dataset ds;
        dts::load_captions_file("caps_empty.tsv", ds);
        FAIL("expected a parse error");
    } catch (const dts::ParseError& e) {
        CHECK(e.position() == 2);
    }

    Dataset ds;
    CHECK_THROWS_AS(dts::load_captions_file("no_such_caps.tsv", ds), dts::IoError);
}

TEST_CASE("text feature files round-trip exactly") {
    dts::Rng rng(223);
    Dataset ds = small_dataset(rng);
    dts::save_features_text("feat_rt.txt", ds);

    Dataset back;
    dts::load_features_text("feat_rt.txt", back);
    REQUIRE(back.videos.size() == 2);
    for (const auto& [id, frames] : ds.videos) {
        REQUIRE(back.videos.count(id) == 1);
        const auto& got = back.videos[id];
        REQUIRE(got.size() == frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f)
            for (std::size_t j = 0; j < frames[f].size(); ++j)
                CHECK(got[f][j] == frames[f][j]);
    }
}

TEST_CASE("binary feature files round-trip exactly") {
    dts::Rng rng(227);
    Dataset ds = small_dataset(rng);
    dts::save_features_binary("feat_rt.dtff", ds);

    Dataset back;
    dts::load_features_binary("feat_rt.dtff", back);
    REQUIRE(back.videos.size() == 2);
    for (const auto& [id, frames] : ds.videos) {
        const auto& got = back.videos[id];
        REQUIRE(got.size() == frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f)
            for (std::size_t j = 0; j < frames[f].size(); ++j)
                CHECK(got[f][j] == frames[f][j]);
    }
}

TEST_CASE("binary loader rejects files without the magic") {
    {
        std::ofstream out("feat_bad.dtff", std::ios::binary);
        out << "NOPE and some junk";
    }
    Dataset ds;
    CHECK_THROWS_AS(dts::load_features_binary("feat_bad.dtff", ds), dts::ParseError);
}

TEST_CASE("text feature loader rejects malformed input") {
    {
        std::ofstream out("feat_bad_header.txt");
        out << "vid_a\tnot_a_number\t4\n";
    }
    Dataset a;
    CHECK_THROWS_AS(dts::load_features_text("feat_bad_header.txt", a), dts::ParseError);

    {
        std::ofstream out("feat_bad_row.txt");
        out << "vid_a\t2\t3\n";
        out << "0.5 0.25 1.0\n";
        out << "0.5 0.25\n";
    }
    Dataset b;
    CHECK_THROWS_AS(dts::load_features_text("feat_bad_row.txt", b), dts::ParseError);

    {
        std::ofstream out("feat_dup.txt");
        out << "vid_a\t1\t2\n1.0 2.0\n";
        out << "vid_a\t1\t2\n3.0 4.0\n";
    }
    Dataset c;
    CHECK_THROWS_AS(dts::load_features_text("feat_dup.txt", c), dts::ParseError);
}

TEST_CASE("dataset validation catches broken references") {
    dts::Rng rng(229);
    Dataset ds = small_dataset(rng);
    CHECK_NOTHROW(ds.validate());

    Dataset missing = ds;
    missing.pairs.push_back({"vid_zzz", 0});
    CHECK_THROWS_AS(missing.validate(), dts::ValueError);

    Dataset out_of_range = ds;
    out_of_range.pairs.push_back({"vid_b", 7});
    CHECK_THROWS_AS(out_of_range.validate(), dts::ValueError);

    Dataset ragged = ds;
    ragged.videos["vid_a"][1] = Vec(9, 0.0);
    CHECK_THROWS_AS(ragged.validate(), dts::ValueError);

    Dataset empty_caption = ds;
    empty_caption.captions["vid_b"][0].clear();
    CHECK_THROWS_AS(empty_caption.validate(), dts::ValueError);
}

TEST_CASE("word-embedding rows fill matching vocabulary entries only") {
    std::vector<std::string> captions;
    for (int i = 0; i < 5; ++i) captions.push_back("horse rider field");
    dts::Vocabulary vocab = dts::build_vocabulary(captions, 5, dts::default_stopwords());
    REQUIRE(vocab.size() == 3);

    dts::Tensor2 embedding(3, 4, 0.5);
    {
        std::ofstream out("embeddings.txt");
        out << "horse 1 2 3 4\n";
        out << "spaceship 9 9 9 9\n";
        out << "field -1 -2 -3 -4\n";
    }
    const std::size_t filled = dts::apply_word_embedding_file("embeddings.txt", vocab, embedding);
    CHECK(filled == 2);

    const int horse = vocab.index_of("horse");
    const int rider = vocab.index_of("rider");
    const int field = vocab.index_of("field");
    CHECK(embedding.at(horse, 0) == 1.0);
    CHECK(embedding.at(horse, 3) == 4.0);
    CHECK(embedding.at(field, 0) == -1.0);
    // Tokens absent from the file keep whatever the matrix held.
    CHECK(embedding.at(rider, 0) == 0.5);

    {
        std::ofstream out("embeddings_short.txt");
        out << "horse 1 2\n";
    }
    CHECK_THROWS_AS(dts::apply_word_embedding_file("embeddings_short.txt", vocab, embedding),
                    dts::ParseError);

    dts::Tensor2 wrong_rows(2, 4);
    CHECK_THROWS_AS(dts::apply_word_embedding_file("embeddings.txt", vocab, wrong_rows),
                    dts::ShapeError);
}

TEST_CASE("batch plans are reproducible bijections") {
    auto a = dts::make_batch_plan(100, 16, 42, 3);
    auto b = dts::make_batch_plan(100, 16, 42, 3);
    CHECK(a.permutation == b.permutation);

    auto other_epoch = dts::make_batch_plan(100, 16, 42, 4);
    CHECK(a.permutation != other_epoch.permutation);
    auto other_seed = dts::make_batch_plan(100, 16, 43, 3);
    CHECK(a.permutation != other_seed.permutation);

    auto sorted = a.permutation;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> want(100);
    std::iota(want.begin(), want.end(), 0);
    CHECK(sorted == want);
}

TEST_CASE("batches slice the permutation and keep the short tail") {
    auto plan = dts::make_batch_plan(10, 4, 7, 0);
    auto batches = dts::plan_batches(plan);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);
    std::vector<std::size_t> seen;
    for (const auto& b : batches) seen.insert(seen.end(), b.begin(), b.end());
    CHECK(seen == plan.permutation);

    CHECK_THROWS_AS(dts::make_batch_plan(10, 0, 7, 0), dts::ValueError);
}
