#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "dts/error.hpp"
#include "dts/rng.hpp"
#include "dts/vocab.hpp"

using dts::Vocabulary;

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs") {
    auto t1 = dts::tokenize("A Woman, wearing a red-dress!");
    CHECK(t1 == std::vector<std::string>{"a", "woman", "wearing", "a", "red", "dress"});

    CHECK(dts::tokenize("").empty());
    CHECK(dts::tokenize("  ,.;!  ").empty());

    auto t2 = dts::tokenize("Find shots of palm trees");
    CHECK(t2 == std::vector<std::string>{"find", "shots", "of", "palm", "trees"});

    auto t3 = dts::tokenize("2 dogs---3 cats");
    CHECK(t3 == std::vector<std::string>{"2", "dogs", "3", "cats"});
}

TEST_CASE("vocabulary keeps tokens at the caption-count boundary") {
    std::vector<std::string> captions;
    // "kept" appears in exactly 5 captions, "dropped" in 4. Repeating a
    // token inside one caption must not inflate its count.
    for (int i = 0; i < 5; ++i) captions.push_back("kept kept walks");
    for (int i = 0; i < 4; ++i) captions.push_back("dropped runs runs");
    captions.push_back("runs jumps");

    Vocabulary vocab = dts::build_vocabulary(captions, 5, dts::default_stopwords());
    CHECK(vocab.contains("kept"));
    CHECK(vocab.contains("runs"));
    CHECK(!vocab.contains("dropped"));
    CHECK(!vocab.contains("jumps"));

    const int kept_id = vocab.index_of("kept");
    CHECK(vocab.entries()[static_cast<std::size_t>(kept_id)].caption_count == 5);
    CHECK(vocab.entries()[static_cast<std::size_t>(vocab.index_of("runs"))].caption_count == 5);
}

TEST_CASE("vocabulary matches an independent count over a crafted corpus") {
    dts::Rng rng(211);
    const std::vector<std::string> words{"horse", "rider", "field", "beach", "ball",
                                         "dog",   "cat",   "tree",  "road"};
    std::vector<std::string> captions;
    for (int i = 0; i < 20; ++i) {
        std::string caption = "the";
        const int len = static_cast<int>(rng.uniform_int(2, 5));
        for (int j = 0; j < len; ++j) {
            caption += " " + words[static_cast<std::size_t>(rng.uniform_int(0, 8))];
        }
        captions.push_back(caption);
    }

    // Straightforward recount: distinct captions per token, drop stopwords
    // and low counts, order by count then token.
    std::map<std::string, int> counts;
    for (const auto& caption : captions) {
        std::set<std::string> seen;
        for (const auto& tok : dts::tokenize(caption)) seen.insert(tok);
        for (const auto& tok : seen) ++counts[tok];
    }
    std::vector<std::pair<std::string, int>> expect;
    for (const auto& [tok, count] : counts)
        if (count >= 3 && !dts::default_stopwords().count(tok)) expect.emplace_back(tok, count);
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    Vocabulary vocab = dts::build_vocabulary(captions, 3, dts::default_stopwords());
    REQUIRE(vocab.size() == static_cast<int>(expect.size()));
    for (int i = 0; i < vocab.size(); ++i) {
        CHECK(vocab.entries()[static_cast<std::size_t>(i)].token == expect[static_cast<std::size_t>(i)].first);
        CHECK(vocab.entries()[static_cast<std::size_t>(i)].caption_count ==
              expect[static_cast<std::size_t>(i)].second);
        CHECK(vocab.index_of(expect[static_cast<std::size_t>(i)].first) == i);
    }
}

TEST_CASE("vocabulary construction is insensitive to caption order") {
    std::vector<std::string> captions;
    for (int i = 0; i < 6; ++i) captions.push_back("boat water");
    for (int i = 0; i < 5; ++i) captions.push_back("water bird sky");
    Vocabulary a = dts::build_vocabulary(captions, 5, dts::default_stopwords());

    std::reverse(captions.begin(), captions.end());
    Vocabulary b = dts::build_vocabulary(captions, 5, dts::default_stopwords());

    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.size(); ++i) {
        CHECK(a.entries()[static_cast<std::size_t>(i)].token ==
              b.entries()[static_cast<std::size_t>(i)].token);
    }
    CHECK(a.hash() == b.hash());
}

TEST_CASE("vocabulary ordering is count-descending with lexicographic ties") {
    std::vector<std::string> captions;
    for (int i = 0; i < 3; ++i) captions.push_back("zebra");
    for (int i = 0; i < 3; ++i) captions.push_back("apple");
    for (int i = 0; i < 4; ++i) captions.push_back("mango");
    Vocabulary vocab = dts::build_vocabulary(captions, 3, dts::default_stopwords());
    REQUIRE(vocab.size() == 3);
    CHECK(vocab.token(0) == "mango");
    CHECK(vocab.token(1) == "apple");
    CHECK(vocab.token(2) == "zebra");
}

TEST_CASE("vocabulary rejects empty input and empty results") {
    std::vector<std::string> none;
    CHECK_THROWS_AS(dts::build_vocabulary(none, 5, dts::default_stopwords()), dts::ValueError);

    std::vector<std::string> sparse{"cat", "dog", "bird"};
    CHECK_THROWS_AS(dts::build_vocabulary(sparse, 5, dts::default_stopwords()), dts::ValueError);

    std::vector<std::string> only_stop{"the the", "the of", "of and", "and the", "the and"};
    CHECK_THROWS_AS(dts::build_vocabulary(only_stop, 1, dts::default_stopwords()),
                    dts::ValueError);
}

TEST_CASE("token mapping drops out-of-vocabulary words") {
    std::vector<std::string> captions;
    for (int i = 0; i < 5; ++i) captions.push_back("horse field");
    Vocabulary vocab = dts::build_vocabulary(captions, 5, dts::default_stopwords());

    const std::vector<std::string> query{"horse", "spaceship", "field", "horse"};
    auto ids = vocab.map_tokens(query);
    REQUIRE(ids.size() == 3);
    CHECK(ids[0] == vocab.index_of("horse"));
    CHECK(ids[1] == vocab.index_of("field"));
    CHECK(ids[2] == vocab.index_of("horse"));
    CHECK(vocab.index_of("spaceship") == -1);
    CHECK_THROWS_AS(vocab.token(99), dts::ValueError);
}

TEST_CASE("vocabulary file round-trips and hashes stably") {
    std::vector<std::string> captions;
    for (int i = 0; i < 6; ++i) captions.push_back("river stone bridge");
    for (int i = 0; i < 5; ++i) captions.push_back("stone path");
    Vocabulary vocab = dts::build_vocabulary(captions, 5, dts::default_stopwords());

    const std::string path = "vocab_roundtrip.tsv";
    vocab.save(path);
    Vocabulary loaded = Vocabulary::load(path);
    REQUIRE(loaded.size() == vocab.size());
    for (int i = 0; i < vocab.size(); ++i) {
        CHECK(loaded.token(i) == vocab.token(i));
        CHECK(loaded.entries()[static_cast<std::size_t>(i)].caption_count ==
              vocab.entries()[static_cast<std::size_t>(i)].caption_count);
    }
    CHECK(loaded.hash() == vocab.hash());

    CHECK_THROWS_AS(Vocabulary::load("no_such_vocab.tsv"), dts::IoError);
}

TEST_CASE("vocabulary load rejects malformed files") {
    {
        std::ofstream out("vocab_bad_order.tsv");
        out << "rare\t2\ncommon\t9\n";
    }
    CHECK_THROWS_AS(Vocabulary::load("vocab_bad_order.tsv"), dts::ValueError);

    {
        std::ofstream out("vocab_dup.tsv");
        out << "cat\t5\ncat\t5\n";
    }
    CHECK_THROWS_AS(Vocabulary::load("vocab_dup.tsv"), dts::ValueError);

    {
        std::ofstream out("vocab_no_tab.tsv");
        out << "cat 5\n";
    }
    CHECK_THROWS_AS(Vocabulary::load("vocab_no_tab.tsv"), dts::ParseError);
}

TEST_CASE("caption labels are the union over a video's captions") {
    std::vector<std::string> corpus;
    for (int i = 0; i < 5; ++i) corpus.push_back("horse rider field beach ball");
    Vocabulary vocab = dts::build_vocabulary(corpus, 5, dts::default_stopwords());
    REQUIRE(vocab.size() == 5);

    // One caption holding exactly one vocabulary token -> one-hot.
    std::vector<std::string> single{"a horse!"};
    auto one_hot = dts::caption_labels(single, vocab);
    CHECK(one_hot.positive_count == 1);
    CHECK(one_hot.bits[static_cast<std::size_t>(vocab.index_of("horse"))] == 1);

    // Two overlapping captions -> set union.
    std::vector<std::string> two{"horse rider", "rider on the beach"};
    auto uni = dts::caption_labels(two, vocab);
    std::set<std::string> expect{"horse", "rider", "beach"};
    CHECK(uni.positive_count == static_cast<int>(expect.size()));
    for (const auto& tok : expect)
        CHECK(uni.bits[static_cast<std::size_t>(vocab.index_of(tok))] == 1);
    CHECK(uni.bits[static_cast<std::size_t>(vocab.index_of("ball"))] == 0);

    // No vocabulary tokens at all -> all-zero, flagged through all_zero().
    std::vector<std::string> misses{"submarine voyage"};
    auto zero = dts::caption_labels(misses, vocab);
    CHECK(zero.all_zero());
    CHECK(zero.positive_count == 0);
}

TEST_CASE("stopword files override the bundled list") {
    {
        std::ofstream out("stops_custom.txt");
        out << "horse\nrider\n";
    }
    auto stops = dts::load_stopwords("stops_custom.txt");
    CHECK(stops.count("horse") == 1);
    CHECK(stops.count("the") == 0);

    std::vector<std::string> captions;
    for (int i = 0; i < 5; ++i) captions.push_back("horse field");
    Vocabulary vocab = dts::build_vocabulary(captions, 5, stops);
    CHECK(!vocab.contains("horse"));
    CHECK(vocab.contains("field"));

    CHECK_THROWS_AS(dts::load_stopwords("no_such_stops.txt"), dts::IoError);
}
