#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>

#include "dts/encoder.hpp"
#include "dts/error.hpp"
#include "dts/index.hpp"
#include "dts/linear.hpp"
#include "dts/rng.hpp"
#include "dts/vocab.hpp"
#include "search_world.hpp"

namespace {

using search_world::shared;
using search_world::stopwords_kept;

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Two entries with axis-aligned embeddings; concepts exercise the closed
// probability bounds.
dts::VideoIndex axis_index() {
    dts::VideoIndex index;
    index.common_dim = 2;
    index.vocab_size = 3;
    index.vocab_hash = 42;
    index.entries.push_back({"va", {1.0, 0.0}, {0.5, 0.125, 1.0}, false});
    index.entries.push_back({"vb", {0.0, 1.0}, {0.0, 1.0, 0.75}, true});
    index.validate();
    return index;
}

double hand_cosine(const dts::Vec& a, const dts::Vec& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::map<std::string, double> by_id(const dts::RankedList& list) {
    std::map<std::string, double> out;
    for (const dts::ScoredVideo& item : list.items) out.emplace(item.video_id, item.score);
    return out;
}

dts::Vec text_embedding(search_world::World& w, const std::string& query) {
    const std::vector<int> tokens = w.vocab.map_tokens(dts::tokenize(query));
    REQUIRE(!tokens.empty());
    dts::set_batchnorm_mode(w.model.params, dts::BatchNormMode::infer);
    return dts::encode_text(tokens, w.model.params, w.model.config).embedding;
}

}  // namespace

TEST_CASE("building the index twice gives identical entries") {
    auto& w = shared();
    const dts::VideoIndex again = dts::build_index(w.model, w.videos);

    CHECK(w.index.common_dim == w.model.config.common_dim);
    CHECK(w.index.vocab_size == w.vocab.size());
    CHECK(w.index.vocab_hash == w.vocab.hash());
    REQUIRE(again.entries.size() == w.index.entries.size());
    for (std::size_t i = 0; i < again.entries.size(); ++i) {
        const dts::IndexEntry& a = w.index.entries[i];
        const dts::IndexEntry& b = again.entries[i];
        CHECK(a.video_id == b.video_id);
        CHECK(a.degenerate == b.degenerate);
        CHECK(a.embedding == b.embedding);
        CHECK(a.concepts == b.concepts);
        if (i > 0) CHECK(w.index.entries[i - 1].video_id < a.video_id);
    }
}

TEST_CASE("stored vectors match a scripted forward pass") {
    auto& w = shared();
    dts::set_batchnorm_mode(w.model.params, dts::BatchNormMode::infer);
    const dts::BatchNormState& bn = w.model.params.decoder.bn;

    for (std::size_t e = 0; e < 3; ++e) {
        const dts::IndexEntry& entry = w.index.entries[e];
        const dts::Vec phi =
            dts::encode_visual(w.videos.at(entry.video_id), w.model.params, w.model.config)
                .embedding;
        CHECK(entry.embedding == phi);

        const dts::Vec logits = dts::fc_forward(entry.embedding, w.model.params.decoder.linear.weight,
                                                w.model.params.decoder.linear.bias);
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double x_hat =
                (logits[j] - bn.running_mean[j]) / std::sqrt(bn.running_var[j] + bn.epsilon);
            const double expected = 1.0 / (1.0 + std::exp(-(bn.gamma[j] * x_hat + bn.beta[j])));
            CHECK(entry.concepts[j] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("degenerate clips are flagged but still indexed") {
    auto& w = shared();
    const int dim = w.model.config.frame_feature_dim;
    std::map<std::string, std::vector<dts::Vec>> videos;
    dts::Rng rng(5);
    std::vector<dts::Vec> live(3, dts::Vec(static_cast<std::size_t>(dim)));
    for (dts::Vec& frame : live)
        for (double& v : frame) v = rng.normal();
    videos.emplace("va", live);
    videos.emplace("vb", std::vector<dts::Vec>(4, dts::Vec(static_cast<std::size_t>(dim), 0.0)));
    videos.emplace("vc", std::vector<dts::Vec>(3, dts::Vec(static_cast<std::size_t>(dim), 0.7)));

    const dts::VideoIndex index = dts::build_index(w.model, videos);
    REQUIRE(index.entries.size() == 3);
    CHECK_FALSE(index.entries[0].degenerate);
    CHECK(index.entries[1].degenerate);
    CHECK(index.entries[2].degenerate);

    SUBCASE("a video without frames is rejected") {
        videos.emplace("vd", std::vector<dts::Vec>{});
        CHECK_THROWS_WITH_AS(dts::build_index(w.model, videos),
                             doctest::Contains("no frames"), dts::ValueError);
    }
    SUBCASE("a foreign frame width is rejected") {
        videos["va"][0].resize(static_cast<std::size_t>(dim) + 1);
        CHECK_THROWS_AS(dts::build_index(w.model, videos), dts::ShapeError);
    }
}

TEST_CASE("concept sparsification keeps the k largest probabilities") {
    auto& w = shared();
    const dts::VideoIndex dense = dts::build_index(w.model, w.videos, 0);
    const dts::VideoIndex sparse = dts::build_index(w.model, w.videos, 3);
    const int m = dense.vocab_size;
    REQUIRE(m > 4);

    for (std::size_t e = 0; e < dense.entries.size(); ++e) {
        const dts::Vec& full = dense.entries[e].concepts;
        const dts::Vec& cut = sparse.entries[e].concepts;

        std::vector<int> order(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) order[static_cast<std::size_t>(j)] = j;
        std::sort(order.begin(), order.end(), [&full](int a, int b) {
            if (full[static_cast<std::size_t>(a)] != full[static_cast<std::size_t>(b)])
                return full[static_cast<std::size_t>(a)] > full[static_cast<std::size_t>(b)];
            return a < b;
        });

        int nonzero = 0;
        for (double p : cut) nonzero += p != 0.0 ? 1 : 0;
        CHECK(nonzero == 3);
        for (int r = 0; r < m; ++r) {
            const auto j = static_cast<std::size_t>(order[static_cast<std::size_t>(r)]);
            if (r < 3)
                CHECK(cut[j] == full[j]);
            else
                CHECK(cut[j] == 0.0);
        }
    }

    SUBCASE("k past the vocabulary keeps everything") {
        const dts::VideoIndex all = dts::build_index(w.model, w.videos, m + 5);
        for (std::size_t e = 0; e < dense.entries.size(); ++e)
            CHECK(all.entries[e].concepts == dense.entries[e].concepts);
    }
    SUBCASE("negative k is rejected") {
        CHECK_THROWS_AS(dts::build_index(w.model, w.videos, -1), dts::ValueError);
    }
}

TEST_CASE("query concept mapping drops stopwords and collapses duplicates") {
    auto& w = shared();
    const auto& stop = dts::default_stopwords();

    const dts::ConceptQueryVector palm = dts::query_to_concepts("palm trees", w.vocab, stop);
    std::vector<int> expected{w.vocab.index_of("palm"), w.vocab.index_of("trees")};
    std::sort(expected.begin(), expected.end());
    REQUIRE(expected.front() >= 0);
    CHECK(palm.indices == expected);

    CHECK(dts::query_to_concepts("of the", w.vocab, stop).empty());
    CHECK(dts::query_to_concepts("zebra", w.vocab, stop).empty());

    const dts::ConceptQueryVector trio =
        dts::query_to_concepts("person wearing a backpack", w.vocab, stop);
    CHECK(trio.indices.size() == 3);
    for (const char* word : {"person", "wearing", "backpack"})
        CHECK(std::count(trio.indices.begin(), trio.indices.end(), w.vocab.index_of(word)) == 1);

    CHECK(dts::query_to_concepts("dog dog dog", w.vocab, stop).indices.size() == 1);

    SUBCASE("dense expansion puts weight one on each index") {
        const dts::Vec d = palm.dense(w.vocab.size());
        double sum = 0.0;
        for (double v : d) sum += v;
        CHECK(sum == 2.0);
        CHECK(d[static_cast<std::size_t>(palm.indices[0])] == 1.0);

        dts::ConceptQueryVector bad;
        bad.indices = {99};
        CHECK_THROWS_AS(bad.dense(4), dts::ShapeError);
    }
}

TEST_CASE("embedding scorer ranks by cosine with canonical ties") {
    auto& w = shared();

    SUBCASE("a stored embedding retrieves itself with score one") {
        const dts::IndexEntry& target = w.index.entries[5];
        const dts::RankedList list = dts::score_embedding(w.index, target.embedding, "q1");
        CHECK(list.query_id == "q1");
        CHECK(list.scorer == "embedding");
        CHECK(list.items.front().video_id == target.video_id);
        CHECK(list.items.front().score == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("orthogonal embeddings score one and zero") {
        const dts::VideoIndex axis = axis_index();
        const dts::Vec q{1.0, 0.0};
        const dts::RankedList list = dts::score_embedding(axis, q);
        REQUIRE(list.items.size() == 2);
        CHECK(list.items[0].video_id == "va");
        CHECK(list.items[0].score == 1.0);
        CHECK(list.items[1].video_id == "vb");
        CHECK(list.items[1].score == 0.0);
    }

    SUBCASE("full index matches the brute-force oracle") {
        const dts::Vec tau = text_embedding(w, "palm trees");
        std::vector<std::pair<std::string, double>> oracle;
        for (const dts::IndexEntry& entry : w.index.entries)
            oracle.emplace_back(entry.video_id, hand_cosine(entry.embedding, tau));
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        const dts::RankedList list = dts::score_embedding(w.index, tau);
        REQUIRE(list.items.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(list.items[i].video_id == oracle[i].first);
            CHECK(list.items[i].score == doctest::Approx(oracle[i].second).epsilon(1e-12));
        }
    }

    SUBCASE("identical embeddings tie and break by ascending id") {
        dts::VideoIndex twins;
        twins.common_dim = 2;
        twins.vocab_size = 1;
        twins.entries.push_back({"vb", {2.0, 1.0}, {0.5}, false});
        // Deliberately inserted out of order to prove validate catches it.
        twins.entries.push_back({"va", {2.0, 1.0}, {0.5}, false});
        CHECK_THROWS_WITH_AS(twins.validate(), doctest::Contains("out of order"),
                             dts::ValueError);
        std::swap(twins.entries[0], twins.entries[1]);
        twins.validate();

        const dts::Vec q{1.0, 3.0};
        const dts::RankedList list = dts::score_embedding(twins, q);
        CHECK(list.items[0].score == list.items[1].score);
        CHECK(list.items[0].video_id == "va");
        CHECK(list.items[1].video_id == "vb");
    }

    SUBCASE("rescaling stored embeddings by seven keeps the ranking") {
        const dts::Vec tau = text_embedding(w, "palm trees");
        const dts::RankedList before = dts::score_embedding(w.index, tau);

        dts::VideoIndex scaled = w.index;
        for (dts::IndexEntry& entry : scaled.entries)
            for (double& v : entry.embedding) v *= 7.0;
        const dts::RankedList after = dts::score_embedding(scaled, tau);

        REQUIRE(after.items.size() == before.items.size());
        for (std::size_t i = 0; i < before.items.size(); ++i) {
            CHECK(after.items[i].video_id == before.items[i].video_id);
            CHECK(after.items[i].score == doctest::Approx(before.items[i].score).epsilon(1e-12));
        }
    }

    SUBCASE("bad inputs are rejected") {
        dts::VideoIndex empty;
        empty.common_dim = 2;
        empty.vocab_size = 1;
        const dts::Vec q{1.0, 0.0};
        CHECK_THROWS_AS(dts::score_embedding(empty, q), dts::ValueError);

        const dts::Vec narrow{1.0};
        CHECK_THROWS_AS(dts::score_embedding(axis_index(), narrow), dts::ShapeError);
    }
}

TEST_CASE("concept scorer ranks by cosine against the one-hot query") {
    auto& w = shared();
    const auto& stop = dts::default_stopwords();

    SUBCASE("probability mass on exactly the query concepts wins") {
        dts::VideoIndex index;
        index.common_dim = 2;
        index.vocab_size = 3;
        index.entries.push_back({"va", {1.0, 0.0}, {0.7, 0.7, 0.0}, false});
        index.entries.push_back({"vb", {0.0, 1.0}, {0.9, 0.0, 0.9}, false});
        index.validate();

        dts::ConceptQueryVector c_q;
        c_q.indices = {0, 1};
        const dts::RankedList list = dts::score_concept(index, c_q, "q2");
        CHECK(list.scorer == "concept");
        CHECK(list.items.front().video_id == "va");
        CHECK(list.items.front().score == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(list.items.back().score < 0.75);
    }

    SUBCASE("single-concept ranking follows the normalized probability") {
        dts::ConceptQueryVector c_q;
        c_q.indices = {w.vocab.index_of("palm")};
        REQUIRE(c_q.indices.front() >= 0);

        std::vector<std::pair<std::string, double>> oracle;
        for (const dts::IndexEntry& entry : w.index.entries) {
            double norm_sq = 0.0;
            for (double p : entry.concepts) norm_sq += p * p;
            oracle.emplace_back(entry.video_id,
                                entry.concepts[static_cast<std::size_t>(c_q.indices.front())] /
                                    std::sqrt(norm_sq));
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        const dts::RankedList list = dts::score_concept(w.index, c_q);
        for (std::size_t i = 0; i < oracle.size(); ++i)
            CHECK(list.items[i].video_id == oracle[i].first);
    }

    SUBCASE("two-concept query matches the brute-force oracle") {
        const dts::ConceptQueryVector c_q = dts::query_to_concepts("palm trees", w.vocab, stop);
        REQUIRE(c_q.indices.size() == 2);
        const dts::Vec q = c_q.dense(w.index.vocab_size);

        const dts::RankedList list = dts::score_concept(w.index, c_q);
        const std::map<std::string, double> got = by_id(list);
        for (const dts::IndexEntry& entry : w.index.entries)
            CHECK(got.at(entry.video_id) ==
                  doctest::Approx(hand_cosine(entry.concepts, q)).epsilon(1e-12));
    }

    SUBCASE("an empty concept query is the caller's problem") {
        CHECK_THROWS_AS(dts::score_concept(w.index, dts::ConceptQueryVector{}), dts::ValueError);
    }
}

TEST_CASE("combined scorer blends raw cosines") {
    auto& w = shared();
    const auto& stop = dts::default_stopwords();
    const std::string query = "palm trees";

    const dts::CombinedSearchResult at_zero =
        dts::search_combined(w.index, query, w.model, w.vocab, stop, 0.0);
    const dts::CombinedSearchResult at_one =
        dts::search_combined(w.index, query, w.model, w.vocab, stop, 1.0);
    const dts::Vec tau = text_embedding(w, query);
    const dts::RankedList emb = dts::score_embedding(w.index, tau);
    const dts::RankedList con = dts::score_concept(w.index, at_zero.concepts);

    SUBCASE("the endpoints reproduce the single scorers exactly") {
        CHECK_FALSE(at_zero.concept_fallback);
        CHECK(at_zero.list.scorer == "combined");
        REQUIRE(at_zero.list.items.size() == emb.items.size());
        for (std::size_t i = 0; i < emb.items.size(); ++i) {
            CHECK(at_zero.list.items[i].video_id == emb.items[i].video_id);
            CHECK(at_zero.list.items[i].score == emb.items[i].score);
            CHECK(at_one.list.items[i].video_id == con.items[i].video_id);
            CHECK(at_one.list.items[i].score == con.items[i].score);
        }
    }

    SUBCASE("interior theta equals the hand-combined lists") {
        const dts::CombinedSearchResult mid =
            dts::search_combined(w.index, query, w.model, w.vocab, stop, 0.3);
        const std::map<std::string, double> emb_by = by_id(emb);
        const std::map<std::string, double> con_by = by_id(con);
        for (const dts::ScoredVideo& item : mid.list.items)
            CHECK(item.score == doctest::Approx(0.7 * emb_by.at(item.video_id) +
                                                0.3 * con_by.at(item.video_id))
                                    .epsilon(1e-12));
    }

    SUBCASE("fusion is monotone in both inputs for every theta") {
        const std::map<std::string, double> emb_by = by_id(emb);
        const std::map<std::string, double> con_by = by_id(con);
        int violations = 0;
        for (int t = 0; t <= 10; ++t) {
            const double theta = t / 10.0;
            const std::map<std::string, double> fused = by_id(
                dts::search_combined(w.index, query, w.model, w.vocab, stop, theta).list);
            for (const auto& [id_a, fused_a] : fused)
                for (const auto& [id_b, fused_b] : fused)
                    if (emb_by.at(id_a) >= emb_by.at(id_b) && con_by.at(id_a) >= con_by.at(id_b) &&
                        fused_a < fused_b)
                        ++violations;
        }
        CHECK(violations == 0);
    }

    SUBCASE("an all-stopword query falls back to the embedding scorer") {
        auto& kept = stopwords_kept();
        const dts::CombinedSearchResult result =
            dts::search_combined(kept.index, "of the", kept.model, kept.vocab, stop, 0.3, "q9");
        CHECK(result.concept_fallback);
        CHECK(result.concepts.empty());
        CHECK(result.list.scorer == "embedding");
        CHECK(result.list.query_id == "q9");

        const dts::Vec fallback_tau = text_embedding(kept, "of the");
        const dts::RankedList direct = dts::score_embedding(kept.index, fallback_tau);
        REQUIRE(result.list.items.size() == direct.items.size());
        for (std::size_t i = 0; i < direct.items.size(); ++i)
            CHECK(result.list.items[i].score == direct.items[i].score);
    }

    SUBCASE("bad inputs are rejected") {
        CHECK_THROWS_AS(dts::search_combined(w.index, query, w.model, w.vocab, stop, -0.1),
                        dts::ValueError);
        CHECK_THROWS_AS(dts::search_combined(w.index, query, w.model, w.vocab, stop, 1.1),
                        dts::ValueError);
        CHECK_THROWS_WITH_AS(
            dts::search_combined(w.index, "qqq zzz", w.model, w.vocab, stop, 0.3),
            doctest::Contains("no tokens"), dts::ValueError);

        auto& kept = stopwords_kept();
        CHECK_THROWS_WITH_AS(
            dts::search_combined(kept.index, query, w.model, w.vocab, stop, 0.3),
            doctest::Contains("disagree"), dts::ValueError);
    }
}

TEST_CASE("index files round trip and refuse damage") {
    auto& w = shared();
    dts::save_index("idx_base.bin", w.index);
    const std::vector<char> bytes = slurp("idx_base.bin");

    SUBCASE("round trip is bitwise") {
        const dts::VideoIndex back = dts::load_index("idx_base.bin", w.vocab.hash());
        CHECK(back.common_dim == w.index.common_dim);
        CHECK(back.vocab_size == w.index.vocab_size);
        CHECK(back.vocab_hash == w.index.vocab_hash);
        REQUIRE(back.entries.size() == w.index.entries.size());
        for (std::size_t i = 0; i < back.entries.size(); ++i) {
            CHECK(back.entries[i].video_id == w.index.entries[i].video_id);
            CHECK(back.entries[i].degenerate == w.index.entries[i].degenerate);
            CHECK(back.entries[i].embedding == w.index.entries[i].embedding);
            CHECK(back.entries[i].concepts == w.index.entries[i].concepts);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(dts::load_index("idx_nowhere.bin", w.vocab.hash()), dts::IoError);
    }
    SUBCASE("foreign vocabulary hash") {
        CHECK_THROWS_WITH_AS(dts::load_index("idx_base.bin", w.vocab.hash() + 1),
                             doctest::Contains("vocabulary"), dts::ValueError);
    }
    SUBCASE("damaged magic") {
        std::vector<char> bad = bytes;
        bad[0] = 'X';
        spit("idx_magic.bin", bad);
        CHECK_THROWS_AS(dts::load_index("idx_magic.bin", w.vocab.hash()), dts::ParseError);
    }
    SUBCASE("unsupported version") {
        std::vector<char> bad = bytes;
        bad[4] = 9;
        spit("idx_version.bin", bad);
        CHECK_THROWS_AS(dts::load_index("idx_version.bin", w.vocab.hash()), dts::ParseError);
    }
    SUBCASE("truncation") {
        std::vector<char> bad = bytes;
        bad.resize(bad.size() / 2);
        spit("idx_trunc.bin", bad);
        CHECK_THROWS_AS(dts::load_index("idx_trunc.bin", w.vocab.hash()), dts::IoError);
    }
    SUBCASE("saving validates the entries first") {
        dts::VideoIndex poked = w.index;
        poked.entries[0].concepts[0] = 1.5;
        CHECK_THROWS_WITH_AS(dts::save_index("idx_poked.bin", poked),
                             doctest::Contains("out of range"), dts::ValueError);
        poked.entries[0].concepts[0] = 0.5;
        poked.entries[0].embedding.assign(poked.entries[0].embedding.size(), 0.0);
        CHECK_THROWS_WITH_AS(dts::save_index("idx_poked.bin", poked),
                             doctest::Contains("zero embedding"), dts::ValueError);
        poked.entries[0].embedding[0] = std::nan("");
        CHECK_THROWS_WITH_AS(dts::save_index("idx_poked.bin", poked),
                             doctest::Contains("non-finite"), dts::ValueError);
    }
}

TEST_CASE("TSV export spells out every stored value") {
    const dts::VideoIndex axis = axis_index();
    dts::export_index_tsv("idx_export.tsv", axis);

    std::ifstream in("idx_export.tsv");
    REQUIRE(in.good());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 2);

    const auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t at = line.find('\t'); at != std::string::npos;
             at = line.find('\t', start)) {
            fields.push_back(line.substr(start, at - start));
            start = at + 1;
        }
        fields.push_back(line.substr(start));
        return fields;
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::vector<std::string> fields = split(lines[i]);
        REQUIRE(fields.size() == 4);
        CHECK(fields[0] == axis.entries[i].video_id);
        CHECK(fields[1] == (axis.entries[i].degenerate ? "1" : "0"));

        const auto parse = [](const std::string& text) {
            std::vector<double> values;
            std::istringstream stream(text);
            for (double v; stream >> v;) values.push_back(v);
            return values;
        };
        CHECK(parse(fields[2]) == axis.entries[i].embedding);
        CHECK(parse(fields[3]) == axis.entries[i].concepts);
    }
}
