#include "dts/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dts/encoder.hpp"
#include "dts/error.hpp"

namespace dts {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("truncated index: " + path);
    return v;
}

// Zero variance across every frame value; such clips carry no signal and
// get flagged so reports can call them out.
bool is_degenerate(const std::vector<Vec>& frames) {
    const double first = frames.front().front();
    for (const Vec& frame : frames)
        for (double v : frame)
            if (v != first) return false;
    return true;
}

void keep_top_k(Vec& values, int k) {
    if (k <= 0 || k >= static_cast<int>(values.size())) return;
    std::vector<int> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    // Ties keep the lower index so sparsification is deterministic.
    std::sort(order.begin(), order.end(), [&values](int a, int b) {
        if (values[static_cast<std::size_t>(a)] != values[static_cast<std::size_t>(b)])
            return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
        return a < b;
    });
    Vec sparse(values.size(), 0.0);
    for (int i = 0; i < k; ++i)
        sparse[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    values = std::move(sparse);
}

Tensor2 pack_rows(const std::vector<IndexEntry>& entries, const Vec IndexEntry::*field,
                  int cols) {
    Tensor2 out(static_cast<int>(entries.size()), cols);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Vec& row = entries[i].*field;
        std::copy(row.begin(), row.end(), out.row(static_cast<int>(i)).begin());
    }
    return out;
}

RankedList ranked_from_scores(const VideoIndex& index, const std::vector<double>& scores,
                              std::string query_id, std::string scorer) {
    RankedList list;
    list.query_id = std::move(query_id);
    list.scorer = std::move(scorer);
    list.items.reserve(index.entries.size());
    for (std::size_t i = 0; i < index.entries.size(); ++i)
        list.items.push_back({index.entries[i].video_id, scores[i]});
    canonical_sort(list.items);
    return list;
}

}  // namespace

void VideoIndex::validate() const {
    if (common_dim < 1 || vocab_size < 1)
        throw ValueError("VideoIndex: dimensions must be positive");
    const std::string* prev = nullptr;
    for (const IndexEntry& entry : entries) {
        if (entry.video_id.empty()) throw ValueError("VideoIndex: empty video id");
        if (prev && !(*prev < entry.video_id))
            throw ValueError("VideoIndex: entries out of order at '" + entry.video_id + "'");
        prev = &entry.video_id;
        if (static_cast<int>(entry.embedding.size()) != common_dim ||
            static_cast<int>(entry.concepts.size()) != vocab_size)
            throw ValueError("VideoIndex: wrong vector sizes for '" + entry.video_id + "'");
        double norm_sq = 0.0;
        for (double v : entry.embedding) {
            if (!std::isfinite(v))
                throw ValueError("VideoIndex: non-finite embedding for '" + entry.video_id + "'");
            norm_sq += v * v;
        }
        if (norm_sq == 0.0)
            throw ValueError("VideoIndex: zero embedding for '" + entry.video_id + "'");
        for (double p : entry.concepts)
            if (!std::isfinite(p) || p < 0.0 || p > 1.0)
                throw ValueError("VideoIndex: concept probability out of range for '" +
                                 entry.video_id + "'");
    }
}

Vec ConceptQueryVector::dense(int vocab_size) const {
    Vec out(static_cast<std::size_t>(vocab_size), 0.0);
    for (int index : indices) {
        if (index < 0 || index >= vocab_size)
            throw ShapeError("ConceptQueryVector: index outside the vocabulary");
        out[static_cast<std::size_t>(index)] = 1.0;
    }
    return out;
}

void canonical_sort(std::vector<ScoredVideo>& items) {
    std::sort(items.begin(), items.end(), [](const ScoredVideo& a, const ScoredVideo& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.video_id < b.video_id;
    });
}

VideoIndex build_index(Checkpoint& model, const std::map<std::string, std::vector<Vec>>& videos,
                       int concept_top_k) {
    if (concept_top_k < 0) throw ValueError("build_index: concept_top_k must be >= 0");
    if (videos.empty()) throw ValueError("build_index: no videos");
    set_batchnorm_mode(model.params, BatchNormMode::infer);

    VideoIndex index;
    index.common_dim = model.config.common_dim;
    index.vocab_size = model.config.vocab_size;
    index.vocab_hash = model.vocab_hash;
    index.entries.reserve(videos.size());
    for (const auto& [id, frames] : videos) {
        if (frames.empty()) throw ValueError("build_index: video '" + id + "' has no frames");
        IndexEntry entry;
        entry.video_id = id;
        entry.embedding = encode_visual(frames, model.params, model.config).embedding;
        entry.concepts = decode_single(entry.embedding, model.params);
        entry.degenerate = is_degenerate(frames);
        keep_top_k(entry.concepts, concept_top_k);
        index.entries.push_back(std::move(entry));
    }
    index.validate();
    return index;
}

ConceptQueryVector query_to_concepts(const std::string& query, const Vocabulary& vocab,
                                     const std::set<std::string>& stopwords) {
    ConceptQueryVector result;
    for (const std::string& token : tokenize(query)) {
        if (stopwords.count(token) > 0) continue;
        const int index = vocab.index_of(token);
        if (index >= 0) result.indices.push_back(index);
    }
    std::sort(result.indices.begin(), result.indices.end());
    result.indices.erase(std::unique(result.indices.begin(), result.indices.end()),
                         result.indices.end());
    return result;
}

RankedList score_embedding(const VideoIndex& index, std::span<const double> query_embedding,
                           const std::string& query_id) {
    if (index.entries.empty()) throw ValueError("score_embedding: empty index");
    const Tensor2 embeddings = pack_rows(index.entries, &IndexEntry::embedding, index.common_dim);
    const std::vector<double> scores = cosine_scores(embeddings, query_embedding);
    return ranked_from_scores(index, scores, query_id, "embedding");
}

RankedList score_concept(const VideoIndex& index, const ConceptQueryVector& c_q,
                         const std::string& query_id) {
    if (index.entries.empty()) throw ValueError("score_concept: empty index");
    if (c_q.empty()) throw ValueError("score_concept: empty concept query");
    const Vec query = c_q.dense(index.vocab_size);
    const Tensor2 concepts = pack_rows(index.entries, &IndexEntry::concepts, index.vocab_size);
    const std::vector<double> scores = cosine_scores(concepts, query);
    return ranked_from_scores(index, scores, query_id, "concept");
}

CombinedSearchResult search_combined(const VideoIndex& index, const std::string& query,
                                     Checkpoint& model, const Vocabulary& vocab,
                                     const std::set<std::string>& stopwords, double theta,
                                     const std::string& query_id) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw ValueError("search_combined: theta must lie in [0, 1]");
    if (index.entries.empty()) throw ValueError("search_combined: empty index");
    if (model.vocab_hash != vocab.hash() || index.vocab_hash != vocab.hash())
        throw ValueError("search_combined: model, index and vocabulary disagree");
    if (model.config.common_dim != index.common_dim)
        throw ValueError("search_combined: embedding widths disagree");
    set_batchnorm_mode(model.params, BatchNormMode::infer);

    const std::vector<int> tokens = vocab.map_tokens(tokenize(query));
    if (tokens.empty())
        throw ValueError("search_combined: query has no tokens in the vocabulary");
    const Vec tau = encode_text(tokens, model.params, model.config).embedding;

    CombinedSearchResult result;
    result.concepts = query_to_concepts(query, vocab, stopwords);
    if (result.concepts.empty()) {
        result.concept_fallback = true;
        result.list = score_embedding(index, tau, query_id);
        return result;
    }

    const Tensor2 embeddings = pack_rows(index.entries, &IndexEntry::embedding, index.common_dim);
    const Tensor2 concepts = pack_rows(index.entries, &IndexEntry::concepts, index.vocab_size);
    const std::vector<double> emb_scores = cosine_scores(embeddings, tau);
    const std::vector<double> con_scores =
        cosine_scores(concepts, result.concepts.dense(index.vocab_size));
    std::vector<double> fused(emb_scores.size());
    for (std::size_t i = 0; i < fused.size(); ++i)
        fused[i] = (1.0 - theta) * emb_scores[i] + theta * con_scores[i];
    result.list = ranked_from_scores(index, fused, query_id, "combined");
    return result;
}

void save_index(const std::string& path, const VideoIndex& index) {
    index.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index: " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod<std::int32_t>(out, index.common_dim);
    write_pod<std::int32_t>(out, index.vocab_size);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(index.entries.size()));
    write_pod<std::uint64_t>(out, index.vocab_hash);
    for (const IndexEntry& entry : index.entries) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entry.video_id.size()));
        out.write(entry.video_id.data(), static_cast<std::streamsize>(entry.video_id.size()));
        write_pod<std::uint8_t>(out, entry.degenerate ? 1 : 0);
        out.write(reinterpret_cast<const char*>(entry.embedding.data()),
                  static_cast<std::streamsize>(entry.embedding.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(entry.concepts.data()),
                  static_cast<std::streamsize>(entry.concepts.size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed: " + path);
}

VideoIndex load_index(const std::string& path, std::uint64_t expected_vocab_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("index lacks the DTIX magic", 0);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion) {
        std::ostringstream msg;
        msg << "unsupported index version " << version;
        throw ParseError(msg.str(), 0);
    }

    VideoIndex index;
    index.common_dim = read_pod<std::int32_t>(in, path);
    index.vocab_size = read_pod<std::int32_t>(in, path);
    const auto n_videos = read_pod<std::uint32_t>(in, path);
    index.vocab_hash = read_pod<std::uint64_t>(in, path);
    if (index.common_dim < 1 || index.vocab_size < 1)
        throw ParseError("index header has non-positive dimensions", 0);
    if (expected_vocab_hash != index.vocab_hash) {
        std::ostringstream msg;
        msg << "index was built against a different vocabulary (hash " << std::hex
            << index.vocab_hash << ", expected " << expected_vocab_hash << ")";
        throw ValueError(msg.str());
    }

    index.entries.resize(n_videos);
    for (IndexEntry& entry : index.entries) {
        const auto id_len = read_pod<std::uint32_t>(in, path);
        entry.video_id.resize(id_len);
        in.read(entry.video_id.data(), id_len);
        entry.degenerate = read_pod<std::uint8_t>(in, path) != 0;
        entry.embedding.resize(static_cast<std::size_t>(index.common_dim));
        in.read(reinterpret_cast<char*>(entry.embedding.data()),
                static_cast<std::streamsize>(entry.embedding.size() * sizeof(double)));
        entry.concepts.resize(static_cast<std::size_t>(index.vocab_size));
        in.read(reinterpret_cast<char*>(entry.concepts.data()),
                static_cast<std::streamsize>(entry.concepts.size() * sizeof(double)));
        if (!in) throw IoError("truncated index: " + path);
    }
    index.validate();
    return index;
}

void export_index_tsv(const std::string& path, const VideoIndex& index) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write index export: " + path);
    out.precision(17);
    for (const IndexEntry& entry : index.entries) {
        out << entry.video_id << '\t' << (entry.degenerate ? 1 : 0) << '\t';
        for (std::size_t i = 0; i < entry.embedding.size(); ++i) {
            if (i > 0) out << ' ';
            out << entry.embedding[i];
        }
        out << '\t';
        for (std::size_t i = 0; i < entry.concepts.size(); ++i) {
            if (i > 0) out << ' ';
            out << entry.concepts[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace dts
