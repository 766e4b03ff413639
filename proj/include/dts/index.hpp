#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dts/checkpoint.hpp"
#include "dts/tensor.hpp"
#include "dts/vocab.hpp"

namespace dts {

// Offline scoring material for one video: its joint embedding and the
// decoded concept probabilities.
struct IndexEntry {
    std::string video_id;
    Vec embedding;  // phi, length common_dim
    Vec concepts;   // decoded probabilities, length vocab_size
    // All frame values identical (zero variance, e.g. an all-zero clip).
    // The entry still scores, but downstream tools can surface the flag.
    bool degenerate = false;
};

struct VideoIndex {
    int common_dim = 0;
    int vocab_size = 0;
    std::uint64_t vocab_hash = 0;
    std::vector<IndexEntry> entries;  // ascending video_id, no duplicates

    // Checks dimensions, id ordering and uniqueness, finiteness, nonzero
    // embedding norms and concept values within [0, 1]. Sparsified concept
    // vectors hold exact zeros, which is why the lower bound is closed.
    void validate() const;
};

// Sparse one-hot concept query: sorted unique vocabulary indices.
struct ConceptQueryVector {
    std::vector<int> indices;

    bool empty() const { return indices.empty(); }
    Vec dense(int vocab_size) const;
};

struct ScoredVideo {
    std::string video_id;
    double score = 0.0;
};

struct RankedList {
    std::string query_id;
    std::string scorer;
    std::vector<ScoredVideo> items;
};

// Canonical result order everywhere: score descending, ties by ascending
// video id. Makes every ranking deterministic.
void canonical_sort(std::vector<ScoredVideo>& items);

// Embeds every video and decodes its concepts with the checkpointed model
// (forced into infer mode). concept_top_k > 0 keeps only the k largest
// probabilities per video and zeroes the rest; this shrinks storage but
// shifts concept cosines, so rankings may drift from the dense index.
// A video with no frames raises ValueError.
VideoIndex build_index(Checkpoint& model, const std::map<std::string, std::vector<Vec>>& videos,
                       int concept_top_k = 0);

// Tokenizes the query, drops stopwords, keeps tokens the vocabulary knows;
// duplicates collapse to a single weight-1 entry. An all-dropped query
// yields the empty vector, which scorers treat as "fall back to embedding".
ConceptQueryVector query_to_concepts(const std::string& query, const Vocabulary& vocab,
                                     const std::set<std::string>& stopwords);

// score(v) = cosine(phi_v, query_embedding).
RankedList score_embedding(const VideoIndex& index, std::span<const double> query_embedding,
                           const std::string& query_id = "");

// score(v) = cosine(yhat_v, dense(c_q)). Empty c_q raises ValueError; the
// combined searcher checks for that case first.
RankedList score_concept(const VideoIndex& index, const ConceptQueryVector& c_q,
                         const std::string& query_id = "");

struct CombinedSearchResult {
    RankedList list;
    ConceptQueryVector concepts;
    bool concept_fallback = false;  // c_q was empty: embedding-only scores
};

// Fused scoring on raw cosines: (1 - theta) * embedding + theta * concept.
// theta must lie in [0, 1]. The query must produce at least one
// in-vocabulary token; if it maps to no concepts after stopword removal
// the result is the embedding ranking with concept_fallback set.
CombinedSearchResult search_combined(const VideoIndex& index, const std::string& query,
                                     Checkpoint& model, const Vocabulary& vocab,
                                     const std::set<std::string>& stopwords, double theta,
                                     const std::string& query_id = "");

// Versioned binary, magic "DTIX": d, m, video count, vocabulary hash, then
// per-video records. Loading re-validates everything and refuses an index
// built against a different vocabulary.
void save_index(const std::string& path, const VideoIndex& index);
VideoIndex load_index(const std::string& path, std::uint64_t expected_vocab_hash);

// Debug view, one row per video: id, degenerate flag, embedding, concepts.
void export_index_tsv(const std::string& path, const VideoIndex& index);

}  // namespace dts
