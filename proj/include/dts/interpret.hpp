#pragma once

#include <map>
#include <string>
#include <vector>

#include "dts/index.hpp"
#include "dts/vocab.hpp"

namespace dts {

struct DecodedConcept {
    std::string token;
    double probability = 0.0;
};

// Top slice of one video's decoded probabilities, highest first, ties by
// ascending vocabulary index.
struct DecodedConceptList {
    std::string video_id;
    std::vector<DecodedConcept> concepts;
};

// k must lie in [1, vocabulary size]; the entry's concept vector and the
// vocabulary must agree on size.
DecodedConceptList decode_concepts(const IndexEntry& entry, const Vocabulary& vocab, int k);

// Conjunctive keyword filter over decoded concepts. Depth defaults follow
// the pruning protocol: look 30 concepts deep, examine the top 10 results.
struct PruneSpec {
    std::vector<std::string> keywords;  // one to three
    int concept_depth = 30;
    int result_depth = 10;

    void validate() const;
};

struct PruneResult {
    RankedList kept;
    RankedList removed;
    // Keywords the vocabulary lacks; they can never match, so the rest
    // decide each video's fate. With no known keyword left the filter is
    // vacuous and keeps everything it examined.
    std::vector<std::string> unknown_keywords;
};

// Splits the top result_depth items of the list: a video is kept iff every
// known keyword appears among its top concept_depth decoded concepts.
// Relative order is preserved on both sides; items beyond result_depth are
// not examined and appear in neither output.
PruneResult prune_by_keywords(const RankedList& list, const VideoIndex& index,
                              const PruneSpec& spec, const Vocabulary& vocab);

struct PruningReport {
    int relevant_kept = 0;
    int irrelevant_kept = 0;
    int unjudged_kept = 0;
    int relevant_removed = 0;
    int irrelevant_removed = 0;
    int unjudged_removed = 0;
    double precision_before = 0.0;  // judged-only precision over kept + removed
    double precision_after = 0.0;   // judged-only precision over kept
};

// judgments: video_id -> relevant. Videos absent from the map land in the
// unjudged cells and stay out of both precisions; an empty judged side
// reports precision 0.
PruningReport pruning_report(const RankedList& kept, const RankedList& removed,
                             const std::map<std::string, bool>& judgments);

}  // namespace dts
