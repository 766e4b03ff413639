#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dts/index.hpp"
#include "dts/interpret.hpp"

namespace dts {

// One 1-based rank range sampled for judging at a fixed rate.
struct SamplingStratum {
    std::string id;
    int depth_from = 1;  // inclusive
    int depth_to = 0;    // inclusive
    double rate = 1.0;   // fraction of the range that was judged, in (0, 1]
};

struct JudgmentSet {
    std::string query_id;
    std::map<std::string, bool> relevance;  // judged videos only
    std::vector<SamplingStratum> strata;    // empty means fully judged

    // Rates in (0, 1], ranges well-formed and pairwise disjoint, ids
    // nonempty and unique.
    void validate() const;
};

// Treats the judgment map as complete ground truth: videos absent from it
// are nonrelevant and the denominator counts every relevant video whether
// retrieved or not. No relevant video at all leaves the metric undefined.
double average_precision(const RankedList& list, const JudgmentSet& judgments);

// AP estimator over partially judged lists. Each judged relevant document
// stands for roughly 1/rate documents of its stratum, both in the
// relevant mass above a rank and in the estimated total-relevant count;
// the mass above a rank uses conditionally shifted odds for the rank's
// own stratum (see the implementation) so the estimate is unbiased under
// single-stratum Bernoulli judging. Ranks outside every stratum are
// treated as exhaustively judged (weight 1, unjudged slots nonrelevant).
// With full judgments at rate 1 this is average_precision. A declared
// stratum whose slots in the list are all unjudged contributes nothing
// and is reported through `warnings`.
double inferred_ap(const RankedList& list, const JudgmentSet& judgments,
                   std::vector<std::string>* warnings = nullptr);

// |top-k decoded tokens intersected with ground truth| / min(k, |truth|).
// The denominator choice lets a video with more caption words than k still
// reach 1.0.
double concept_recall_at_k(const DecodedConceptList& decoded,
                           const std::set<std::string>& ground_truth, int k);

// Two-sided paired randomization test. Flips each query's (a, b) pair with
// probability one half per iteration and compares the permuted |mean
// difference| against the observed one; the observed assignment counts
// once, so p = (hits + 1) / (iterations + 1) lies in (0, 1] and identical
// inputs give exactly 1.
double randomization_test(std::span<const double> scores_a, std::span<const double> scores_b,
                          int iterations, std::uint64_t seed);

}  // namespace dts
