#include "dts/eval.hpp"

#include <algorithm>
#include <cmath>

#include "dts/error.hpp"
#include "dts/rng.hpp"

namespace dts {

namespace {

// Index of the stratum containing the 1-based rank, or -1 outside all.
int stratum_at(const std::vector<SamplingStratum>& strata, int rank) {
    for (std::size_t s = 0; s < strata.size(); ++s)
        if (rank >= strata[s].depth_from && rank <= strata[s].depth_to)
            return static_cast<int>(s);
    return -1;
}

}  // namespace

void JudgmentSet::validate() const {
    std::set<std::string> ids;
    for (const SamplingStratum& stratum : strata) {
        if (stratum.id.empty()) throw ValueError("JudgmentSet: stratum without an id");
        if (!ids.insert(stratum.id).second)
            throw ValueError("JudgmentSet: duplicate stratum '" + stratum.id + "'");
        if (stratum.depth_from < 1 || stratum.depth_to < stratum.depth_from)
            throw ValueError("JudgmentSet: bad depth range in stratum '" + stratum.id + "'");
        if (!(stratum.rate > 0.0 && stratum.rate <= 1.0))
            throw ValueError("JudgmentSet: sampling rate outside (0, 1] in stratum '" +
                             stratum.id + "'");
    }
    std::vector<const SamplingStratum*> by_from;
    for (const SamplingStratum& stratum : strata) by_from.push_back(&stratum);
    std::sort(by_from.begin(), by_from.end(),
              [](const SamplingStratum* a, const SamplingStratum* b) {
                  return a->depth_from < b->depth_from;
              });
    for (std::size_t s = 1; s < by_from.size(); ++s)
        if (by_from[s]->depth_from <= by_from[s - 1]->depth_to)
            throw ValueError("JudgmentSet: strata '" + by_from[s - 1]->id + "' and '" +
                             by_from[s]->id + "' overlap");
}

double average_precision(const RankedList& list, const JudgmentSet& judgments) {
    int total_relevant = 0;
    for (const auto& [id, relevant] : judgments.relevance) total_relevant += relevant ? 1 : 0;
    if (total_relevant == 0)
        throw ValueError("average_precision: no relevant video judged for query '" +
                         judgments.query_id + "'");

    int seen = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < list.items.size(); ++i) {
        const auto at = judgments.relevance.find(list.items[i].video_id);
        if (at != judgments.relevance.end() && at->second) {
            ++seen;
            sum += static_cast<double>(seen) / static_cast<double>(i + 1);
        }
    }
    return sum / total_relevant;
}

double inferred_ap(const RankedList& list, const JudgmentSet& judgments,
                   std::vector<std::string>* warnings) {
    judgments.validate();
    const int n = static_cast<int>(list.items.size());
    const int n_strata = static_cast<int>(judgments.strata.size());

    // Per rank: label -1 unjudged / 0 nonrelevant / 1 relevant, and the
    // stratum the rank falls into.
    std::vector<int> label(static_cast<std::size_t>(n));
    std::vector<int> stratum(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto at = judgments.relevance.find(list.items[static_cast<std::size_t>(i)].video_id);
        label[static_cast<std::size_t>(i)] =
            at == judgments.relevance.end() ? -1 : (at->second ? 1 : 0);
        stratum[static_cast<std::size_t>(i)] = stratum_at(judgments.strata, i + 1);
    }

    if (warnings) {
        for (int s = 0; s < n_strata; ++s) {
            bool judged = false, unjudged = false;
            for (int i = 0; i < n; ++i) {
                if (stratum[static_cast<std::size_t>(i)] != s) continue;
                (label[static_cast<std::size_t>(i)] >= 0 ? judged : unjudged) = true;
            }
            if (unjudged && !judged)
                warnings->push_back("stratum '" + judgments.strata[static_cast<std::size_t>(s)].id +
                                    "' has no judged video in the list; its relevant mass is "
                                    "invisible to the estimate");
        }
    }

    // Estimated number of relevant videos: judged relevant ones stand for
    // 1/rate videos of the stratum they were sampled in; unretrieved or
    // out-of-stratum judgments count as themselves.
    double total_relevant = 0.0;
    std::map<std::string, int> rank_of;
    for (int i = 0; i < n; ++i)
        rank_of.emplace(list.items[static_cast<std::size_t>(i)].video_id, i);
    for (const auto& [id, relevant] : judgments.relevance) {
        if (!relevant) continue;
        double weight = 1.0;
        const auto at = rank_of.find(id);
        if (at != rank_of.end()) {
            const int s = stratum[static_cast<std::size_t>(at->second)];
            if (s >= 0) weight = 1.0 / judgments.strata[static_cast<std::size_t>(s)].rate;
        }
        total_relevant += weight;
    }
    if (total_relevant == 0.0) return 0.0;

    // Judged relevant documents ranked inside each stratum, over the whole
    // list. Needed for the own-stratum scaling below.
    std::vector<double> judged_relevant(static_cast<std::size_t>(n_strata), 0.0);
    for (int i = 0; i < n; ++i)
        if (label[static_cast<std::size_t>(i)] == 1 && stratum[static_cast<std::size_t>(i)] >= 0)
            judged_relevant[static_cast<std::size_t>(stratum[static_cast<std::size_t>(i)])] += 1.0;

    // One pass down the list; the prefix counters always describe the
    // ranks strictly above the current one. The relevant mass above a rank
    // is estimated from judged relevant documents only: plain inverse-rate
    // scaling for foreign strata, and (J - rate) / (rate * (J - 1)) for
    // the rank's own stratum, J being that stratum's judged relevant
    // count. The shifted odds account for the scoring document itself
    // being judged; with that term the estimate is unbiased under
    // single-stratum Bernoulli judging (up to the vanishing chance that at
    // most one relevant document is judged), instead of carrying the
    // 1 - (1 - rate) / ((R - 1) rate) shrinkage a bare 1/rate produces.
    // Individual estimates may exceed the feasible range on tiny samples;
    // that is the usual price of exact unbiasedness.
    std::vector<double> rel_in(static_cast<std::size_t>(n_strata), 0.0);
    double outside_relevant = 0.0;
    double ap_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const int s = stratum[static_cast<std::size_t>(i)];
        if (label[static_cast<std::size_t>(i)] == 1) {
            double above = outside_relevant;
            for (int t = 0; t < n_strata; ++t) {
                const auto u = static_cast<std::size_t>(t);
                if (rel_in[u] == 0.0) continue;
                const double rate = judgments.strata[u].rate;
                const double scale =
                    t == s ? (judged_relevant[u] - rate) / (rate * (judged_relevant[u] - 1.0))
                           : 1.0 / rate;
                above += rel_in[u] * scale;
            }
            const double expected_precision = (above + 1.0) / static_cast<double>(i + 1);
            const double weight =
                s >= 0 ? 1.0 / judgments.strata[static_cast<std::size_t>(s)].rate : 1.0;
            ap_sum += weight * expected_precision;
        }
        if (label[static_cast<std::size_t>(i)] == 1) {
            if (s >= 0)
                rel_in[static_cast<std::size_t>(s)] += 1.0;
            else
                outside_relevant += 1.0;
        }
    }
    return ap_sum / total_relevant;
}

double concept_recall_at_k(const DecodedConceptList& decoded,
                           const std::set<std::string>& ground_truth, int k) {
    if (ground_truth.empty()) throw ValueError("concept_recall_at_k: empty ground truth");
    if (k < 1) throw ValueError("concept_recall_at_k: k must be positive");

    const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                    decoded.concepts.size());
    int hits = 0;
    for (std::size_t i = 0; i < depth; ++i)
        hits += ground_truth.count(decoded.concepts[i].token) > 0 ? 1 : 0;
    const double denominator =
        static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(k),
                                                  ground_truth.size()));
    return static_cast<double>(hits) / denominator;
}

double randomization_test(std::span<const double> scores_a, std::span<const double> scores_b,
                          int iterations, std::uint64_t seed) {
    if (scores_a.size() != scores_b.size())
        throw ShapeError("randomization_test: score lists differ in length");
    if (scores_a.size() < 2) throw ValueError("randomization_test: need at least two queries");
    if (iterations < 1) throw ValueError("randomization_test: iterations must be positive");

    const std::size_t n = scores_a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = scores_a[i] - scores_b[i];
        if (!std::isfinite(diff[i]))
            throw ValueError("randomization_test: non-finite score difference");
    }

    double observed = 0.0;
    for (double d : diff) observed += d;
    observed = std::abs(observed / static_cast<double>(n));

    // Flipping a pair negates its difference. |sum| is symmetric under
    // negating all diffs, so the p-value is exactly symmetric in (a, b).
    Rng rng(seed);
    int hits = 0;
    for (int it = 0; it < iterations; ++it) {
        double sum = 0.0;
        for (double d : diff) sum += rng.uniform() < 0.5 ? -d : d;
        if (std::abs(sum / static_cast<double>(n)) >= observed) ++hits;
    }
    return (hits + 1.0) / (iterations + 1.0);
}

}  // namespace dts
