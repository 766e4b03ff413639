#include "dts/interpret.hpp"

#include <algorithm>

#include "dts/error.hpp"

namespace dts {

namespace {

// Indices of the k largest probabilities, value descending, ties by
// ascending index. Decoding and pruning share this so they agree on what
// "top concepts" means.
std::vector<int> top_indices(const Vec& probs, int k) {
    std::vector<int> order(probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    const auto by_rank = [&probs](int a, int b) {
        if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)])
            return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
        return a < b;
    };
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), by_rank);
    order.resize(take);
    return order;
}

const IndexEntry* find_entry(const VideoIndex& index, const std::string& id) {
    const auto at = std::lower_bound(
        index.entries.begin(), index.entries.end(), id,
        [](const IndexEntry& entry, const std::string& key) { return entry.video_id < key; });
    if (at == index.entries.end() || at->video_id != id) return nullptr;
    return &*at;
}

}  // namespace

DecodedConceptList decode_concepts(const IndexEntry& entry, const Vocabulary& vocab, int k) {
    if (static_cast<int>(entry.concepts.size()) != vocab.size())
        throw ShapeError("decode_concepts: concept vector and vocabulary sizes differ");
    if (k < 1 || k > vocab.size())
        throw ValueError("decode_concepts: k must lie in [1, vocabulary size]");

    DecodedConceptList decoded;
    decoded.video_id = entry.video_id;
    decoded.concepts.reserve(static_cast<std::size_t>(k));
    for (int index : top_indices(entry.concepts, k))
        decoded.concepts.push_back(
            {vocab.token(index), entry.concepts[static_cast<std::size_t>(index)]});
    return decoded;
}

void PruneSpec::validate() const {
    if (keywords.empty() || keywords.size() > 3)
        throw ValueError("PruneSpec: takes one to three keywords");
    for (const std::string& keyword : keywords)
        if (keyword.empty()) throw ValueError("PruneSpec: empty keyword");
    if (concept_depth < 1) throw ValueError("PruneSpec: concept_depth must be positive");
    if (result_depth < 1) throw ValueError("PruneSpec: result_depth must be positive");
}

PruneResult prune_by_keywords(const RankedList& list, const VideoIndex& index,
                              const PruneSpec& spec, const Vocabulary& vocab) {
    spec.validate();
    if (list.items.empty()) throw ValueError("prune_by_keywords: empty result list");

    PruneResult result;
    std::vector<int> required;
    for (const std::string& keyword : spec.keywords) {
        const int concept_index = vocab.index_of(keyword);
        if (concept_index >= 0)
            required.push_back(concept_index);
        else
            result.unknown_keywords.push_back(keyword);
    }

    result.kept.query_id = list.query_id;
    result.kept.scorer = list.scorer;
    result.removed.query_id = list.query_id;
    result.removed.scorer = list.scorer;

    const std::size_t examined =
        std::min<std::size_t>(list.items.size(), static_cast<std::size_t>(spec.result_depth));
    for (std::size_t i = 0; i < examined; ++i) {
        const ScoredVideo& item = list.items[i];
        const IndexEntry* entry = find_entry(index, item.video_id);
        if (!entry)
            throw ValueError("prune_by_keywords: '" + item.video_id + "' is not in the index");
        const std::vector<int> top = top_indices(entry->concepts, spec.concept_depth);
        bool keep = true;
        for (int concept_index : required)
            keep = keep && std::find(top.begin(), top.end(), concept_index) != top.end();
        (keep ? result.kept : result.removed).items.push_back(item);
    }
    return result;
}

PruningReport pruning_report(const RankedList& kept, const RankedList& removed,
                             const std::map<std::string, bool>& judgments) {
    PruningReport report;
    const auto tally = [&judgments](const RankedList& side, int& relevant, int& irrelevant,
                                    int& unjudged) {
        for (const ScoredVideo& item : side.items) {
            const auto at = judgments.find(item.video_id);
            if (at == judgments.end())
                ++unjudged;
            else if (at->second)
                ++relevant;
            else
                ++irrelevant;
        }
    };
    tally(kept, report.relevant_kept, report.irrelevant_kept, report.unjudged_kept);
    tally(removed, report.relevant_removed, report.irrelevant_removed, report.unjudged_removed);

    const int judged_before = report.relevant_kept + report.irrelevant_kept +
                              report.relevant_removed + report.irrelevant_removed;
    const int judged_after = report.relevant_kept + report.irrelevant_kept;
    if (judged_before > 0)
        report.precision_before =
            static_cast<double>(report.relevant_kept + report.relevant_removed) / judged_before;
    if (judged_after > 0)
        report.precision_after = static_cast<double>(report.relevant_kept) / judged_after;
    return report;
}

}  // namespace dts
