#pragma once

#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dts/index.hpp"

namespace dts {

enum class BooleanKind { leaf, conjunction, disjunction, negation };

// Expression tree over sub-queries. Parsed trees mirror the source text;
// evaluation flattens nested same-kind chains so grouping parentheses
// cannot change the fused scores.
struct BooleanNode {
    BooleanKind kind = BooleanKind::leaf;
    std::string text;  // leaf payload
    std::vector<std::unique_ptr<BooleanNode>> children;
};

std::unique_ptr<BooleanNode> make_leaf(std::string text);
std::unique_ptr<BooleanNode> make_not(std::unique_ptr<BooleanNode> child);
std::unique_ptr<BooleanNode> make_and(std::vector<std::unique_ptr<BooleanNode>> children);
std::unique_ptr<BooleanNode> make_or(std::vector<std::unique_ptr<BooleanNode>> children);

// Arity rules: And/Or need two or more children, Not exactly one, leaves a
// non-empty phrase. Parser output always satisfies this; hand-built trees
// are checked at evaluation time.
void validate_ast(const BooleanNode& node);

// Grammar, keywords case-insensitive, AND binding tighter than OR and NOT
// tightest:
//   expr   := term (OR term)*
//   term   := factor (AND factor)*
//   factor := NOT factor | "(" expr ")" | phrase
//   phrase := quoted string | run of bare words
// Malformed input raises ParseError carrying the 0-based character
// offset.
std::unique_ptr<BooleanNode> parse_boolean(const std::string& text);

// Canonical rendering: quoted leaves, upper-case operators, explicit
// parentheses.
std::string to_string(const BooleanNode& node);

// Operator semantics over per-leaf normalized scores. Product/max/
// complement is the default; the interface exists so alternative fusion
// rules can be swapped in without touching the evaluator.
class FusionStrategy {
public:
    virtual ~FusionStrategy() = default;
    virtual double conjoin(std::span<const double> scores) const = 0;
    virtual double disjoin(std::span<const double> scores) const = 0;
    virtual double negate(double score) const = 0;
};

const FusionStrategy& default_fusion();

struct BooleanScorer {
    enum class Kind { embedding, concepts, combined };
    Kind kind = Kind::combined;
    double theta = 0.3;  // used by the combined scorer only
};

struct BooleanEvalResult {
    RankedList list;
    // Leaves that mapped to no concepts under the concept scorer and were
    // retrieved by embedding instead.
    std::size_t concept_fallbacks = 0;
};

// Retrieves every leaf with the chosen scorer, min-max normalizes each
// leaf's scores over the full index (constant lists become 0.5 so Not
// keeps a defined complement), then fuses: And = product, Or = max,
// Not = 1 - s, all under the given strategy.
BooleanEvalResult eval_boolean(const VideoIndex& index, const BooleanNode& ast,
                               const BooleanScorer& scorer, Checkpoint& model,
                               const Vocabulary& vocab, const std::set<std::string>& stopwords,
                               const FusionStrategy& fusion = default_fusion(),
                               const std::string& query_id = "");

// Baseline that ignores the Boolean structure: operator keywords and
// punctuation are stripped, the remaining words are embedded as one query
// and scored with search_combined.
RankedList eval_single_vector(const VideoIndex& index, const std::string& text, Checkpoint& model,
                              const Vocabulary& vocab, const std::set<std::string>& stopwords,
                              double theta, const std::string& query_id = "");

}  // namespace dts
