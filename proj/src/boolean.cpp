#include "dts/boolean.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "dts/encoder.hpp"
#include "dts/error.hpp"

namespace dts {

namespace {

struct Token {
    enum class Kind { word, and_kw, or_kw, not_kw, lparen, rparen, end };
    Kind kind = Kind::end;
    std::string text;
    std::size_t pos = 0;  // 0-based character offset
    bool quoted = false;
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + ('a' - 'A'));
    return s;
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '(') {
            tokens.push_back({Token::Kind::lparen, "(", i, false});
            ++i;
        } else if (c == ')') {
            tokens.push_back({Token::Kind::rparen, ")", i, false});
            ++i;
        } else if (c == '"') {
            const std::size_t start = i + 1;
            const std::size_t close = text.find('"', start);
            if (close == std::string::npos) {
                std::ostringstream msg;
                msg << "unterminated quote at character offset " << i;
                throw ParseError(msg.str(), i);
            }
            tokens.push_back({Token::Kind::word, text.substr(start, close - start), i, true});
            i = close + 1;
        } else {
            std::size_t j = i;
            while (j < text.size() && !is_space(text[j]) && text[j] != '(' && text[j] != ')' &&
                   text[j] != '"')
                ++j;
            const std::string word = text.substr(i, j - i);
            const std::string lower = ascii_lower(word);
            Token::Kind kind = Token::Kind::word;
            if (lower == "and") kind = Token::Kind::and_kw;
            else if (lower == "or") kind = Token::Kind::or_kw;
            else if (lower == "not") kind = Token::Kind::not_kw;
            tokens.push_back({kind, word, i, false});
            i = j;
        }
    }
    tokens.push_back({Token::Kind::end, "", text.size(), false});
    return tokens;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    std::unique_ptr<BooleanNode> run() {
        if (peek().kind == Token::Kind::end) throw ParseError("empty query", 0);
        auto root = expr();
        if (peek().kind != Token::Kind::end) {
            std::ostringstream msg;
            msg << "unexpected '" << peek().text << "' at character offset " << peek().pos;
            throw ParseError(msg.str(), peek().pos);
        }
        return root;
    }

private:
    const Token& peek() const { return tokens_[at_]; }
    void advance() { ++at_; }

    std::unique_ptr<BooleanNode> expr() {
        std::vector<std::unique_ptr<BooleanNode>> terms;
        terms.push_back(term());
        while (peek().kind == Token::Kind::or_kw) {
            advance();
            terms.push_back(term());
        }
        if (terms.size() == 1) return std::move(terms.front());
        return make_or(std::move(terms));
    }

    std::unique_ptr<BooleanNode> term() {
        std::vector<std::unique_ptr<BooleanNode>> factors;
        factors.push_back(factor());
        while (peek().kind == Token::Kind::and_kw) {
            advance();
            factors.push_back(factor());
        }
        if (factors.size() == 1) return std::move(factors.front());
        return make_and(std::move(factors));
    }

    std::unique_ptr<BooleanNode> factor() {
        const Token& tok = peek();
        switch (tok.kind) {
            case Token::Kind::not_kw:
                advance();
                return make_not(factor());
            case Token::Kind::lparen: {
                advance();
                auto inner = expr();
                if (peek().kind != Token::Kind::rparen) {
                    std::ostringstream msg;
                    msg << "unbalanced parenthesis opened at character offset " << tok.pos;
                    throw ParseError(msg.str(), tok.pos);
                }
                advance();
                return inner;
            }
            case Token::Kind::word:
                return phrase();
            case Token::Kind::end:
                throw ParseError("expected operand at end of input", tok.pos);
            default: {
                std::ostringstream msg;
                msg << "expected operand at character offset " << tok.pos;
                throw ParseError(msg.str(), tok.pos);
            }
        }
    }

    std::unique_ptr<BooleanNode> phrase() {
        const Token& first = peek();
        if (first.quoted) {
            if (first.text.empty()) {
                std::ostringstream msg;
                msg << "empty operand at character offset " << first.pos;
                throw ParseError(msg.str(), first.pos);
            }
            advance();
            return make_leaf(first.text);
        }
        // A bare phrase is the maximal run of unquoted plain words.
        std::string text = first.text;
        advance();
        while (peek().kind == Token::Kind::word && !peek().quoted) {
            text += ' ';
            text += peek().text;
            advance();
        }
        return make_leaf(std::move(text));
    }

    std::vector<Token> tokens_;
    std::size_t at_ = 0;
};

class ProductMaxComplement final : public FusionStrategy {
public:
    double conjoin(std::span<const double> scores) const override {
        double product = 1.0;
        for (double s : scores) product *= s;
        return product;
    }
    double disjoin(std::span<const double> scores) const override {
        double best = scores.front();
        for (double s : scores) best = std::max(best, s);
        return best;
    }
    double negate(double score) const override { return 1.0 - score; }
};

// Min-max over the whole index; a constant list has no order to preserve
// and maps to 0.5, keeping its complement defined.
void normalize_scores(std::vector<double>& scores) {
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double range = *hi - *lo;
    if (range == 0.0) {
        std::fill(scores.begin(), scores.end(), 0.5);
        return;
    }
    const double min = *lo;
    for (double& s : scores) s = (s - min) / range;
}

struct LeafContext {
    const VideoIndex* index = nullptr;
    Checkpoint* model = nullptr;
    const Vocabulary* vocab = nullptr;
    const std::set<std::string>* stopwords = nullptr;
    BooleanScorer scorer;
    Tensor2 embeddings;
    Tensor2 concepts;
    std::size_t fallbacks = 0;

    std::vector<double> embedding_scores(const std::string& text) const {
        const std::vector<int> tokens = vocab->map_tokens(tokenize(text));
        if (tokens.empty())
            throw ValueError("eval_boolean: sub-query '" + text +
                             "' has no tokens in the vocabulary");
        const Vec tau = encode_text(tokens, model->params, model->config).embedding;
        return cosine_scores(embeddings, tau);
    }

    std::vector<double> score(const std::string& text) {
        if (scorer.kind == BooleanScorer::Kind::embedding) return embedding_scores(text);

        const ConceptQueryVector c_q = query_to_concepts(text, *vocab, *stopwords);
        if (scorer.kind == BooleanScorer::Kind::concepts) {
            if (c_q.empty()) {
                ++fallbacks;
                return embedding_scores(text);
            }
            return cosine_scores(concepts, c_q.dense(index->vocab_size));
        }

        std::vector<double> emb = embedding_scores(text);
        if (c_q.empty()) {
            ++fallbacks;
            return emb;
        }
        const std::vector<double> con = cosine_scores(concepts, c_q.dense(index->vocab_size));
        for (std::size_t i = 0; i < emb.size(); ++i)
            emb[i] = (1.0 - scorer.theta) * emb[i] + scorer.theta * con[i];
        return emb;
    }
};

// Same-kind children merge into one n-ary fusion so that grouping
// parentheses never change the fold order of scores.
void gather_children(const BooleanNode& node, BooleanKind kind,
                     std::vector<const BooleanNode*>& out) {
    for (const auto& child : node.children) {
        if (child->kind == kind)
            gather_children(*child, kind, out);
        else
            out.push_back(child.get());
    }
}

std::vector<double> evaluate(const BooleanNode& node, LeafContext& ctx,
                             const FusionStrategy& fusion) {
    switch (node.kind) {
        case BooleanKind::leaf: {
            std::vector<double> scores = ctx.score(node.text);
            normalize_scores(scores);
            return scores;
        }
        case BooleanKind::negation: {
            std::vector<double> scores = evaluate(*node.children.front(), ctx, fusion);
            for (double& s : scores) s = fusion.negate(s);
            return scores;
        }
        case BooleanKind::conjunction:
        case BooleanKind::disjunction: {
            std::vector<const BooleanNode*> flat;
            gather_children(node, node.kind, flat);
            std::vector<std::vector<double>> child_scores;
            child_scores.reserve(flat.size());
            for (const BooleanNode* child : flat)
                child_scores.push_back(evaluate(*child, ctx, fusion));
            const std::size_t n = child_scores.front().size();
            std::vector<double> fused(n);
            std::vector<double> column(child_scores.size());
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < child_scores.size(); ++c)
                    column[c] = child_scores[c][i];
                fused[i] = node.kind == BooleanKind::conjunction ? fusion.conjoin(column)
                                                                 : fusion.disjoin(column);
            }
            return fused;
        }
    }
    throw ValueError("eval_boolean: unknown node kind");
}

}  // namespace

std::unique_ptr<BooleanNode> make_leaf(std::string text) {
    auto node = std::make_unique<BooleanNode>();
    node->kind = BooleanKind::leaf;
    node->text = std::move(text);
    return node;
}

std::unique_ptr<BooleanNode> make_not(std::unique_ptr<BooleanNode> child) {
    auto node = std::make_unique<BooleanNode>();
    node->kind = BooleanKind::negation;
    node->children.push_back(std::move(child));
    return node;
}

std::unique_ptr<BooleanNode> make_and(std::vector<std::unique_ptr<BooleanNode>> children) {
    auto node = std::make_unique<BooleanNode>();
    node->kind = BooleanKind::conjunction;
    node->children = std::move(children);
    return node;
}

std::unique_ptr<BooleanNode> make_or(std::vector<std::unique_ptr<BooleanNode>> children) {
    auto node = std::make_unique<BooleanNode>();
    node->kind = BooleanKind::disjunction;
    node->children = std::move(children);
    return node;
}

void validate_ast(const BooleanNode& node) {
    switch (node.kind) {
        case BooleanKind::leaf:
            if (node.text.empty()) throw ValueError("BooleanAst: empty leaf");
            if (!node.children.empty()) throw ValueError("BooleanAst: leaf with children");
            return;
        case BooleanKind::negation:
            if (node.children.size() != 1)
                throw ValueError("BooleanAst: NOT takes exactly one operand");
            break;
        case BooleanKind::conjunction:
        case BooleanKind::disjunction:
            if (node.children.size() < 2)
                throw ValueError("BooleanAst: AND/OR need at least two operands");
            break;
    }
    for (const auto& child : node.children) {
        if (!child) throw ValueError("BooleanAst: null child");
        validate_ast(*child);
    }
}

std::unique_ptr<BooleanNode> parse_boolean(const std::string& text) {
    Parser parser(lex(text));
    auto root = parser.run();
    validate_ast(*root);
    return root;
}

std::string to_string(const BooleanNode& node) {
    switch (node.kind) {
        case BooleanKind::leaf:
            return "\"" + node.text + "\"";
        case BooleanKind::negation:
            return "NOT " + to_string(*node.children.front());
        case BooleanKind::conjunction:
        case BooleanKind::disjunction: {
            const char* joiner = node.kind == BooleanKind::conjunction ? " AND " : " OR ";
            std::string out = "(";
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                if (i > 0) out += joiner;
                out += to_string(*node.children[i]);
            }
            out += ")";
            return out;
        }
    }
    return "";
}

const FusionStrategy& default_fusion() {
    static const ProductMaxComplement instance;
    return instance;
}

BooleanEvalResult eval_boolean(const VideoIndex& index, const BooleanNode& ast,
                               const BooleanScorer& scorer, Checkpoint& model,
                               const Vocabulary& vocab, const std::set<std::string>& stopwords,
                               const FusionStrategy& fusion, const std::string& query_id) {
    validate_ast(ast);
    if (index.entries.empty()) throw ValueError("eval_boolean: empty index");
    if (scorer.kind == BooleanScorer::Kind::combined &&
        !(scorer.theta >= 0.0 && scorer.theta <= 1.0))
        throw ValueError("eval_boolean: theta must lie in [0, 1]");
    if (model.vocab_hash != vocab.hash() || index.vocab_hash != vocab.hash())
        throw ValueError("eval_boolean: model, index and vocabulary disagree");
    set_batchnorm_mode(model.params, BatchNormMode::infer);

    LeafContext ctx;
    ctx.index = &index;
    ctx.model = &model;
    ctx.vocab = &vocab;
    ctx.stopwords = &stopwords;
    ctx.scorer = scorer;
    ctx.embeddings = Tensor2(static_cast<int>(index.entries.size()), index.common_dim);
    ctx.concepts = Tensor2(static_cast<int>(index.entries.size()), index.vocab_size);
    for (std::size_t i = 0; i < index.entries.size(); ++i) {
        const IndexEntry& entry = index.entries[i];
        std::copy(entry.embedding.begin(), entry.embedding.end(),
                  ctx.embeddings.row(static_cast<int>(i)).begin());
        std::copy(entry.concepts.begin(), entry.concepts.end(),
                  ctx.concepts.row(static_cast<int>(i)).begin());
    }

    const std::vector<double> fused = evaluate(ast, ctx, fusion);

    BooleanEvalResult result;
    result.concept_fallbacks = ctx.fallbacks;
    result.list.query_id = query_id;
    switch (scorer.kind) {
        case BooleanScorer::Kind::embedding: result.list.scorer = "boolean-embedding"; break;
        case BooleanScorer::Kind::concepts: result.list.scorer = "boolean-concept"; break;
        case BooleanScorer::Kind::combined: result.list.scorer = "boolean-combined"; break;
    }
    result.list.items.reserve(index.entries.size());
    for (std::size_t i = 0; i < index.entries.size(); ++i)
        result.list.items.push_back({index.entries[i].video_id, fused[i]});
    canonical_sort(result.list.items);
    return result;
}

RankedList eval_single_vector(const VideoIndex& index, const std::string& text, Checkpoint& model,
                              const Vocabulary& vocab, const std::set<std::string>& stopwords,
                              double theta, const std::string& query_id) {
    std::string stripped;
    for (const Token& token : lex(text)) {
        if (token.kind != Token::Kind::word) continue;
        if (!stripped.empty()) stripped += ' ';
        stripped += token.text;
    }
    if (stripped.empty()) throw ValueError("eval_single_vector: no sub-query text");
    CombinedSearchResult combined =
        search_combined(index, stripped, model, vocab, stopwords, theta, query_id);
    combined.list.scorer = "single-vector";
    return combined.list;
}

}  // namespace dts
