#include "dts/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "dts/error.hpp"
#include "dts/hash.hpp"

namespace dts {

namespace {

bool is_word_byte(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (is_word_byte(c)) {
            current.push_back(lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words{
        "a",       "about",   "above",  "after",   "again",  "against", "all",    "am",
        "an",      "and",     "any",    "are",     "as",     "at",      "be",     "because",
        "been",    "before",  "being",  "below",   "between", "both",   "but",    "by",
        "can",     "did",     "do",     "does",    "doing",  "down",    "during", "each",
        "few",     "for",     "from",   "further", "had",    "has",     "have",   "having",
        "he",      "her",     "here",   "hers",    "him",    "his",     "how",    "i",
        "if",      "in",      "into",   "is",      "it",     "its",     "itself", "just",
        "me",      "more",    "most",   "my",      "no",     "nor",     "not",    "now",
        "of",      "off",     "on",     "once",    "only",   "or",      "other",  "our",
        "ours",    "out",     "over",   "own",     "same",   "she",     "so",     "some",
        "such",    "than",    "that",   "the",     "their",  "theirs",  "them",   "then",
        "there",   "these",   "they",   "this",    "those",  "through", "to",     "too",
        "under",   "until",   "up",     "very",    "was",    "we",      "were",   "what",
        "when",    "where",   "which",  "while",   "who",    "whom",    "why",    "will",
        "with",    "you",     "your",   "yours"};
    return words;
}

std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file: " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        for (const std::string& t : tokenize(line)) words.insert(t);
    }
    return words;
}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const VocabEntry& e = entries_[i];
        if (e.token.empty()) throw ValueError("vocabulary: empty token");
        if (e.caption_count < 1) throw ValueError("vocabulary: token '" + e.token + "' has count < 1");
        if (i > 0) {
            const VocabEntry& prev = entries_[i - 1];
            const bool ordered = prev.caption_count > e.caption_count ||
                                 (prev.caption_count == e.caption_count && prev.token < e.token);
            if (!ordered)
                throw ValueError("vocabulary: entries out of canonical order at '" + e.token + "'");
        }
        if (!index_.emplace(e.token, static_cast<int>(i)).second)
            throw ValueError("vocabulary: duplicate token '" + e.token + "'");
    }
}

const std::string& Vocabulary::token(int index) const {
    if (index < 0 || index >= size()) throw ValueError("vocabulary: index out of range");
    return entries_[static_cast<std::size_t>(index)].token;
}

int Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> Vocabulary::map_tokens(std::span<const std::string> tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) {
        const int id = index_of(t);
        if (id >= 0) ids.push_back(id);
    }
    return ids;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = fnv1a64("");
    for (const VocabEntry& e : entries_) {
        std::ostringstream line;
        line << e.token << '\t' << e.caption_count << '\n';
        h = fnv1a64(line.str(), h);
    }
    return h;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    for (const VocabEntry& e : entries_) out << e.token << '\t' << e.caption_count << '\n';
    if (!out) throw IoError("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::vector<VocabEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("vocabulary line missing tab separator", line_no);
        VocabEntry e;
        e.token = line.substr(0, tab);
        try {
            e.caption_count = std::stoi(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError("vocabulary count is not an integer", line_no);
        }
        entries.push_back(std::move(e));
    }
    return Vocabulary(std::move(entries));
}

Vocabulary build_vocabulary(std::span<const std::string> captions, int min_count,
                            const std::set<std::string>& stopwords) {
    if (captions.empty()) throw ValueError("build_vocabulary: no captions");
    if (min_count < 1) throw ValueError("build_vocabulary: min_count must be >= 1");

    // Each caption contributes at most once per token.
    std::map<std::string, int> counts;
    for (const std::string& caption : captions) {
        std::set<std::string> seen;
        for (const std::string& t : tokenize(caption)) seen.insert(t);
        for (const std::string& t : seen) ++counts[t];
    }

    std::vector<VocabEntry> kept;
    for (const auto& [token, count] : counts) {
        if (count < min_count) continue;
        if (stopwords.count(token)) continue;
        kept.push_back(VocabEntry{token, count});
    }
    std::sort(kept.begin(), kept.end(), [](const VocabEntry& a, const VocabEntry& b) {
        if (a.caption_count != b.caption_count) return a.caption_count > b.caption_count;
        return a.token < b.token;
    });
    if (kept.empty())
        throw ValueError("build_vocabulary: no token survives the frequency and stopword rules");
    return Vocabulary(std::move(kept));
}

LabelVector caption_labels(std::span<const std::string> captions, const Vocabulary& vocab) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(vocab.size()), 0);
    for (const std::string& caption : captions) {
        for (const std::string& t : tokenize(caption)) {
            const int id = vocab.index_of(t);
            if (id >= 0) bits[static_cast<std::size_t>(id)] = 1;
        }
    }
    return make_label_vector(bits);
}

}  // namespace dts
