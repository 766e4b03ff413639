#include "dts/trec.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dts/error.hpp"

namespace dts {

namespace {

// snprintf instead of iostream formatting so the output never depends on a
// global locale.
std::string format_score(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

std::string format_rate(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

bool single_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no,
                            const std::string& what) {
    throw ParseError(path + " line " + std::to_string(line_no) + ": " + what,
                     line_no);
}

// Splits on runs of blanks and rejects trailing junk, so every loader
// reports the same shape errors.
std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> fields;
    for (std::string field; in >> field;) fields.push_back(std::move(field));
    return fields;
}

}  // namespace

void save_run_file(const std::string& path, const RunFile& run, int depth) {
    if (depth < 1) throw ValueError("save_run_file: depth must be positive");
    if (!single_token(run.run_tag))
        throw ValueError("save_run_file: run tag must be one non-empty token");
    std::set<std::string> seen_queries;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write run file: " + path);
    for (const RankedList& list : run.queries) {
        if (!single_token(list.query_id))
            throw ValueError("save_run_file: query id must be one non-empty token");
        if (!seen_queries.insert(list.query_id).second)
            throw ValueError("save_run_file: duplicate query '" + list.query_id + "'");
        const std::size_t n =
            std::min(list.items.size(), static_cast<std::size_t>(depth));
        for (std::size_t i = 0; i < n; ++i) {
            const ScoredVideo& item = list.items[i];
            if (!single_token(item.video_id))
                throw ValueError("save_run_file: video id must be one non-empty token");
            if (!std::isfinite(item.score))
                throw ValueError("save_run_file: non-finite score for '" +
                                 item.video_id + "'");
            out << list.query_id << " Q0 " << item.video_id << ' ' << (i + 1)
                << ' ' << format_score(item.score) << ' ' << run.run_tag << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

RunFile load_run_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run file: " + path);
    RunFile run;
    std::map<std::string, std::size_t> slot_of;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line); ) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 6)
            fail_line(path, line_no,
                      "expected 'query_id Q0 video_id rank score run_tag'");
        const std::string& query_id = fields[0];
        const std::string& video_id = fields[2];
        const std::string& tag = fields[5];
        if (fields[1] != "Q0") fail_line(path, line_no, "second field must be Q0");
        long rank = 0;
        double score = 0.0;
        try {
            std::size_t used = 0;
            rank = std::stol(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("rank");
        } catch (const std::exception&) {
            fail_line(path, line_no, "rank '" + fields[3] + "' is not an integer");
        }
        try {
            std::size_t used = 0;
            score = std::stod(fields[4], &used);
            if (used != fields[4].size()) throw std::invalid_argument("score");
        } catch (const std::exception&) {
            fail_line(path, line_no, "score '" + fields[4] + "' is not a number");
        }
        if (!std::isfinite(score))
            fail_line(path, line_no, "score must be finite");
        if (run.queries.empty()) {
            run.run_tag = tag;
        } else if (tag != run.run_tag) {
            fail_line(path, line_no, "run tag '" + tag + "' does not match '" +
                                         run.run_tag + "'");
        }
        auto [it, inserted] = slot_of.try_emplace(query_id, run.queries.size());
        if (inserted) {
            RankedList list;
            list.query_id = query_id;
            list.scorer = tag;
            run.queries.push_back(std::move(list));
        }
        RankedList& list = run.queries[it->second];
        if (rank != static_cast<long>(list.items.size()) + 1)
            fail_line(path, line_no,
                      "rank " + std::to_string(rank) + " for query '" + query_id +
                          "' breaks the 1..n sequence");
        if (!list.items.empty() && score > list.items.back().score)
            fail_line(path, line_no, "score increases within query '" + query_id + "'");
        list.items.push_back(ScoredVideo{video_id, score});
    }
    if (run.queries.empty()) throw ParseError(path + ": no result lines", 0);
    for (const RankedList& list : run.queries) {
        std::set<std::string> ids;
        for (const ScoredVideo& item : list.items) {
            if (!ids.insert(item.video_id).second)
                throw ParseError(path + ": video '" + item.video_id +
                                     "' listed twice for query '" + list.query_id + "'",
                                 0);
        }
    }
    return run;
}

void save_strata(const std::string& path, const std::vector<SamplingStratum>& strata) {
    if (strata.empty()) throw ValueError("save_strata: empty strata table");
    JudgmentSet probe;
    probe.query_id = "probe";
    probe.strata = strata;
    probe.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write strata file: " + path);
    for (const SamplingStratum& s : strata) {
        if (!single_token(s.id))
            throw ValueError("save_strata: stratum id must be one non-empty token");
        out << s.id << ' ' << s.depth_from << ' ' << s.depth_to << ' '
            << format_rate(s.rate) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<SamplingStratum> load_strata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open strata file: " + path);
    std::vector<SamplingStratum> strata;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line); ) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 4)
            fail_line(path, line_no,
                      "expected 'stratum_id depth_from depth_to rate'");
        SamplingStratum s;
        s.id = fields[0];
        try {
            std::size_t used = 0;
            s.depth_from = std::stoi(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("from");
            s.depth_to = std::stoi(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("to");
            s.rate = std::stod(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("rate");
        } catch (const std::exception&) {
            fail_line(path, line_no, "depths must be integers and rate a number");
        }
        strata.push_back(std::move(s));
    }
    if (strata.empty()) throw ParseError(path + ": no strata lines", 0);
    JudgmentSet probe;
    probe.query_id = "probe";
    probe.strata = strata;
    try {
        probe.validate();
    } catch (const ValueError& err) {
        throw ParseError(path + ": " + err.what(), 0);
    }
    return strata;
}

std::map<std::string, JudgmentSet> load_qrels(const std::string& qrels_path,
                                              const std::string& strata_path) {
    std::vector<SamplingStratum> strata;
    std::set<std::string> known_strata;
    if (!strata_path.empty()) {
        strata = load_strata(strata_path);
        for (const SamplingStratum& s : strata) known_strata.insert(s.id);
    }
    std::ifstream in(qrels_path);
    if (!in) throw IoError("cannot open qrels file: " + qrels_path);
    std::map<std::string, JudgmentSet> judgments;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line); ) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 4)
            fail_line(qrels_path, line_no,
                      "expected 'query_id video_id rel stratum_id'");
        const std::string& query_id = fields[0];
        const std::string& video_id = fields[1];
        const std::string& rel_text = fields[2];
        const std::string& stratum_id = fields[3];
        if (rel_text != "0" && rel_text != "1")
            fail_line(qrels_path, line_no,
                      "relevance '" + rel_text + "' must be 0 or 1");
        if (!known_strata.empty() && known_strata.count(stratum_id) == 0)
            fail_line(qrels_path, line_no,
                      "unknown stratum '" + stratum_id + "'");
        JudgmentSet& set = judgments[query_id];
        if (set.query_id.empty()) {
            set.query_id = query_id;
            set.strata = strata;
        }
        if (!set.relevance.emplace(video_id, rel_text == "1").second)
            fail_line(qrels_path, line_no,
                      "video '" + video_id + "' judged twice for query '" +
                          query_id + "'");
    }
    if (judgments.empty()) throw ParseError(qrels_path + ": no judgment lines", 0);
    for (auto& [query_id, set] : judgments) set.validate();
    return judgments;
}

void save_qrels(const std::string& qrels_path,
                const std::map<std::string, JudgmentSet>& judgments,
                const std::string& stratum_id) {
    if (judgments.empty()) throw ValueError("save_qrels: nothing to write");
    if (!single_token(stratum_id))
        throw ValueError("save_qrels: stratum id must be one non-empty token");
    std::ofstream out(qrels_path);
    if (!out) throw IoError("cannot write qrels file: " + qrels_path);
    for (const auto& [query_id, set] : judgments) {
        if (!single_token(query_id))
            throw ValueError("save_qrels: query id must be one non-empty token");
        for (const auto& [video_id, relevant] : set.relevance) {
            if (!single_token(video_id))
                throw ValueError("save_qrels: video id must be one non-empty token");
            out << query_id << ' ' << video_id << ' ' << (relevant ? 1 : 0) << ' '
                << stratum_id << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + qrels_path);
}

}  // namespace dts
