#pragma once

#include <map>
#include <string>
#include <vector>

#include "dts/eval.hpp"
#include "dts/index.hpp"

namespace dts {

// A retrieval run: one ranked list per query, in submission order.
struct RunFile {
    std::string run_tag;
    std::vector<RankedList> queries;
};

// Lines "qid Q0 video_id rank score run_tag" with 1-based ranks and scores
// printed to six decimals; each list is truncated to `depth`. Loading
// checks rank continuity and non-increasing scores per query, but keeps
// the file's order: six-decimal rounding can merge close scores, so the
// canonical tie order cannot be re-checked after the fact.
void save_run_file(const std::string& path, const RunFile& run, int depth = 1000);
RunFile load_run_file(const std::string& path);

// Judgments, one "qid video_id rel stratum_id" line per judged pair with
// rel in {0, 1}, plus a strata table "stratum_id depth_from depth_to rate"
// shared by all queries. An empty strata path means fully judged lists;
// the stratum column is still present and is validated when a table is
// given, but each video's effective stratum comes from its rank range at
// evaluation time.
std::map<std::string, JudgmentSet> load_qrels(const std::string& qrels_path,
                                              const std::string& strata_path = "");
// Writes every judgment under one stratum id; the writer exists for fully
// judged synthetic ground truth, where a single catch-all stratum is
// accurate.
void save_qrels(const std::string& qrels_path,
                const std::map<std::string, JudgmentSet>& judgments,
                const std::string& stratum_id = "all");
void save_strata(const std::string& path, const std::vector<SamplingStratum>& strata);
std::vector<SamplingStratum> load_strata(const std::string& path);

}  // namespace dts
