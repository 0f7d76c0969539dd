#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spark/policy.hpp"
#include "spark/tasks.hpp"

namespace spark {

// Confusion counts for self-judgment, positive class = actually correct.
struct JudgeStats {
    long true_pos = 0;
    long false_pos = 0;
    long false_neg = 0;
    long true_neg = 0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

// Fills the derived metrics from the counts; 0-denominator cases give 0.
JudgeStats finalize_judge_stats(long tp, long fp, long fn, long tn);

// Single-pass solve per task, then the policy's own JudgePoint verdict on
// its answer; ground truth correctness defines the positive class.
JudgeStats judge_stats(const PolicyModel& policy, const TaskSet& tasks, std::uint64_t seed);

nlohmann::json judge_stats_to_json(const JudgeStats& s);

// Appends one JSON object per line; tolerates a truncated trailing line
// when reading back.
void write_metrics(const std::vector<nlohmann::json>& records, const std::string& path);
std::vector<nlohmann::json> read_metrics(const std::string& path);

}  // namespace spark
