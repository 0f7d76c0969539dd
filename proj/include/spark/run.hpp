#pragma once

#include <memory>
#include <string>

#include "spark/config.hpp"
#include "spark/metrics.hpp"
#include "spark/policy.hpp"

namespace spark {

std::unique_ptr<PolicyModel> build_policy(const RunConfig& cfg);

// Generates or loads the task set per config.
TaskSet resolve_tasks(const RunConfig& cfg);

struct TrainResult {
    std::unique_ptr<PolicyModel> policy;
    double final_mean_reward = 0.0;
};

// Full training loop: config.steps train_steps over round-robin batches,
// one StepReport appended to the metrics sink per step.
TrainResult run_training(const RunConfig& cfg, bool write_outputs = true);

// Single-pass solve accuracy over the task set.
double eval_accuracy(const PolicyModel& policy, const TaskSet& tasks, std::uint64_t seed);

// CLI entry points; return process exit codes (0 ok, 1 usage/config,
// 2 I/O, 3 numeric).
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_tts(const RunConfig& cfg, const std::string& dump_traces_path);
int cmd_judge_stats(const RunConfig& cfg);
int cmd_recycle_dump(const RunConfig& cfg, const std::string& out_path);

}  // namespace spark
