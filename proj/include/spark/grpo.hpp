#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spark/recycle.hpp"
#include "spark/rollout.hpp"

namespace spark {

struct AdvantageSet {
    std::vector<double> values;
    double mean_reward = 0.0;  // r-bar
    double std_dev = 0.0;      // s = sqrt(variance + epsilon)
    double epsilon = 0.0;
};

// Group-standardized advantages with population (1/n) variance:
// A_i = (r_i - mean) / sqrt(var + epsilon).
AdvantageSet compute_advantages(const std::vector<int>& rewards, double epsilon);

struct StepReport {
    int step_index = 0;
    double mean_reward = 0.0;
    double mean_advantage_abs = 0.0;
    double kl_value = 0.0;
    double objective_estimate = 0.0;
    std::map<std::string, int> recycled_counts;
};

nlohmann::json step_report_to_json(const StepReport& r);

struct TrainConfig {
    int group_size = 8;
    double epsilon = 1e-6;
    double lambda = 0.01;
    double step_size = 0.1;
    int recycle_quota = 16;
    MixConfig mix;
    bool source_answer = true;
    bool source_cot = true;
    int max_pairs = 8;
};

// REINFORCE-with-advantages gradient for one scored group, plus the
// analytic KL-to-reference term at each visited prompt (SolveCot once,
// each distinct SolveAnswer prompt once). lambda >= 0; pass ref=nullptr
// or lambda=0 to skip the KL term.
GradientAccumulator group_gradient(const RolloutGroup& group, const AdvantageSet& adv,
                                   const PolicyModel& policy, const ReferencePolicy* ref,
                                   double lambda);

// Same estimator for a recycled judgment group (single-stage).
void add_judgment_group_gradient(GradientAccumulator& acc, const JudgmentGroup& group,
                                 const AdvantageSet& adv, const PolicyModel& policy,
                                 const ReferencePolicy* ref, double lambda);

// One optimization step over a task batch: sample groups, score, build
// advantages and gradients, recycle the scored groups into judgment tasks,
// drain up to recycle_quota of them through the same pipeline, then apply
// a single gradient update.
StepReport train_step(PolicyModel& policy, const ReferencePolicy& ref,
                      const std::vector<Task>& batch, RecycleQueue& queue,
                      const TrainConfig& config, int step_index, Rng& rng);

}  // namespace spark
