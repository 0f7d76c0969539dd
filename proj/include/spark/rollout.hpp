#pragma once

#include <string>
#include <vector>

#include "spark/policy.hpp"
#include "spark/tasks.hpp"

namespace spark {

struct RolloutSample {
    int cot_action = 0;     // CoT value (ModArith: unreduced sum/product; MaxOfList: index)
    int answer_action = 0;  // answer value in the family's range
    double cot_log_prob = 0.0;
    double answer_log_prob = 0.0;
};

struct RolloutGroup {
    Task task;
    std::vector<RolloutSample> samples;
    std::vector<int> rewards;      // verify_answer per sample
    std::vector<int> cot_rewards;  // verify_cot per sample
};

// Step 1-2: n two-stage samples (CoT, then answer conditioned on it),
// scored with the verifier. n >= 2 because a singleton group has no
// contrast to standardize against.
RolloutGroup sample_group(const PolicyModel& policy, const Task& task, int n, Rng& rng);

// A recycled judgment item re-expressed as a verifiable single-action task.
struct JudgmentTask {
    std::string id;
    PromptContext prompt;
    int gold_action = 0;
};

struct JudgmentGroup {
    JudgmentTask task;
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<int> rewards;  // 1 iff action == gold_action
};

JudgmentGroup sample_judgment_group(const PolicyModel& policy, const JudgmentTask& task, int n,
                                    Rng& rng);

}  // namespace spark
