#include "spark/rollout.hpp"

#include "spark/errors.hpp"
#include "spark/verifier.hpp"

namespace spark {

RolloutGroup sample_group(const PolicyModel& policy, const Task& task, int n, Rng& rng) {
    if (n < 2) throw ParamError("sample_group: group size must be >= 2");
    RolloutGroup g;
    g.task = task;
    g.samples.reserve(n);
    for (int i = 0; i < n; ++i) {
        RolloutSample s;
        auto [cot, cot_lp] = policy.sample_action(make_solve_cot(task), rng);
        auto [ans, ans_lp] = policy.sample_action(make_solve_answer(task, cot), rng);
        s.cot_action = cot;
        s.answer_action = answer_action_to_value(task, ans);
        s.cot_log_prob = cot_lp;
        s.answer_log_prob = ans_lp;
        g.rewards.push_back(verify_answer(s.answer_action, task));
        g.cot_rewards.push_back(verify_cot(s.cot_action, task));
        g.samples.push_back(s);
    }
    return g;
}

JudgmentGroup sample_judgment_group(const PolicyModel& policy, const JudgmentTask& task, int n,
                                    Rng& rng) {
    if (n < 2) throw ParamError("sample_judgment_group: group size must be >= 2");
    JudgmentGroup g;
    g.task = task;
    for (int i = 0; i < n; ++i) {
        auto [a, lp] = policy.sample_action(task.prompt, rng);
        g.actions.push_back(a);
        g.log_probs.push_back(lp);
        g.rewards.push_back(a == task.gold_action ? 1 : 0);
    }
    return g;
}

}  // namespace spark
