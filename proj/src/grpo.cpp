#include "spark/grpo.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"

namespace spark {

using nlohmann::json;

AdvantageSet compute_advantages(const std::vector<int>& rewards, double epsilon) {
    if (rewards.size() < 2) throw ParamError("compute_advantages: need at least 2 rewards");
    if (epsilon <= 0) throw ParamError("compute_advantages: epsilon must be > 0");
    AdvantageSet a;
    a.epsilon = epsilon;
    double n = static_cast<double>(rewards.size());
    double sum = 0.0;
    for (int r : rewards) sum += r;
    a.mean_reward = sum / n;
    double var = 0.0;
    for (int r : rewards) {
        double d = r - a.mean_reward;
        var += d * d;
    }
    var /= n;
    a.std_dev = std::sqrt(var + epsilon);
    a.values.reserve(rewards.size());
    for (int r : rewards) a.values.push_back((r - a.mean_reward) / a.std_dev);
    return a;
}

json step_report_to_json(const StepReport& r) {
    return json{{"step_index", r.step_index},
                {"mean_reward", r.mean_reward},
                {"mean_advantage_abs", r.mean_advantage_abs},
                {"kl_value", r.kl_value},
                {"objective_estimate", r.objective_estimate},
                {"recycled_counts", r.recycled_counts}};
}

GradientAccumulator group_gradient(const RolloutGroup& group, const AdvantageSet& adv,
                                   const PolicyModel& policy, const ReferencePolicy* ref,
                                   double lambda) {
    if (group.samples.size() != adv.values.size())
        throw ContractError("group_gradient: group/advantage length mismatch");
    if (lambda < 0) throw ParamError("group_gradient: lambda must be >= 0");
    GradientAccumulator acc;
    std::set<std::string> answer_prompts_seen;
    auto cot_prompt = make_solve_cot(group.task);
    for (std::size_t i = 0; i < group.samples.size(); ++i) {
        const RolloutSample& s = group.samples[i];
        double a = adv.values[i];
        policy.grad_log_prob(cot_prompt, s.cot_action, a, acc);
        auto ans_prompt = make_solve_answer(group.task, s.cot_action);
        policy.grad_log_prob(ans_prompt, answer_value_to_action(group.task, s.answer_action), a,
                             acc);
        if (ref && lambda > 0 && answer_prompts_seen.insert(ans_prompt.context_key()).second)
            grad_kl_to_reference(policy, *ref, ans_prompt, -lambda, acc);
    }
    if (ref && lambda > 0) grad_kl_to_reference(policy, *ref, cot_prompt, -lambda, acc);
    return acc;
}

void add_judgment_group_gradient(GradientAccumulator& acc, const JudgmentGroup& group,
                                 const AdvantageSet& adv, const PolicyModel& policy,
                                 const ReferencePolicy* ref, double lambda) {
    if (group.actions.size() != adv.values.size())
        throw ContractError("judgment group/advantage length mismatch");
    for (std::size_t i = 0; i < group.actions.size(); ++i)
        policy.grad_log_prob(group.task.prompt, group.actions[i], adv.values[i], acc);
    if (ref && lambda > 0) grad_kl_to_reference(policy, *ref, group.task.prompt, -lambda, acc);
}

StepReport train_step(PolicyModel& policy, const ReferencePolicy& ref,
                      const std::vector<Task>& batch, RecycleQueue& queue,
                      const TrainConfig& config, int step_index, Rng& rng) {
    if (batch.empty()) throw ParamError("train_step: empty batch");
    StepReport report;
    report.step_index = step_index;
    report.recycled_counts = {{"pointwise", 0}, {"pairwise", 0}, {"reflect", 0}};

    GradientAccumulator acc;
    double reward_sum = 0.0, adv_abs_sum = 0.0, kl_sum = 0.0;
    long reward_count = 0, kl_count = 0, group_count = 0;

    for (const Task& task : batch) {
        RolloutGroup group = sample_group(policy, task, config.group_size, rng);
        AdvantageSet adv = compute_advantages(group.rewards, config.epsilon);
        acc.add(group_gradient(group, adv, policy, &ref, config.lambda));
        ++group_count;

        for (int r : group.rewards) reward_sum += r;
        reward_count += static_cast<long>(group.rewards.size());
        for (double a : adv.values) adv_abs_sum += std::fabs(a);
        kl_sum += kl_to_reference(policy, ref, make_solve_cot(task));
        ++kl_count;

        // recycle the scored group into judgment tasks for later steps
        std::vector<RecycledSample> point, pair, reflect;
        for (CandidateSource src : {CandidateSource::Answer, CandidateSource::Cot}) {
            if (src == CandidateSource::Answer && !config.source_answer) continue;
            if (src == CandidateSource::Cot && !config.source_cot) continue;
            auto p = build_pointwise(group, src);
            point.insert(point.end(), p.begin(), p.end());
            auto pr = build_pairwise(group, src, config.max_pairs, rng);
            pair.insert(pair.end(), pr.begin(), pr.end());
        }
        if (config.source_answer || config.source_cot) reflect = build_reflect(group);

        Provenance prov{task.id, group_hash(group), step_index};
        RecycleBatch rb = assemble_on_policy(std::move(point), std::move(pair),
                                             std::move(reflect), config.mix, rng, prov);
        queue.push(recycled_to_tasks(rb));
    }

    for (const JudgmentTask& jt : queue.drain(config.recycle_quota)) {
        JudgmentGroup jg = sample_judgment_group(policy, jt, config.group_size, rng);
        AdvantageSet adv = compute_advantages(jg.rewards, config.epsilon);
        add_judgment_group_gradient(acc, jg, adv, policy, &ref, config.lambda);
        ++group_count;
        switch (jt.prompt.mode) {
            case Mode::JudgePoint: report.recycled_counts["pointwise"]++; break;
            case Mode::JudgePair: report.recycled_counts["pairwise"]++; break;
            case Mode::Reflect: report.recycled_counts["reflect"]++; break;
            default: throw ContractError("unexpected recycled mode");
        }
    }

    // batch mean over groups, so the update scale does not grow with the
    // recycled workload
    if (!acc.empty()) policy.apply_gradient(acc, config.step_size / group_count);

    report.mean_reward = reward_count ? reward_sum / reward_count : 0.0;
    report.mean_advantage_abs = reward_count ? adv_abs_sum / reward_count : 0.0;
    report.kl_value = kl_count ? kl_sum / kl_count : 0.0;
    report.objective_estimate = report.mean_reward - config.lambda * report.kl_value;
    return report;
}

}  // namespace spark
