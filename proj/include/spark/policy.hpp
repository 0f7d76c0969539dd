#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spark/rng.hpp"
#include "spark/tasks.hpp"

namespace spark {

enum class Mode { SolveCot, SolveAnswer, JudgePoint, JudgePair, Reflect };
enum class CandidateSource { Answer, Cot };

std::string mode_name(Mode m);

// Family parameters shared by every task a policy will see; fixes the
// per-mode action vocabularies.
struct FamilySpec {
    Family family = Family::ModArith;
    int modulus = 10;
    ModOp op = ModOp::Add;
    int list_len = 4;
    int vmin = 0;
    int vmax = 9;

    int answer_vocab() const;
    int cot_vocab() const;
    int vocab_for(Mode m) const;

    static FamilySpec from_task(const Task& t);
    nlohmann::json to_json() const;
    static FamilySpec from_json(const nlohmann::json& j);
};

// Structured prompt: a task plus a mode plus the mode's embedded payload.
// Gold fields of the task are never encoded into keys or features.
struct PromptContext {
    Task task;
    Mode mode = Mode::SolveCot;
    int cot = -1;             // SolveAnswer: the sampled CoT action
    int candidate = -1;       // JudgePoint candidate / Reflect rejected answer
    CandidateSource candidate_source = CandidateSource::Answer;
    int candidate_a = -1;     // JudgePair, presented first
    int candidate_b = -1;     // JudgePair, presented second
    CandidateSource pair_source = CandidateSource::Answer;

    // deterministic key over question + mode + payload, gold-blind
    std::string context_key() const;
    int action_count() const;
};

PromptContext make_solve_cot(const Task& t);
PromptContext make_solve_answer(const Task& t, int cot_action);
PromptContext make_judge_point(const Task& t, int candidate, CandidateSource src);
PromptContext make_judge_pair(const Task& t, int first, int second, CandidateSource src);
PromptContext make_reflect(const Task& t, int rejected_answer);

// Answer actions are indices into [0, answer_vocab); values are the
// family's actual answers (offset by vmin for MaxOfList).
int answer_action_to_value(const Task& t, int action);
int answer_value_to_action(const Task& t, int value);

struct ActionDistribution {
    std::vector<double> logits;
    std::vector<double> probabilities;  // softmax(logits)
};

ActionDistribution softmax_distribution(std::vector<double> logits);

// Additive gradient buffer keyed by parameter block name.
class GradientAccumulator {
public:
    std::vector<double>& block(const std::string& name, std::size_t size);
    const std::map<std::string, std::vector<double>>& blocks() const { return blocks_; }
    void note_sample() { ++sample_count_; }
    long sample_count() const { return sample_count_; }
    bool all_finite() const;
    bool empty() const { return blocks_.empty(); }
    void add(const GradientAccumulator& other);

private:
    std::map<std::string, std::vector<double>> blocks_;
    long sample_count_ = 0;
};

class PolicyModel {
public:
    virtual ~PolicyModel() = default;

    virtual ActionDistribution action_distribution(const PromptContext& prompt) const = 0;

    // Accumulates scale * J^T dlogits where J is the Jacobian of the
    // prompt's logits w.r.t. the parameters.
    virtual void accumulate_logit_grad(const PromptContext& prompt,
                                       const std::vector<double>& dlogits, double scale,
                                       GradientAccumulator& acc) const = 0;

    // Ascent step: theta += step_size * acc. Throws NumericError on any
    // non-finite entry, leaving parameters untouched.
    virtual void apply_gradient(const GradientAccumulator& acc, double step_size) = 0;

    virtual std::unique_ptr<PolicyModel> clone() const = 0;
    virtual std::string kind() const = 0;
    virtual nlohmann::json params_to_json() const = 0;

    double log_prob(const PromptContext& prompt, int action) const;
    std::pair<int, double> sample_action(const PromptContext& prompt, Rng& rng) const;
    void grad_log_prob(const PromptContext& prompt, int action, double scale,
                       GradientAccumulator& acc) const;
};

struct InitSpec {
    double noise_scale = 0.0;  // 0 -> uniform logits
    std::uint64_t seed = 0;
};

// One logit row per (context key, mode); rows materialize lazily and
// deterministically from the init spec, so row creation order never
// changes the policy.
class TabularPolicy : public PolicyModel {
public:
    explicit TabularPolicy(InitSpec init = {});

    ActionDistribution action_distribution(const PromptContext& prompt) const override;
    void accumulate_logit_grad(const PromptContext& prompt, const std::vector<double>& dlogits,
                               double scale, GradientAccumulator& acc) const override;
    void apply_gradient(const GradientAccumulator& acc, double step_size) override;
    std::unique_ptr<PolicyModel> clone() const override;
    std::string kind() const override { return "tabular"; }
    nlohmann::json params_to_json() const override;

    static std::unique_ptr<TabularPolicy> from_json(const nlohmann::json& j);

private:
    const std::vector<double>& row(const PromptContext& prompt) const;

    InitSpec init_;
    mutable std::mutex mu_;
    mutable std::map<std::string, std::vector<double>> rows_;
};

// Single-hidden-layer tanh network over a fixed prompt encoding, with a
// shared trunk and one output head per mode.
class MlpPolicy : public PolicyModel {
public:
    MlpPolicy(const FamilySpec& spec, int hidden_dim, std::uint64_t seed);

    ActionDistribution action_distribution(const PromptContext& prompt) const override;
    void accumulate_logit_grad(const PromptContext& prompt, const std::vector<double>& dlogits,
                               double scale, GradientAccumulator& acc) const override;
    void apply_gradient(const GradientAccumulator& acc, double step_size) override;
    std::unique_ptr<PolicyModel> clone() const override;
    std::string kind() const override { return "mlp"; }
    nlohmann::json params_to_json() const override;

    static std::unique_ptr<MlpPolicy> from_json(const nlohmann::json& j);

    static int feature_dim();
    const FamilySpec& family_spec() const { return spec_; }

private:
    std::vector<double> features(const PromptContext& prompt) const;
    std::vector<double> hidden(const std::vector<double>& x) const;

    FamilySpec spec_;
    int hidden_dim_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> w1_;  // hidden x feature, row-major
    std::vector<double> b1_;
    std::map<std::string, std::vector<double>> head_w_;  // per mode, vocab x hidden
    std::map<std::string, std::vector<double>> head_b_;
};

// Frozen deep copy of a policy; outputs never change after snapshot.
class ReferencePolicy {
public:
    explicit ReferencePolicy(const PolicyModel& policy) : model_(policy.clone()) {}

    ActionDistribution action_distribution(const PromptContext& prompt) const {
        return model_->action_distribution(prompt);
    }
    nlohmann::json params_to_json() const;

private:
    std::unique_ptr<const PolicyModel> model_;
};

ReferencePolicy snapshot_reference(const PolicyModel& policy);

// Exact discrete KL(policy(.|prompt) || ref(.|prompt)).
double kl_to_reference(const PolicyModel& policy, const ReferencePolicy& ref,
                       const PromptContext& prompt);

// Accumulates scale * grad_theta KL(policy || ref) at the prompt.
void grad_kl_to_reference(const PolicyModel& policy, const ReferencePolicy& ref,
                          const PromptContext& prompt, double scale, GradientAccumulator& acc);

// Versioned checkpoint blob; save/load round-trips exactly.
nlohmann::json policy_to_checkpoint(const PolicyModel& policy);
std::unique_ptr<PolicyModel> policy_from_checkpoint(const nlohmann::json& j);
void save_checkpoint(const PolicyModel& policy, const std::string& path);
std::unique_ptr<PolicyModel> load_checkpoint(const std::string& path);

}  // namespace spark
