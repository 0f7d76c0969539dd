#include "spark/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"

namespace spark {

using nlohmann::json;

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::SolveCot: return "solve_cot";
        case Mode::SolveAnswer: return "solve_answer";
        case Mode::JudgePoint: return "judge_point";
        case Mode::JudgePair: return "judge_pair";
        case Mode::Reflect: return "reflect";
    }
    throw ContractError("bad mode");
}

int FamilySpec::answer_vocab() const {
    if (family == Family::ModArith) return modulus;
    return vmax - vmin + 1;
}

int FamilySpec::cot_vocab() const {
    if (family == Family::ModArith) {
        if (op == ModOp::Add) return 2 * (modulus - 1) + 1;
        return (modulus - 1) * (modulus - 1) + 1;
    }
    return list_len;
}

int FamilySpec::vocab_for(Mode m) const {
    switch (m) {
        case Mode::SolveCot: return cot_vocab();
        case Mode::SolveAnswer:
        case Mode::Reflect: return answer_vocab();
        case Mode::JudgePoint:
        case Mode::JudgePair: return 2;
    }
    throw ContractError("bad mode");
}

FamilySpec FamilySpec::from_task(const Task& t) {
    FamilySpec s;
    s.family = t.family;
    if (t.family == Family::ModArith) {
        s.modulus = t.mod_arith.modulus;
        s.op = t.mod_arith.op;
    } else {
        s.list_len = static_cast<int>(t.max_of_list.values.size());
        s.vmin = t.max_of_list.vmin;
        s.vmax = t.max_of_list.vmax;
    }
    return s;
}

json FamilySpec::to_json() const {
    return json{{"family", family_name(family)},
                {"modulus", modulus},
                {"op", op == ModOp::Add ? "add" : "mul"},
                {"list_len", list_len},
                {"vmin", vmin},
                {"vmax", vmax}};
}

FamilySpec FamilySpec::from_json(const json& j) {
    FamilySpec s;
    s.family = family_from_name(j.at("family").get<std::string>());
    s.modulus = j.at("modulus").get<int>();
    s.op = j.at("op").get<std::string>() == "mul" ? ModOp::Mul : ModOp::Add;
    s.list_len = j.at("list_len").get<int>();
    s.vmin = j.at("vmin").get<int>();
    s.vmax = j.at("vmax").get<int>();
    return s;
}

int PromptContext::action_count() const {
    switch (mode) {
        case Mode::SolveCot: return task.cot_vocab();
        case Mode::SolveAnswer:
        case Mode::Reflect: return task.answer_vocab();
        case Mode::JudgePoint:
        case Mode::JudgePair: return 2;
    }
    throw ContractError("bad mode");
}

std::string PromptContext::context_key() const {
    std::ostringstream k;
    k << family_name(task.family) << "|";
    if (task.family == Family::ModArith) {
        k << task.mod_arith.a << "," << task.mod_arith.b << ","
          << task.mod_arith.modulus << "," << (task.mod_arith.op == ModOp::Add ? "+" : "*");
    } else {
        for (std::size_t i = 0; i < task.max_of_list.values.size(); ++i) {
            if (i) k << ",";
            k << task.max_of_list.values[i];
        }
    }
    k << "|" << mode_name(mode);
    switch (mode) {
        case Mode::SolveCot: break;
        case Mode::SolveAnswer: k << "|cot=" << cot; break;
        case Mode::JudgePoint:
            k << "|" << (candidate_source == CandidateSource::Cot ? "cot" : "ans")
              << "=" << candidate;
            break;
        case Mode::JudgePair:
            k << "|" << (pair_source == CandidateSource::Cot ? "cot" : "ans") << "="
              << candidate_a << ";" << candidate_b;
            break;
        case Mode::Reflect: k << "|rej=" << candidate; break;
    }
    return k.str();
}

PromptContext make_solve_cot(const Task& t) {
    PromptContext p;
    p.task = t;
    p.mode = Mode::SolveCot;
    return p;
}

PromptContext make_solve_answer(const Task& t, int cot_action) {
    PromptContext p;
    p.task = t;
    p.mode = Mode::SolveAnswer;
    p.cot = cot_action;
    return p;
}

PromptContext make_judge_point(const Task& t, int candidate, CandidateSource src) {
    PromptContext p;
    p.task = t;
    p.mode = Mode::JudgePoint;
    p.candidate = candidate;
    p.candidate_source = src;
    return p;
}

PromptContext make_judge_pair(const Task& t, int first, int second, CandidateSource src) {
    PromptContext p;
    p.task = t;
    p.mode = Mode::JudgePair;
    p.candidate_a = first;
    p.candidate_b = second;
    p.pair_source = src;
    return p;
}

PromptContext make_reflect(const Task& t, int rejected_answer) {
    PromptContext p;
    p.task = t;
    p.mode = Mode::Reflect;
    p.candidate = rejected_answer;
    return p;
}

int answer_action_to_value(const Task& t, int action) { return action + t.answer_min(); }

int answer_value_to_action(const Task& t, int value) { return value - t.answer_min(); }

ActionDistribution softmax_distribution(std::vector<double> logits) {
    ActionDistribution d;
    double mx = *std::max_element(logits.begin(), logits.end());
    d.probabilities.resize(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        d.probabilities[i] = std::exp(logits[i] - mx);
        z += d.probabilities[i];
    }
    for (double& p : d.probabilities) p /= z;
    d.logits = std::move(logits);
    return d;
}

std::vector<double>& GradientAccumulator::block(const std::string& name, std::size_t size) {
    auto it = blocks_.find(name);
    if (it == blocks_.end())
        it = blocks_.emplace(name, std::vector<double>(size, 0.0)).first;
    else if (it->second.size() != size)
        throw ContractError("gradient block size mismatch: " + name);
    return it->second;
}

bool GradientAccumulator::all_finite() const {
    for (const auto& [name, vals] : blocks_)
        for (double v : vals)
            if (!std::isfinite(v)) return false;
    return true;
}

void GradientAccumulator::add(const GradientAccumulator& other) {
    for (const auto& [name, vals] : other.blocks()) {
        auto& dst = block(name, vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) dst[i] += vals[i];
    }
    sample_count_ += other.sample_count();
}

double PolicyModel::log_prob(const PromptContext& prompt, int action) const {
    auto d = action_distribution(prompt);
    if (action < 0 || action >= static_cast<int>(d.probabilities.size()))
        throw ContractError("action out of range for prompt");
    return std::log(d.probabilities[action]);
}

std::pair<int, double> PolicyModel::sample_action(const PromptContext& prompt, Rng& rng) const {
    auto d = action_distribution(prompt);
    int a = rng.categorical(d.probabilities);
    return {a, std::log(d.probabilities[a])};
}

void PolicyModel::grad_log_prob(const PromptContext& prompt, int action, double scale,
                                GradientAccumulator& acc) const {
    if (scale == 0.0) return;
    auto d = action_distribution(prompt);
    if (action < 0 || action >= static_cast<int>(d.probabilities.size()))
        throw ContractError("action out of range for prompt");
    // d log p(a) / d logits = e_a - p
    std::vector<double> dlogits(d.probabilities.size());
    for (std::size_t i = 0; i < dlogits.size(); ++i) dlogits[i] = -d.probabilities[i];
    dlogits[action] += 1.0;
    accumulate_logit_grad(prompt, dlogits, scale, acc);
    acc.note_sample();
}

// ---------------------------------------------------------------- tabular

TabularPolicy::TabularPolicy(InitSpec init) : init_(init) {
    if (init.noise_scale < 0) throw ParamError("tabular policy: noise scale must be >= 0");
}

const std::vector<double>& TabularPolicy::row(const PromptContext& prompt) const {
    std::string key = prompt.context_key();
    std::lock_guard<std::mutex> lock(mu_);
    auto it = rows_.find(key);
    if (it == rows_.end()) {
        std::vector<double> logits(prompt.action_count(), 0.0);
        if (init_.noise_scale > 0) {
            Rng r(splitmix64(init_.seed ^ fnv1a64(key)));
            for (double& v : logits) v = init_.noise_scale * r.normal();
        }
        it = rows_.emplace(std::move(key), std::move(logits)).first;
    }
    return it->second;
}

ActionDistribution TabularPolicy::action_distribution(const PromptContext& prompt) const {
    return softmax_distribution(row(prompt));
}

void TabularPolicy::accumulate_logit_grad(const PromptContext& prompt,
                                          const std::vector<double>& dlogits, double scale,
                                          GradientAccumulator& acc) const {
    row(prompt);  // materialize so apply_gradient finds the row
    auto& g = acc.block("row." + prompt.context_key(), dlogits.size());
    for (std::size_t i = 0; i < dlogits.size(); ++i) g[i] += scale * dlogits[i];
}

void TabularPolicy::apply_gradient(const GradientAccumulator& acc, double step_size) {
    if (step_size <= 0) throw ParamError("apply_gradient: step size must be > 0");
    if (!acc.all_finite()) throw NumericError("apply_gradient: non-finite gradient entry");
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [name, vals] : acc.blocks()) {
        if (name.rfind("row.", 0) != 0)
            throw ContractError("tabular policy: unknown gradient block " + name);
        auto it = rows_.find(name.substr(4));
        if (it == rows_.end() || it->second.size() != vals.size())
            throw ContractError("tabular policy: gradient for unknown row");
        for (std::size_t i = 0; i < vals.size(); ++i) it->second[i] += step_size * vals[i];
    }
}

std::unique_ptr<PolicyModel> TabularPolicy::clone() const {
    auto copy = std::make_unique<TabularPolicy>(init_);
    std::lock_guard<std::mutex> lock(mu_);
    copy->rows_ = rows_;
    return copy;
}

json TabularPolicy::params_to_json() const {
    std::lock_guard<std::mutex> lock(mu_);
    json rows = json::object();
    for (const auto& [k, v] : rows_) rows[k] = v;
    return json{{"noise_scale", init_.noise_scale}, {"seed", init_.seed}, {"rows", rows}};
}

std::unique_ptr<TabularPolicy> TabularPolicy::from_json(const json& j) {
    InitSpec init;
    init.noise_scale = j.at("noise_scale").get<double>();
    init.seed = j.at("seed").get<std::uint64_t>();
    auto p = std::make_unique<TabularPolicy>(init);
    for (const auto& [k, v] : j.at("rows").items())
        p->rows_[k] = v.get<std::vector<double>>();
    return p;
}

// ------------------------------------------------------------------- mlp

namespace {

constexpr int kMaxListFeatures = 16;
// Operands, CoT payloads and candidates enter as bucketed one-hots: with a
// bucket count at or above the vocabulary the encoding is lossless, and
// above it distinct values share buckets gracefully.
constexpr int kOpBuckets = 32;
constexpr int kValBuckets = 64;
constexpr int kPairBuckets = 32;
// family(2) + mode(5) + operands(2*32+1) + list(16) + cot(64)
// + candidate(64+1) + pair(2*32+1) + bias(1)
constexpr int kFeatureDim =
    2 + 5 + 2 * kOpBuckets + 1 + kMaxListFeatures + kValBuckets + kValBuckets + 1 +
    2 * kPairBuckets + 1 + 1;

int bucket_of(int index, int vocab, int nbuckets) {
    index = std::clamp(index, 0, std::max(0, vocab - 1));
    long b = static_cast<long>(index) * nbuckets / std::max(1, vocab);
    return static_cast<int>(std::min<long>(b, nbuckets - 1));
}

// Candidates arrive as family values; shift Answer-sourced ones to indices.
int candidate_index(const FamilySpec& s, int value, CandidateSource src) {
    if (src == CandidateSource::Cot) return value;
    return value - (s.family == Family::ModArith ? 0 : s.vmin);
}

int candidate_vocab(const FamilySpec& s, CandidateSource src) {
    return src == CandidateSource::Cot ? s.cot_vocab() : s.answer_vocab();
}

}  // namespace

int MlpPolicy::feature_dim() { return kFeatureDim; }

MlpPolicy::MlpPolicy(const FamilySpec& spec, int hidden_dim, std::uint64_t seed)
    : spec_(spec), hidden_dim_(hidden_dim), seed_(seed) {
    if (hidden_dim < 1) throw ParamError("mlp policy: hidden_dim must be >= 1");
    Rng rng(splitmix64(seed ^ 0x6d6c70ULL));
    double s1 = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
    w1_.resize(static_cast<std::size_t>(hidden_dim) * kFeatureDim);
    for (double& v : w1_) v = s1 * rng.normal();
    b1_.assign(hidden_dim, 0.0);
    double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (Mode m : {Mode::SolveCot, Mode::SolveAnswer, Mode::JudgePoint, Mode::JudgePair,
                   Mode::Reflect}) {
        int vocab = spec.vocab_for(m);
        auto& w = head_w_[mode_name(m)];
        w.resize(static_cast<std::size_t>(vocab) * hidden_dim);
        for (double& v : w) v = s2 * rng.normal();
        head_b_[mode_name(m)].assign(vocab, 0.0);
    }
}

std::vector<double> MlpPolicy::features(const PromptContext& p) const {
    std::vector<double> x(kFeatureDim, 0.0);
    int i = 0;
    x[i + (p.task.family == Family::ModArith ? 0 : 1)] = 1.0;
    i += 2;
    x[i + static_cast<int>(p.mode)] = 1.0;
    i += 5;
    if (p.task.family == Family::ModArith) {
        const auto& q = p.task.mod_arith;
        x[i + bucket_of(q.a, q.modulus, kOpBuckets)] = 1.0;
        x[i + kOpBuckets + bucket_of(q.b, q.modulus, kOpBuckets)] = 1.0;
        x[i + 2 * kOpBuckets] = q.op == ModOp::Mul ? 1.0 : 0.0;
    }
    i += 2 * kOpBuckets + 1;
    if (p.task.family == Family::MaxOfList) {
        const auto& q = p.task.max_of_list;
        int span = std::max(1, q.vmax - q.vmin);
        for (std::size_t k = 0; k < q.values.size() && k < kMaxListFeatures; ++k)
            x[i + static_cast<int>(k)] = static_cast<double>(q.values[k] - q.vmin) / span;
    }
    i += kMaxListFeatures;
    if (p.mode == Mode::SolveAnswer)
        x[i + bucket_of(p.cot, spec_.cot_vocab(), kValBuckets)] = 1.0;
    i += kValBuckets;
    if (p.mode == Mode::JudgePoint || p.mode == Mode::Reflect) {
        CandidateSource src =
            p.mode == Mode::Reflect ? CandidateSource::Answer : p.candidate_source;
        x[i + bucket_of(candidate_index(spec_, p.candidate, src), candidate_vocab(spec_, src),
                        kValBuckets)] = 1.0;
        x[i + kValBuckets] = src == CandidateSource::Cot ? 1.0 : 0.0;
    }
    i += kValBuckets + 1;
    if (p.mode == Mode::JudgePair) {
        x[i + bucket_of(candidate_index(spec_, p.candidate_a, p.pair_source),
                        candidate_vocab(spec_, p.pair_source), kPairBuckets)] = 1.0;
        x[i + kPairBuckets + bucket_of(candidate_index(spec_, p.candidate_b, p.pair_source),
                                       candidate_vocab(spec_, p.pair_source), kPairBuckets)] =
            1.0;
        x[i + 2 * kPairBuckets] = p.pair_source == CandidateSource::Cot ? 1.0 : 0.0;
    }
    i += 2 * kPairBuckets + 1;
    x[i] = 1.0;
    return x;
}

std::vector<double> MlpPolicy::hidden(const std::vector<double>& x) const {
    std::vector<double> h(hidden_dim_);
    for (int j = 0; j < hidden_dim_; ++j) {
        double z = b1_[j];
        const double* wrow = &w1_[static_cast<std::size_t>(j) * kFeatureDim];
        for (int k = 0; k < kFeatureDim; ++k) z += wrow[k] * x[k];
        h[j] = std::tanh(z);
    }
    return h;
}

ActionDistribution MlpPolicy::action_distribution(const PromptContext& prompt) const {
    if (prompt.action_count() != spec_.vocab_for(prompt.mode))
        throw ContractError("prompt vocabulary does not match the policy's family spec");
    auto x = features(prompt);
    auto h = hidden(x);
    const auto& w = head_w_.at(mode_name(prompt.mode));
    const auto& b = head_b_.at(mode_name(prompt.mode));
    int vocab = static_cast<int>(b.size());
    std::vector<double> logits(vocab);
    for (int a = 0; a < vocab; ++a) {
        double z = b[a];
        const double* wrow = &w[static_cast<std::size_t>(a) * hidden_dim_];
        for (int j = 0; j < hidden_dim_; ++j) z += wrow[j] * h[j];
        logits[a] = z;
    }
    return softmax_distribution(std::move(logits));
}

void MlpPolicy::accumulate_logit_grad(const PromptContext& prompt,
                                      const std::vector<double>& dlogits, double scale,
                                      GradientAccumulator& acc) const {
    auto x = features(prompt);
    auto h = hidden(x);
    const std::string mode = mode_name(prompt.mode);
    const auto& w = head_w_.at(mode);
    int vocab = static_cast<int>(dlogits.size());

    auto& gw2 = acc.block("head_w." + mode, w.size());
    auto& gb2 = acc.block("head_b." + mode, dlogits.size());
    std::vector<double> dh(hidden_dim_, 0.0);
    for (int a = 0; a < vocab; ++a) {
        double d = scale * dlogits[a];
        gb2[a] += d;
        const double* wrow = &w[static_cast<std::size_t>(a) * hidden_dim_];
        double* grow = &gw2[static_cast<std::size_t>(a) * hidden_dim_];
        for (int j = 0; j < hidden_dim_; ++j) {
            grow[j] += d * h[j];
            dh[j] += d * wrow[j];
        }
    }
    auto& gw1 = acc.block("w1", w1_.size());
    auto& gb1 = acc.block("b1", b1_.size());
    for (int j = 0; j < hidden_dim_; ++j) {
        double dz = dh[j] * (1.0 - h[j] * h[j]);
        gb1[j] += dz;
        double* grow = &gw1[static_cast<std::size_t>(j) * kFeatureDim];
        for (int k = 0; k < kFeatureDim; ++k) grow[k] += dz * x[k];
    }
}

void MlpPolicy::apply_gradient(const GradientAccumulator& acc, double step_size) {
    if (step_size <= 0) throw ParamError("apply_gradient: step size must be > 0");
    if (!acc.all_finite()) throw NumericError("apply_gradient: non-finite gradient entry");
    for (const auto& [name, vals] : acc.blocks()) {
        std::vector<double>* target = nullptr;
        if (name == "w1") target = &w1_;
        else if (name == "b1") target = &b1_;
        else if (name.rfind("head_w.", 0) == 0) target = &head_w_.at(name.substr(7));
        else if (name.rfind("head_b.", 0) == 0) target = &head_b_.at(name.substr(7));
        else throw ContractError("mlp policy: unknown gradient block " + name);
        if (target->size() != vals.size())
            throw ContractError("mlp policy: gradient block size mismatch: " + name);
        for (std::size_t i = 0; i < vals.size(); ++i) (*target)[i] += step_size * vals[i];
    }
}

std::unique_ptr<PolicyModel> MlpPolicy::clone() const {
    return std::make_unique<MlpPolicy>(*this);
}

json MlpPolicy::params_to_json() const {
    json heads_w = json::object(), heads_b = json::object();
    for (const auto& [k, v] : head_w_) heads_w[k] = v;
    for (const auto& [k, v] : head_b_) heads_b[k] = v;
    return json{{"family_spec", spec_.to_json()},
                {"hidden_dim", hidden_dim_},
                {"seed", seed_},
                {"w1", w1_},
                {"b1", b1_},
                {"head_w", heads_w},
                {"head_b", heads_b}};
}

std::unique_ptr<MlpPolicy> MlpPolicy::from_json(const json& j) {
    auto spec = FamilySpec::from_json(j.at("family_spec"));
    auto p = std::make_unique<MlpPolicy>(spec, j.at("hidden_dim").get<int>(),
                                         j.at("seed").get<std::uint64_t>());
    p->w1_ = j.at("w1").get<std::vector<double>>();
    p->b1_ = j.at("b1").get<std::vector<double>>();
    for (const auto& [k, v] : j.at("head_w").items())
        p->head_w_.at(k) = v.get<std::vector<double>>();
    for (const auto& [k, v] : j.at("head_b").items())
        p->head_b_.at(k) = v.get<std::vector<double>>();
    return p;
}

// ------------------------------------------------------------- reference

json ReferencePolicy::params_to_json() const { return model_->params_to_json(); }

ReferencePolicy snapshot_reference(const PolicyModel& policy) {
    return ReferencePolicy(policy);
}

double kl_to_reference(const PolicyModel& policy, const ReferencePolicy& ref,
                       const PromptContext& prompt) {
    auto p = policy.action_distribution(prompt).probabilities;
    auto q = ref.action_distribution(prompt).probabilities;
    if (p.size() != q.size())
        throw ContractError("kl_to_reference: vocabulary mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
    return std::max(kl, 0.0);
}

void grad_kl_to_reference(const PolicyModel& policy, const ReferencePolicy& ref,
                          const PromptContext& prompt, double scale, GradientAccumulator& acc) {
    if (scale == 0.0) return;
    auto p = policy.action_distribution(prompt).probabilities;
    auto q = ref.action_distribution(prompt).probabilities;
    if (p.size() != q.size())
        throw ContractError("grad_kl_to_reference: vocabulary mismatch");
    double kl = 0.0;
    std::vector<double> lr(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        lr[i] = std::log(p[i] / q[i]);
        kl += p[i] * lr[i];
    }
    // dKL/dlogit_k = p_k (log(p_k/q_k) - KL)
    std::vector<double> dlogits(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] = p[i] * (lr[i] - kl);
    policy.accumulate_logit_grad(prompt, dlogits, scale, acc);
}

// ------------------------------------------------------------ checkpoint

json policy_to_checkpoint(const PolicyModel& policy) {
    return json{{"version", 1}, {"kind", policy.kind()}, {"params", policy.params_to_json()}};
}

std::unique_ptr<PolicyModel> policy_from_checkpoint(const json& j) {
    if (j.at("version").get<int>() != 1)
        throw ParseError("unsupported checkpoint version");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "tabular") return TabularPolicy::from_json(j.at("params"));
    if (kind == "mlp") return MlpPolicy::from_json(j.at("params"));
    throw ParseError("unknown policy kind: " + kind);
}

void save_checkpoint(const PolicyModel& policy, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << policy_to_checkpoint(policy).dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::unique_ptr<PolicyModel> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint parse error: ") + e.what());
    }
    return policy_from_checkpoint(j);
}

}  // namespace spark
