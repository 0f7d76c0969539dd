#include "spark/recycle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"

namespace spark {

using nlohmann::json;

std::string recycle_kind_name(RecycleKind k) {
    switch (k) {
        case RecycleKind::Pointwise: return "pointwise";
        case RecycleKind::Pairwise: return "pairwise";
        case RecycleKind::Reflect: return "reflect";
    }
    throw ContractError("bad recycle kind");
}

std::uint64_t group_hash(const RolloutGroup& group) {
    std::ostringstream s;
    s << group.task.id;
    for (std::size_t i = 0; i < group.samples.size(); ++i)
        s << "|" << group.samples[i].cot_action << "," << group.samples[i].answer_action << ","
          << group.rewards[i] << "," << group.cot_rewards[i];
    return fnv1a64(s.str());
}

static int candidate_value(const RolloutGroup& g, std::size_t i, CandidateSource src) {
    return src == CandidateSource::Cot ? g.samples[i].cot_action : g.samples[i].answer_action;
}

static const std::vector<int>& reward_vector(const RolloutGroup& g, CandidateSource src) {
    return src == CandidateSource::Cot ? g.cot_rewards : g.rewards;
}

std::vector<RecycledSample> build_pointwise(const RolloutGroup& group, CandidateSource source) {
    const auto& rewards = reward_vector(group, source);
    std::vector<RecycledSample> out;
    out.reserve(group.samples.size());
    for (std::size_t i = 0; i < group.samples.size(); ++i) {
        RecycledSample s;
        s.kind = RecycleKind::Pointwise;
        s.source = source;
        s.task = group.task;
        s.cand_a = candidate_value(group, i, source);
        s.label_a = rewards[i];
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RecycledSample> build_pairwise(const RolloutGroup& group, CandidateSource source,
                                           int max_pairs, Rng& rng) {
    if (max_pairs < 0) throw ParamError("build_pairwise: max_pairs must be >= 0");
    const auto& rewards = reward_vector(group, source);
    std::vector<std::size_t> winners, losers;
    for (std::size_t i = 0; i < rewards.size(); ++i)
        (rewards[i] == 1 ? winners : losers).push_back(i);

    std::vector<RecycledSample> out;
    for (std::size_t wi : winners) {
        for (std::size_t li : losers) {
            if (static_cast<int>(out.size()) >= max_pairs) return out;
            RecycledSample s;
            s.kind = RecycleKind::Pairwise;
            s.source = source;
            s.task = group.task;
            bool winner_first = rng.uniform01() < 0.5;
            std::size_t first = winner_first ? wi : li;
            std::size_t second = winner_first ? li : wi;
            s.cand_a = candidate_value(group, first, source);
            s.cand_b = candidate_value(group, second, source);
            s.label_a = rewards[first];
            s.label_b = rewards[second];
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<RecycledSample> build_reflect(const RolloutGroup& group) {
    std::vector<RecycledSample> out;
    for (std::size_t i = 0; i < group.samples.size(); ++i) {
        if (group.rewards[i] != 0) continue;
        RecycledSample s;
        s.kind = RecycleKind::Reflect;
        s.source = CandidateSource::Answer;
        s.task = group.task;
        s.cand_a = group.samples[i].answer_action;
        s.label_a = 0;
        out.push_back(std::move(s));
    }
    return out;
}

static void take_quota(std::vector<RecycledSample>& list, int quota, Rng& rng) {
    if (static_cast<int>(list.size()) <= quota) return;
    rng.shuffle(list);
    list.resize(quota);
}

RecycleBatch assemble_on_policy(std::vector<RecycledSample> pointwise,
                                std::vector<RecycledSample> pairwise,
                                std::vector<RecycledSample> reflect, const MixConfig& mix,
                                Rng& rng, const Provenance& provenance) {
    if (mix.w_pointwise < 0 || mix.w_pairwise < 0 || mix.w_reflect < 0)
        throw ParamError("assemble_on_policy: mix ratios must be >= 0");
    RecycleBatch batch;
    batch.provenance = provenance;
    double wsum = mix.w_pointwise + mix.w_pairwise + mix.w_reflect;
    if (mix.budget <= 0 || wsum <= 0) return batch;

    auto quota = [&](double w) { return static_cast<int>(std::floor(mix.budget * w / wsum)); };
    take_quota(pointwise, quota(mix.w_pointwise), rng);
    take_quota(pairwise, quota(mix.w_pairwise), rng);
    take_quota(reflect, quota(mix.w_reflect), rng);

    batch.samples.reserve(pointwise.size() + pairwise.size() + reflect.size());
    for (auto* src : {&pointwise, &pairwise, &reflect})
        for (auto& s : *src) batch.samples.push_back(std::move(s));
    rng.shuffle(batch.samples);
    return batch;
}

std::vector<JudgmentTask> recycled_to_tasks(const RecycleBatch& batch) {
    std::vector<JudgmentTask> out;
    out.reserve(batch.samples.size());
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
        const RecycledSample& s = batch.samples[i];
        JudgmentTask jt;
        std::ostringstream id;
        id << s.task.id << "#" << recycle_kind_name(s.kind) << "-" << i << "@step"
           << batch.provenance.step_index << "-g" << batch.provenance.group_hash;
        jt.id = id.str();
        switch (s.kind) {
            case RecycleKind::Pointwise:
                jt.prompt = make_judge_point(s.task, s.cand_a, s.source);
                jt.gold_action = s.label_a;  // 0=Incorrect, 1=Correct
                break;
            case RecycleKind::Pairwise:
                if (s.label_a == s.label_b)
                    throw ContractError("pairwise sample without a contrast: " + jt.id);
                jt.prompt = make_judge_pair(s.task, s.cand_a, s.cand_b, s.source);
                jt.gold_action = s.label_a == 1 ? 0 : 1;  // 0=First, 1=Second
                break;
            case RecycleKind::Reflect:
                jt.prompt = make_reflect(s.task, s.cand_a);
                jt.gold_action = answer_value_to_action(s.task, s.task.gold_answer);
                break;
        }
        out.push_back(std::move(jt));
    }
    return out;
}

json recycled_sample_to_json(const RecycledSample& s) {
    json j{{"kind", recycle_kind_name(s.kind)},
           {"source", s.source == CandidateSource::Cot ? "cot" : "answer"},
           {"task_id", s.task.id},
           {"candidate", s.cand_a},
           {"label", s.label_a}};
    if (s.kind == RecycleKind::Pairwise) {
        j["candidate_b"] = s.cand_b;
        j["label_b"] = s.label_b;
    }
    return j;
}

void RecycleQueue::push(std::vector<JudgmentTask> tasks) {
    for (auto& t : tasks) queue_.push_back(std::move(t));
}

std::vector<JudgmentTask> RecycleQueue::drain(int max_count) {
    std::vector<JudgmentTask> out;
    while (!queue_.empty() && static_cast<int>(out.size()) < max_count) {
        out.push_back(std::move(queue_.front()));
        queue_.pop_front();
    }
    return out;
}

}  // namespace spark
