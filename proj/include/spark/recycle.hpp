#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spark/rollout.hpp"

namespace spark {

enum class RecycleKind { Pointwise, Pairwise, Reflect };

std::string recycle_kind_name(RecycleKind k);

// One judgment item derived from a scored rollout group. cand_a/cand_b are
// candidate VALUES (answers or CoTs per source); labels are the verifier
// rewards recorded at build time.
struct RecycledSample {
    RecycleKind kind = RecycleKind::Pointwise;
    CandidateSource source = CandidateSource::Answer;
    Task task;
    int cand_a = 0;
    int cand_b = 0;   // Pairwise only
    int label_a = 0;
    int label_b = 0;  // Pairwise only
};

struct Provenance {
    std::string task_id;
    std::uint64_t group_hash = 0;
    int step_index = 0;
};

struct RecycleBatch {
    std::vector<RecycledSample> samples;
    Provenance provenance;
};

struct MixConfig {
    int budget = 16;  // per-step sample budget across all kinds
    double w_pointwise = 1.0;
    double w_pairwise = 1.0;
    double w_reflect = 1.0;
};

std::uint64_t group_hash(const RolloutGroup& group);

std::vector<RecycledSample> build_pointwise(const RolloutGroup& group, CandidateSource source);

// Only mixed (one reward-1, one reward-0) pairs; presentation order of each
// pair is randomized by rng.
std::vector<RecycledSample> build_pairwise(const RolloutGroup& group, CandidateSource source,
                                           int max_pairs, Rng& rng);

std::vector<RecycledSample> build_reflect(const RolloutGroup& group);

RecycleBatch assemble_on_policy(std::vector<RecycledSample> pointwise,
                                std::vector<RecycledSample> pairwise,
                                std::vector<RecycledSample> reflect, const MixConfig& mix,
                                Rng& rng, const Provenance& provenance);

// Re-expresses the batch as verifiable judgment tasks: pointwise -> verdict
// matching the stored label, pairwise -> pick the reward-1 candidate,
// reflect -> recover the original task's gold answer.
std::vector<JudgmentTask> recycled_to_tasks(const RecycleBatch& batch);

nlohmann::json recycled_sample_to_json(const RecycledSample& s);

// Append-only queue drained by the training step.
class RecycleQueue {
public:
    void push(std::vector<JudgmentTask> tasks);
    std::vector<JudgmentTask> drain(int max_count);
    std::size_t size() const { return queue_.size(); }

private:
    std::deque<JudgmentTask> queue_;
};

}  // namespace spark
