#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "spark/grpo.hpp"
#include "spark/tasks.hpp"

namespace spark {

// Experiment configuration: key = value file plus command-line overrides
// (overrides win). Unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 0;

    std::string policy = "tabular";  // tabular | mlp
    int hidden_dim = 32;
    double init_scale = 0.0;  // tabular logit noise

    std::string family = "mod_arith";  // mod_arith | max_of_list
    int modulus = 10;
    std::string mod_op = "add";  // add | mul
    int list_len = 4;
    int value_min = 0;
    int value_max = 9;
    int task_count = 32;

    int group_size = 8;
    int batch_size = 2;
    double epsilon = 1e-6;
    double lambda = 0.01;
    double step_size = 0.1;
    int steps = 100;
    int ref_refresh = 0;  // snapshot the reference every K steps; 0 = never

    int recycle_quota = 16;
    int recycle_budget = 16;
    double mix_pointwise = 1.0;
    double mix_pairwise = 1.0;
    double mix_reflect = 1.0;
    bool source_answer = true;
    bool source_cot = true;
    int max_pairs = 8;

    int tts_max_rounds = 4;
    int workers = 1;

    std::string tasks_path;
    std::string checkpoint_path = "checkpoint.json";
    std::string metrics_path = "metrics.jsonl";

    void set(const std::string& key, const std::string& value);
    void validate() const;

    Family family_enum() const;
    GenParams gen_params() const;
    TrainConfig train_config() const;
};

RunConfig load_config(const std::string& path);

// Applies "key=value" override strings on top of a parsed config.
void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& overrides);

}  // namespace spark
