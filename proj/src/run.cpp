#include "spark/run.hpp"

#include <cstdio>
#include <iostream>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"
#include "spark/tts.hpp"
#include "spark/verifier.hpp"

namespace spark {

using nlohmann::json;

std::unique_ptr<PolicyModel> build_policy(const RunConfig& cfg) {
    if (cfg.policy == "tabular") {
        InitSpec init;
        init.noise_scale = cfg.init_scale;
        init.seed = cfg.seed;
        return std::make_unique<TabularPolicy>(init);
    }
    FamilySpec spec;
    spec.family = cfg.family_enum();
    spec.modulus = cfg.modulus;
    spec.op = cfg.mod_op == "mul" ? ModOp::Mul : ModOp::Add;
    spec.list_len = cfg.list_len;
    spec.vmin = cfg.value_min;
    spec.vmax = cfg.value_max;
    return std::make_unique<MlpPolicy>(spec, cfg.hidden_dim, cfg.seed);
}

TaskSet resolve_tasks(const RunConfig& cfg) {
    if (!cfg.tasks_path.empty()) return load_tasks(cfg.tasks_path);
    return gen_tasks(cfg.family_enum(), cfg.task_count, cfg.seed, cfg.gen_params());
}

TrainResult run_training(const RunConfig& cfg, bool write_outputs) {
    cfg.validate();
    TaskSet tasks = resolve_tasks(cfg);
    if (tasks.tasks.empty()) throw ParamError("training needs a non-empty task set");

    TrainResult result;
    result.policy = build_policy(cfg);
    auto ref = std::make_unique<ReferencePolicy>(*result.policy);
    RecycleQueue queue;
    TrainConfig tc = cfg.train_config();
    Rng rng = derive_stream(cfg.seed, "train");

    std::vector<json> reports;
    std::size_t cursor = 0;
    for (int step = 0; step < cfg.steps; ++step) {
        if (cfg.ref_refresh > 0 && step > 0 && step % cfg.ref_refresh == 0)
            ref = std::make_unique<ReferencePolicy>(*result.policy);
        std::vector<Task> batch;
        for (int b = 0; b < cfg.batch_size; ++b) {
            batch.push_back(tasks.tasks[cursor]);
            cursor = (cursor + 1) % tasks.tasks.size();
        }
        StepReport report = train_step(*result.policy, *ref, batch, queue, tc, step, rng);
        result.final_mean_reward = report.mean_reward;
        if (write_outputs) reports.push_back(step_report_to_json(report));
    }
    if (write_outputs) {
        if (!reports.empty()) write_metrics(reports, cfg.metrics_path);
        save_checkpoint(*result.policy, cfg.checkpoint_path);
    }
    return result;
}

double eval_accuracy(const PolicyModel& policy, const TaskSet& tasks, std::uint64_t seed) {
    if (tasks.tasks.empty()) throw ParamError("eval needs a non-empty task set");
    double correct = 0.0;
    for (const Task& task : tasks.tasks) {
        Rng rng = derive_stream(seed, task.id);
        auto [cot, cot_lp] = policy.sample_action(make_solve_cot(task), rng);
        auto [a, a_lp] = policy.sample_action(make_solve_answer(task, cot), rng);
        correct += verify_answer(answer_action_to_value(task, a), task);
    }
    return correct / static_cast<double>(tasks.tasks.size());
}

namespace {

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 2;
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    return 1;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
    return guarded([&] {
        if (cfg.steps == 0) {
            cfg.validate();
            auto policy = build_policy(cfg);
            save_checkpoint(*policy, cfg.checkpoint_path);
            std::cout << "train: steps=0, wrote initial checkpoint to " << cfg.checkpoint_path
                      << "\n";
            return 0;
        }
        TrainResult r = run_training(cfg);
        std::cout << "train: steps=" << cfg.steps
                  << " final_mean_reward=" << r.final_mean_reward << " checkpoint="
                  << cfg.checkpoint_path << " metrics=" << cfg.metrics_path << "\n";
        return 0;
    });
}

int cmd_eval(const RunConfig& cfg) {
    return guarded([&] {
        cfg.validate();
        auto policy = load_checkpoint(cfg.checkpoint_path);
        TaskSet tasks = resolve_tasks(cfg);
        double acc = eval_accuracy(*policy, tasks, cfg.seed);
        std::cout << "eval: tasks=" << tasks.tasks.size() << " accuracy=" << acc << "\n";
        return 0;
    });
}

int cmd_tts(const RunConfig& cfg, const std::string& dump_traces_path) {
    return guarded([&] {
        cfg.validate();
        auto policy = load_checkpoint(cfg.checkpoint_path);
        TaskSet tasks = resolve_tasks(cfg);
        bool keep = !dump_traces_path.empty();
        TtsEvalResult res =
            tts_eval(*policy, tasks, cfg.tts_max_rounds, cfg.seed, JudgeMode::Policy, keep);
        if (keep) {
            std::vector<json> lines;
            for (const TtsTrace& t : res.traces) lines.push_back(tts_trace_to_json(t));
            write_metrics(lines, dump_traces_path);
        }
        std::cout << "tts: tasks=" << tasks.tasks.size() << " accuracy=" << res.accuracy
                  << " mean_rounds=" << res.mean_rounds << "\n";
        return 0;
    });
}

int cmd_judge_stats(const RunConfig& cfg) {
    return guarded([&] {
        cfg.validate();
        auto policy = load_checkpoint(cfg.checkpoint_path);
        TaskSet tasks = resolve_tasks(cfg);
        JudgeStats s = judge_stats(*policy, tasks, cfg.seed);
        write_metrics({judge_stats_to_json(s)}, cfg.metrics_path);
        std::cout << "judge-stats: precision=" << s.precision << " recall=" << s.recall
                  << " f1=" << s.f1 << " (tp=" << s.true_pos << " fp=" << s.false_pos
                  << " fn=" << s.false_neg << " tn=" << s.true_neg << ")\n";
        return 0;
    });
}

int cmd_recycle_dump(const RunConfig& cfg, const std::string& out_path) {
    return guarded([&] {
        cfg.validate();
        auto policy = load_checkpoint(cfg.checkpoint_path);
        TaskSet tasks = resolve_tasks(cfg);
        if (tasks.tasks.empty()) throw ParamError("recycle-dump needs a non-empty task set");
        TrainConfig tc = cfg.train_config();
        Rng rng = derive_stream(cfg.seed, "recycle-dump");
        std::vector<json> lines;
        std::map<std::string, int> counts;
        for (const Task& task : tasks.tasks) {
            RolloutGroup group = sample_group(*policy, task, tc.group_size, rng);
            std::vector<RecycledSample> point, pair, reflect;
            for (CandidateSource src : {CandidateSource::Answer, CandidateSource::Cot}) {
                if (src == CandidateSource::Answer && !tc.source_answer) continue;
                if (src == CandidateSource::Cot && !tc.source_cot) continue;
                auto p = build_pointwise(group, src);
                point.insert(point.end(), p.begin(), p.end());
                auto pr = build_pairwise(group, src, tc.max_pairs, rng);
                pair.insert(pair.end(), pr.begin(), pr.end());
            }
            if (tc.source_answer || tc.source_cot) reflect = build_reflect(group);
            Provenance prov{task.id, group_hash(group), 0};
            RecycleBatch rb = assemble_on_policy(std::move(point), std::move(pair),
                                                 std::move(reflect), tc.mix, rng, prov);
            for (const RecycledSample& s : rb.samples) {
                lines.push_back(recycled_sample_to_json(s));
                counts[recycle_kind_name(s.kind)]++;
            }
        }
        write_metrics(lines, out_path);
        std::cout << "recycle-dump: pointwise=" << counts["pointwise"]
                  << " pairwise=" << counts["pairwise"] << " reflect=" << counts["reflect"]
                  << " -> " << out_path << "\n";
        return 0;
    });
}

}  // namespace spark
