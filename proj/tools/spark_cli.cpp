#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spark/errors.hpp"
#include "spark/run.hpp"

namespace {

// "key=value" strings from --set flags; flags win over the config file.
std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& kvs) {
    std::map<std::string, std::string> out;
    for (const std::string& kv : kvs) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw spark::ParamError("override must be key=value: " + kv);
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "config file (key = value lines)");
        app->add_option("--set", overrides, "override config keys, e.g. --set seed=7")
            ->take_all();
    }

    spark::RunConfig resolve() const {
        spark::RunConfig cfg;
        if (!config_path.empty()) cfg = spark::load_config(config_path);
        spark::apply_overrides(cfg, parse_overrides(overrides));
        cfg.validate();
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spark: co-evolving policy and reward over synthetic verifiable tasks"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, tts_args, judge_args, recycle_args;
    std::string tts_dump, recycle_out = "recycle.jsonl";

    auto* train = app.add_subcommand("train", "run the training loop");
    train_args.attach(train);
    auto* eval = app.add_subcommand("eval", "single-pass accuracy of a checkpoint");
    eval_args.attach(eval);
    auto* tts = app.add_subcommand("tts", "generate/judge/reflect evaluation");
    tts_args.attach(tts);
    tts->add_option("--dump-traces", tts_dump, "write per-task traces as JSONL");
    auto* judge = app.add_subcommand("judge-stats", "self-judgment precision/recall/F1");
    judge_args.attach(judge);
    auto* recycle = app.add_subcommand("recycle-dump", "dump recycled judgment samples");
    recycle_args.attach(recycle);
    recycle->add_option("-o,--out", recycle_out, "output JSONL path");

    // convenience aliases for the most common flags
    for (auto [sub, args] : {std::pair{tts, &tts_args}, {eval, &eval_args},
                             {judge, &judge_args}, {recycle, &recycle_args}}) {
        sub->add_option_function<std::string>(
            "--tasks", [args](const std::string& v) { args->overrides.push_back("tasks_path=" + v); },
            "task JSONL file");
        sub->add_option_function<std::string>(
            "--checkpoint",
            [args](const std::string& v) { args->overrides.push_back("checkpoint_path=" + v); },
            "policy checkpoint file");
        sub->add_option_function<std::string>(
            "--seed", [args](const std::string& v) { args->overrides.push_back("seed=" + v); },
            "rng seed");
    }
    tts->add_option_function<std::string>(
        "--max-rounds",
        [&](const std::string& v) { tts_args.overrides.push_back("tts_max_rounds=" + v); },
        "round budget");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return spark::cmd_train(train_args.resolve());
        if (eval->parsed()) return spark::cmd_eval(eval_args.resolve());
        if (tts->parsed()) return spark::cmd_tts(tts_args.resolve(), tts_dump);
        if (judge->parsed()) return spark::cmd_judge_stats(judge_args.resolve());
        if (recycle->parsed()) return spark::cmd_recycle_dump(recycle_args.resolve(), recycle_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
