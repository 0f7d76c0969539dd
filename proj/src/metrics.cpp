#include "spark/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"
#include "spark/verifier.hpp"

namespace spark {

using nlohmann::json;

JudgeStats finalize_judge_stats(long tp, long fp, long fn, long tn) {
    JudgeStats s;
    s.true_pos = tp;
    s.false_pos = fp;
    s.false_neg = fn;
    s.true_neg = tn;
    s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

JudgeStats judge_stats(const PolicyModel& policy, const TaskSet& tasks, std::uint64_t seed) {
    if (tasks.tasks.empty()) throw ParamError("judge_stats: empty task set");
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (const Task& task : tasks.tasks) {
        Rng rng = derive_stream(seed, task.id);
        auto [cot, cot_lp] = policy.sample_action(make_solve_cot(task), rng);
        auto [a, a_lp] = policy.sample_action(make_solve_answer(task, cot), rng);
        int answer = answer_action_to_value(task, a);
        bool actually_correct = verify_answer(answer, task) == 1;
        auto [verdict, v_lp] = policy.sample_action(
            make_judge_point(task, answer, CandidateSource::Answer), rng);
        bool judged_correct = verdict == 1;
        if (actually_correct && judged_correct) ++tp;
        else if (!actually_correct && judged_correct) ++fp;
        else if (actually_correct && !judged_correct) ++fn;
        else ++tn;
    }
    return finalize_judge_stats(tp, fp, fn, tn);
}

json judge_stats_to_json(const JudgeStats& s) {
    return json{{"true_pos", s.true_pos},   {"false_pos", s.false_pos},
                {"false_neg", s.false_neg}, {"true_neg", s.true_neg},
                {"recall", s.recall},       {"precision", s.precision},
                {"f1", s.f1}};
}

void write_metrics(const std::vector<json>& records, const std::string& path) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open metrics sink: " + path);
    for (const json& r : records) out << r.dump() << "\n";
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::vector<json> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file: " + path);
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception&) {
            break;  // truncated trailing line from a crash
        }
    }
    return out;
}

}  // namespace spark
