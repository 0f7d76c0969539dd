#include "spark/tts.hpp"

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"
#include "spark/verifier.hpp"

namespace spark {

using nlohmann::json;

TtsTrace tts_solve(const PolicyModel& policy, const Task& task, int max_rounds, Rng& rng,
                   JudgeMode judge) {
    if (max_rounds < 1) throw ParamError("tts_solve: max_rounds must be >= 1");
    TtsTrace trace;
    trace.task_id = task.id;

    int cot = 0;
    int answer = 0;
    for (int t = 0; t < max_rounds; ++t) {
        if (t == 0) {
            auto [c, c_lp] = policy.sample_action(make_solve_cot(task), rng);
            auto [a, a_lp] = policy.sample_action(make_solve_answer(task, c), rng);
            cot = c;
            answer = answer_action_to_value(task, a);
        } else {
            // refinement conditioned on the rejected candidate; the CoT of
            // the prior round is carried along unchanged
            auto [a, a_lp] = policy.sample_action(make_reflect(task, answer), rng);
            answer = answer_action_to_value(task, a);
        }

        int verdict;
        if (judge == JudgeMode::Oracle) {
            verdict = verify_answer(answer, task);
        } else {
            auto [v, v_lp] = policy.sample_action(
                make_judge_point(task, answer, CandidateSource::Answer), rng);
            verdict = v;
        }

        TtsRound round;
        round.round_index = t;
        round.cot = cot;
        round.answer = answer;
        round.verdict = verdict;
        round.accepted = verdict == 1;
        trace.rounds.push_back(round);
        if (round.accepted) {
            trace.terminated_by = TtsTermination::SelfAccept;
            break;
        }
    }
    if (trace.rounds.empty() || !trace.rounds.back().accepted)
        trace.terminated_by = TtsTermination::Budget;
    trace.final_answer = trace.rounds.back().answer;
    trace.final_correct = verify_answer(trace.final_answer, task);
    return trace;
}

TtsEvalResult tts_eval(const PolicyModel& policy, const TaskSet& tasks, int max_rounds,
                       std::uint64_t seed, JudgeMode judge, bool keep_traces) {
    if (tasks.tasks.empty()) throw ParamError("tts_eval: empty task set");
    TtsEvalResult res;
    double correct = 0.0, rounds = 0.0;
    for (const Task& task : tasks.tasks) {
        Rng rng = derive_stream(seed, task.id);
        TtsTrace trace = tts_solve(policy, task, max_rounds, rng, judge);
        correct += trace.final_correct;
        rounds += static_cast<double>(trace.rounds.size());
        if (keep_traces) res.traces.push_back(std::move(trace));
    }
    res.accuracy = correct / static_cast<double>(tasks.tasks.size());
    res.mean_rounds = rounds / static_cast<double>(tasks.tasks.size());
    return res;
}

json tts_trace_to_json(const TtsTrace& t) {
    json rounds = json::array();
    for (const TtsRound& r : t.rounds)
        rounds.push_back(json{{"round", r.round_index},
                              {"cot", r.cot},
                              {"answer", r.answer},
                              {"verdict", r.verdict},
                              {"accepted", r.accepted}});
    return json{{"task_id", t.task_id},
                {"rounds", rounds},
                {"final_answer", t.final_answer},
                {"terminated_by",
                 t.terminated_by == TtsTermination::SelfAccept ? "self_accept" : "budget"},
                {"final_correct", t.final_correct}};
}

}  // namespace spark
