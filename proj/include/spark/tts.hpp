#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spark/policy.hpp"
#include "spark/tasks.hpp"

namespace spark {

struct TtsRound {
    int round_index = 0;
    int cot = 0;      // CoT value carried through reflection rounds
    int answer = 0;   // answer value
    int verdict = 0;  // self-judgment, 1 = accepted
    bool accepted = false;
};

enum class TtsTermination { SelfAccept, Budget };

struct TtsTrace {
    std::string task_id;
    std::vector<TtsRound> rounds;
    int final_answer = 0;
    TtsTermination terminated_by = TtsTermination::Budget;
    int final_correct = 0;  // vs ground truth; reporting only, never fed back
};

// Replaces the self-judgment verdict with the true verifier (test oracle).
enum class JudgeMode { Policy, Oracle };

// generate -> judge -> accept-or-reflect loop; terminates on the first
// self-accepted round or when max_rounds is exhausted (last candidate wins).
TtsTrace tts_solve(const PolicyModel& policy, const Task& task, int max_rounds, Rng& rng,
                   JudgeMode judge = JudgeMode::Policy);

struct TtsEvalResult {
    double accuracy = 0.0;
    double mean_rounds = 0.0;
    std::vector<TtsTrace> traces;
};

TtsEvalResult tts_eval(const PolicyModel& policy, const TaskSet& tasks, int max_rounds,
                       std::uint64_t seed, JudgeMode judge = JudgeMode::Policy,
                       bool keep_traces = false);

nlohmann::json tts_trace_to_json(const TtsTrace& t);

}  // namespace spark
