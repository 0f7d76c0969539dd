#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace spark {

enum class Family { ModArith, MaxOfList };
enum class ModOp { Add, Mul };

std::string family_name(Family f);
Family family_from_name(const std::string& s);

struct ModArithQuestion {
    int a = 0;
    int b = 0;
    int modulus = 10;
    ModOp op = ModOp::Add;
};

struct MaxOfListQuestion {
    std::vector<int> values;
    int vmin = 0;
    int vmax = 9;
};

// One verifiable problem. gold_cot is the family's intermediate value:
// the unreduced sum/product for ModArith, the argmax index for MaxOfList.
struct Task {
    std::string id;
    Family family = Family::ModArith;
    ModArithQuestion mod_arith;
    MaxOfListQuestion max_of_list;
    int gold_answer = 0;
    int gold_cot = 0;

    int answer_vocab() const;  // size of the family's answer range
    int cot_vocab() const;     // size of the family's CoT range
    int answer_min() const;    // lowest answer value (0 or vmin)
};

struct TaskSet {
    std::vector<Task> tasks;
    std::uint64_t seed = 0;  // 0 for file-loaded sets
};

// Family parameters for the synthetic generators.
struct GenParams {
    int modulus = 10;
    ModOp op = ModOp::Add;
    int list_len = 4;
    int vmin = 0;
    int vmax = 9;
};

TaskSet gen_tasks(Family family, int count, std::uint64_t seed, const GenParams& params);

TaskSet load_tasks(const std::string& path);
void save_tasks(const TaskSet& set, const std::string& path);

nlohmann::json task_to_json(const Task& t);
Task task_from_json(const nlohmann::json& j);

// Re-checks the Task invariants; throws ValidationError naming the task id.
void validate_task(const Task& t);

}  // namespace spark
