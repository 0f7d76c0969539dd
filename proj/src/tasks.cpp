#include "spark/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spark/errors.hpp"
#include "spark/rng.hpp"

namespace spark {

using nlohmann::json;

std::string family_name(Family f) {
    return f == Family::ModArith ? "mod_arith" : "max_of_list";
}

Family family_from_name(const std::string& s) {
    if (s == "mod_arith") return Family::ModArith;
    if (s == "max_of_list") return Family::MaxOfList;
    throw ParseError("unknown task family: " + s);
}

int Task::answer_vocab() const {
    if (family == Family::ModArith) return mod_arith.modulus;
    return max_of_list.vmax - max_of_list.vmin + 1;
}

int Task::cot_vocab() const {
    if (family == Family::ModArith) {
        int m = mod_arith.modulus;
        if (mod_arith.op == ModOp::Add) return 2 * (m - 1) + 1;
        return (m - 1) * (m - 1) + 1;
    }
    return static_cast<int>(max_of_list.values.size());
}

int Task::answer_min() const {
    return family == Family::ModArith ? 0 : max_of_list.vmin;
}

static int mod_arith_cot(const ModArithQuestion& q) {
    return q.op == ModOp::Add ? q.a + q.b : q.a * q.b;
}

void validate_task(const Task& t) {
    if (t.family == Family::ModArith) {
        const auto& q = t.mod_arith;
        if (q.modulus < 2)
            throw ValidationError("task " + t.id + ": modulus < 2");
        if (q.a < 0 || q.a >= q.modulus || q.b < 0 || q.b >= q.modulus)
            throw ValidationError("task " + t.id + ": operand outside [0, modulus)");
        if (t.gold_answer < 0 || t.gold_answer >= q.modulus)
            throw ValidationError("task " + t.id + ": gold_answer outside [0, modulus)");
        int cot = mod_arith_cot(q);
        if (t.gold_cot != cot)
            throw ValidationError("task " + t.id + ": gold_cot inconsistent with question");
        if (t.gold_answer != cot % q.modulus)
            throw ValidationError("task " + t.id + ": gold_answer inconsistent with question");
    } else {
        const auto& q = t.max_of_list;
        if (q.values.size() < 2)
            throw ValidationError("task " + t.id + ": list shorter than 2");
        if (q.vmin > q.vmax)
            throw ValidationError("task " + t.id + ": empty value range");
        for (int v : q.values)
            if (v < q.vmin || v > q.vmax)
                throw ValidationError("task " + t.id + ": list value outside range");
        auto it = std::max_element(q.values.begin(), q.values.end());
        if (t.gold_answer != *it)
            throw ValidationError("task " + t.id + ": gold_answer is not the list maximum");
        int argmax = static_cast<int>(it - q.values.begin());
        if (t.gold_cot != argmax)
            throw ValidationError("task " + t.id + ": gold_cot is not the argmax index");
    }
}

TaskSet gen_tasks(Family family, int count, std::uint64_t seed, const GenParams& params) {
    if (count < 1) throw ParamError("gen_tasks: count must be >= 1");
    if (family == Family::ModArith) {
        if (params.modulus < 2 || params.modulus > 1000)
            throw ParamError("gen_tasks: modulus must be in [2, 1000]");
    } else {
        if (params.list_len < 2 || params.list_len > 16)
            throw ParamError("gen_tasks: list length must be in [2, 16]");
        if (params.vmin > params.vmax)
            throw ParamError("gen_tasks: empty value range");
    }

    TaskSet set;
    set.seed = seed;
    Rng rng(splitmix64(seed));
    for (int i = 0; i < count; ++i) {
        Task t;
        t.family = family;
        std::ostringstream id;
        id << family_name(family) << "-" << seed << "-" << i;
        t.id = id.str();
        if (family == Family::ModArith) {
            t.mod_arith.modulus = params.modulus;
            t.mod_arith.op = params.op;
            t.mod_arith.a = rng.uniform_int(params.modulus);
            t.mod_arith.b = rng.uniform_int(params.modulus);
            t.gold_cot = mod_arith_cot(t.mod_arith);
            t.gold_answer = t.gold_cot % params.modulus;
        } else {
            t.max_of_list.vmin = params.vmin;
            t.max_of_list.vmax = params.vmax;
            int span = params.vmax - params.vmin + 1;
            t.max_of_list.values.resize(params.list_len);
            for (int& v : t.max_of_list.values) v = params.vmin + rng.uniform_int(span);
            auto it = std::max_element(t.max_of_list.values.begin(), t.max_of_list.values.end());
            t.gold_answer = *it;
            t.gold_cot = static_cast<int>(it - t.max_of_list.values.begin());
        }
        validate_task(t);
        set.tasks.push_back(std::move(t));
    }
    return set;
}

json task_to_json(const Task& t) {
    json q;
    if (t.family == Family::ModArith) {
        q = {{"a", t.mod_arith.a},
             {"b", t.mod_arith.b},
             {"modulus", t.mod_arith.modulus},
             {"op", t.mod_arith.op == ModOp::Add ? "add" : "mul"}};
    } else {
        q = {{"values", t.max_of_list.values},
             {"vmin", t.max_of_list.vmin},
             {"vmax", t.max_of_list.vmax}};
    }
    return json{{"id", t.id},
                {"family", family_name(t.family)},
                {"question", q},
                {"gold_answer", t.gold_answer},
                {"gold_cot", t.gold_cot}};
}

Task task_from_json(const json& j) {
    Task t;
    t.id = j.at("id").get<std::string>();
    t.family = family_from_name(j.at("family").get<std::string>());
    const json& q = j.at("question");
    if (t.family == Family::ModArith) {
        t.mod_arith.a = q.at("a").get<int>();
        t.mod_arith.b = q.at("b").get<int>();
        t.mod_arith.modulus = q.at("modulus").get<int>();
        std::string op = q.at("op").get<std::string>();
        if (op == "add")
            t.mod_arith.op = ModOp::Add;
        else if (op == "mul")
            t.mod_arith.op = ModOp::Mul;
        else
            throw ParseError("unknown mod_arith op: " + op);
    } else {
        t.max_of_list.values = q.at("values").get<std::vector<int>>();
        t.max_of_list.vmin = q.at("vmin").get<int>();
        t.max_of_list.vmax = q.at("vmax").get<int>();
    }
    t.gold_answer = j.at("gold_answer").get<int>();
    t.gold_cot = j.at("gold_cot").get<int>();
    return t;
}

TaskSet load_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open task file: " + path);
    TaskSet set;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("task file " + path + " line " + std::to_string(lineno) +
                             ": " + e.what());
        }
        Task t;
        try {
            t = task_from_json(j);
        } catch (const json::exception& e) {
            throw ParseError("task file " + path + " line " + std::to_string(lineno) +
                             ": " + e.what());
        }
        validate_task(t);
        if (!seen.insert(t.id).second)
            throw ValidationError("task " + t.id + ": duplicate id");
        set.tasks.push_back(std::move(t));
    }
    return set;
}

void save_tasks(const TaskSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write task file: " + path);
    for (const Task& t : set.tasks) out << task_to_json(t).dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace spark
