#include "spark/config.hpp"

#include <fstream>
#include <sstream>

#include "spark/errors.hpp"

namespace spark {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParamError("config key " + key + ": not an integer: " + v);
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParamError("config key " + key + ": not a number: " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParamError("config key " + key + ": not a boolean: " + v);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "policy") policy = value;
    else if (key == "hidden_dim") hidden_dim = static_cast<int>(parse_int(key, value));
    else if (key == "init_scale") init_scale = parse_double(key, value);
    else if (key == "family") family = value;
    else if (key == "modulus") modulus = static_cast<int>(parse_int(key, value));
    else if (key == "mod_op") mod_op = value;
    else if (key == "list_len") list_len = static_cast<int>(parse_int(key, value));
    else if (key == "value_min") value_min = static_cast<int>(parse_int(key, value));
    else if (key == "value_max") value_max = static_cast<int>(parse_int(key, value));
    else if (key == "task_count") task_count = static_cast<int>(parse_int(key, value));
    else if (key == "group_size") group_size = static_cast<int>(parse_int(key, value));
    else if (key == "batch_size") batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "epsilon") epsilon = parse_double(key, value);
    else if (key == "lambda") lambda = parse_double(key, value);
    else if (key == "step_size") step_size = parse_double(key, value);
    else if (key == "steps") steps = static_cast<int>(parse_int(key, value));
    else if (key == "ref_refresh") ref_refresh = static_cast<int>(parse_int(key, value));
    else if (key == "recycle_quota") recycle_quota = static_cast<int>(parse_int(key, value));
    else if (key == "recycle_budget") recycle_budget = static_cast<int>(parse_int(key, value));
    else if (key == "mix_pointwise") mix_pointwise = parse_double(key, value);
    else if (key == "mix_pairwise") mix_pairwise = parse_double(key, value);
    else if (key == "mix_reflect") mix_reflect = parse_double(key, value);
    else if (key == "source_answer") source_answer = parse_bool(key, value);
    else if (key == "source_cot") source_cot = parse_bool(key, value);
    else if (key == "max_pairs") max_pairs = static_cast<int>(parse_int(key, value));
    else if (key == "tts_max_rounds") tts_max_rounds = static_cast<int>(parse_int(key, value));
    else if (key == "workers") workers = static_cast<int>(parse_int(key, value));
    else if (key == "tasks_path") tasks_path = value;
    else if (key == "checkpoint_path") checkpoint_path = value;
    else if (key == "metrics_path") metrics_path = value;
    else throw ParamError("unknown config key: " + key);
}

void RunConfig::validate() const {
    if (policy != "tabular" && policy != "mlp")
        throw ParamError("config: policy must be tabular or mlp");
    if (family != "mod_arith" && family != "max_of_list")
        throw ParamError("config: family must be mod_arith or max_of_list");
    if (mod_op != "add" && mod_op != "mul")
        throw ParamError("config: mod_op must be add or mul");
    if (hidden_dim < 1) throw ParamError("config: hidden_dim must be >= 1");
    if (init_scale < 0) throw ParamError("config: init_scale must be >= 0");
    if (task_count < 1) throw ParamError("config: task_count must be >= 1");
    if (group_size < 2) throw ParamError("config: group_size must be >= 2");
    if (batch_size < 1) throw ParamError("config: batch_size must be >= 1");
    if (epsilon <= 0) throw ParamError("config: epsilon must be > 0");
    if (lambda < 0) throw ParamError("config: lambda must be >= 0");
    if (step_size <= 0) throw ParamError("config: step_size must be > 0");
    if (steps < 0) throw ParamError("config: steps must be >= 0");
    if (ref_refresh < 0) throw ParamError("config: ref_refresh must be >= 0");
    if (recycle_quota < 0) throw ParamError("config: recycle_quota must be >= 0");
    if (recycle_budget < 0) throw ParamError("config: recycle_budget must be >= 0");
    if (mix_pointwise < 0 || mix_pairwise < 0 || mix_reflect < 0)
        throw ParamError("config: mix ratios must be >= 0");
    if (max_pairs < 0) throw ParamError("config: max_pairs must be >= 0");
    if (tts_max_rounds < 1) throw ParamError("config: tts_max_rounds must be >= 1");
    if (workers < 1) throw ParamError("config: workers must be >= 1");
}

Family RunConfig::family_enum() const { return family_from_name(family); }

GenParams RunConfig::gen_params() const {
    GenParams p;
    p.modulus = modulus;
    p.op = mod_op == "mul" ? ModOp::Mul : ModOp::Add;
    p.list_len = list_len;
    p.vmin = value_min;
    p.vmax = value_max;
    return p;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.group_size = group_size;
    t.epsilon = epsilon;
    t.lambda = lambda;
    t.step_size = step_size;
    t.recycle_quota = recycle_quota;
    t.mix.budget = recycle_budget;
    t.mix.w_pointwise = mix_pointwise;
    t.mix.w_pairwise = mix_pairwise;
    t.mix.w_reflect = mix_reflect;
    t.source_answer = source_answer;
    t.source_cot = source_cot;
    t.max_pairs = max_pairs;
    return t;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParamError("config " + path + " line " + std::to_string(lineno) +
                             ": expected key = value");
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& overrides) {
    for (const auto& [k, v] : overrides) cfg.set(k, v);
}

}  // namespace spark
