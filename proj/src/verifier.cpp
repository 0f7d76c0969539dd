#include "spark/verifier.hpp"

#include <cctype>

namespace spark {

int verify_answer(int predicted, const Task& task) {
    return predicted == task.gold_answer ? 1 : 0;
}

int verify_cot(int predicted_cot, const Task& task) {
    return predicted_cot == task.gold_cot ? 1 : 0;
}

std::optional<int> extract_boxed(const std::string& text) {
    const std::string marker = "\\box{";
    std::size_t pos = text.rfind(marker);
    if (pos == std::string::npos) return std::nullopt;
    std::size_t start = pos + marker.size();
    std::size_t end = text.find('}', start);
    if (end == std::string::npos) return std::nullopt;
    std::string inner = text.substr(start, end - start);
    std::size_t a = 0, b = inner.size();
    while (a < b && std::isspace(static_cast<unsigned char>(inner[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(inner[b - 1]))) --b;
    inner = inner.substr(a, b - a);
    if (inner.empty()) return std::nullopt;
    std::size_t i = (inner[0] == '-' || inner[0] == '+') ? 1 : 0;
    if (i == inner.size()) return std::nullopt;
    for (std::size_t k = i; k < inner.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(inner[k]))) return std::nullopt;
    try {
        return std::stoi(inner);
    } catch (...) {
        return std::nullopt;
    }
}

std::string render_boxed(int value) {
    return "\\box{" + std::to_string(value) + "}";
}

}  // namespace spark
