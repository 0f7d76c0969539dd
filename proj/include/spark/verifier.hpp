#pragma once

#include <optional>
#include <string>

#include "spark/tasks.hpp"

namespace spark {

// Binary rule-based reward: 1 iff the prediction matches the gold value.
int verify_answer(int predicted, const Task& task);
int verify_cot(int predicted_cot, const Task& task);

// Pulls the integer out of the LAST \box{...} in the text; nullopt when no
// box is present or its content is not an integer. Callers score a failed
// extraction as reward 0.
std::optional<int> extract_boxed(const std::string& text);

std::string render_boxed(int value);

}  // namespace spark
