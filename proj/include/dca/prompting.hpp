#pragma once

#include <string>
#include <string_view>

#include "dca/mcq_data.hpp"

namespace dca {

// Confidence-elicitation instructions appended to every prompt, unchanged.
extern const std::string_view kInstructionBlock;

struct RenderedPrompt {
  std::string question_id;
  std::string text;

  bool operator==(const RenderedPrompt&) const = default;
};

// "A. text" lines, one per choice, joined by '\n'.
std::string render_options(const Question& q);

// stem, newline, option block, blank line, instruction block.
RenderedPrompt render_prompt(const Question& q);

}  // namespace dca
