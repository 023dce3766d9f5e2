#include "dca/prompting.hpp"

namespace dca {

const std::string_view kInstructionBlock =
    "Provide your best guess (letter only) and the probability that it is "
    "correct (0% to 100%) for the above question. Give ONLY the guess and "
    "probability, no other words or explanation. For example:\n"
    "\n"
    "Guess: <the letter only, as short as possible; not a complete sentence, "
    "just the letter!>\n"
    "Probability: <the probability between 0% and 100% that your guess is "
    "correct, without any extra commentary whatsoever; just the probability!>";

std::string render_options(const Question& q) {
  std::string out;
  for (std::size_t i = 0; i < q.choices.size(); ++i) {
    if (i > 0) out += '\n';
    out += q.choices[i].label;
    out += ". ";
    out += q.choices[i].text;
  }
  return out;
}

RenderedPrompt render_prompt(const Question& q) {
  RenderedPrompt p;
  p.question_id = q.id;
  p.text.reserve(q.stem.size() + kInstructionBlock.size() + 64 * q.choices.size());
  p.text += q.stem;
  p.text += '\n';
  p.text += render_options(q);
  p.text += "\n\n";
  p.text += kInstructionBlock;
  return p;
}

}  // namespace dca
