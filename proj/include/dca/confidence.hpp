#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dca/backend.hpp"
#include "dca/mcq_data.hpp"

namespace dca {

enum class RecordStatus { kOk, kParseFailed, kInternalFailed, kBackendFailed };

std::string_view to_string(RecordStatus status);
RecordStatus status_from_string(std::string_view s);

// Per-question join of verbalized and internal confidence, both in percent.
struct ConfidenceRecord {
  std::string question_id;
  std::optional<char> predicted_label;
  std::optional<double> c_v;
  std::optional<double> c_i;
  std::optional<bool> correct;
  RecordStatus status = RecordStatus::kOk;

  bool ok() const { return status == RecordStatus::kOk; }
  bool operator==(const ConfidenceRecord&) const = default;
};

// Result of parsing a response. Offsets index into the parsed text.
struct VerbalizedConfidence {
  char label = 'A';
  double c_v = 0.0;
  std::size_t label_offset = 0;
  // [probability_begin, probability_end) covers the number and a trailing
  // '%' when present.
  std::size_t probability_begin = 0;
  std::size_t probability_end = 0;
  // Count of "Probability:" markers; more than one is a diagnostic, not an
  // error.
  std::size_t probability_markers = 0;
};

// Reads the guess letter after the first "Guess:" and the first number after
// the first "Probability:" (both markers case-insensitive). Throws
// GuessNotFound, ProbabilityNotFound or ProbabilityOutOfRange.
VerbalizedConfidence parse_verbalized(std::string_view text);

// Token text with surrounding whitespace and tokenizer word-boundary marks
// ("▁", "Ġ") removed.
std::string_view trim_token(std::string_view token);

// Percent mass per choice letter at one token position, normalized over the
// letters present (the emitted token and its alternatives). If
// `allowed_letters` is non-empty only those letters count.
std::map<char, double> letter_distribution(const TokenLogprob& position,
                                           std::string_view allowed_letters = {});

// Internal confidence C_i in percent. The answer token is the first token
// ending after `label_offset` whose trimmed text is the predicted letter.
// Without renormalization C_i = 100 * exp(logprob). Throws
// AnswerTokenNotFound.
double extract_internal(const GenerationResult& result, char predicted_label,
                        bool renormalize, std::size_t label_offset = 0,
                        std::string_view allowed_letters = {});

struct ExtractionOptions {
  bool renormalize = false;
};

struct ExtractionDiagnostics {
  // Responses that carried more than one "Probability:" marker.
  std::size_t multiple_probability_markers = 0;
};

// One record per question, in question order. `outcomes` are matched by
// question id; a missing or unknown id throws UnmatchedQuestionId.
std::vector<ConfidenceRecord> build_records(
    const std::vector<Question>& questions, const std::vector<BatchEntry>& outcomes,
    const ExtractionOptions& options = {},
    ExtractionDiagnostics* diagnostics = nullptr);

// Fraction of records whose status is not ok. Throws EmptyInput.
double extraction_failure_rate(const std::vector<ConfidenceRecord>& records);

nlohmann::json record_to_json(const ConfidenceRecord& r);
ConfidenceRecord record_from_json(const nlohmann::json& obj, std::size_t line_no);
void write_records(const std::vector<ConfidenceRecord>& records,
                   const std::filesystem::path& path);
std::vector<ConfidenceRecord> read_records(const std::filesystem::path& path);

}  // namespace dca
