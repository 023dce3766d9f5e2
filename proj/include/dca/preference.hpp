#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dca/confidence.hpp"

namespace dca {

// Chosen is the original response with its stated probability replaced by
// the rounded internal confidence; rejected is the original response.
struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  std::string question_id;
  double c_v_original = 0.0;
  double c_i = 0.0;

  bool operator==(const PreferencePair&) const = default;
};

enum class SkipReason { kEqualAfterRounding, kExtractionFailed, kIncorrectAnswer };

std::string_view to_string(SkipReason reason);

struct Skipped {
  SkipReason reason;
};

using PairOutcome = std::variant<PreferencePair, Skipped>;

// Integer percent with '%' suffix, rounding half away from zero.
std::string format_percent(double percent);

// Throws SubstitutionSiteNotFound when `original_response` no longer parses
// to the record's verbalized confidence.
PairOutcome make_pair(const std::string& prompt, const ConfidenceRecord& record,
                      const std::string& original_response);

struct PairStats {
  std::size_t written = 0;
  std::map<SkipReason, std::size_t> skipped;
};

nlohmann::json pair_to_json(const PreferencePair& pair);
PreferencePair pair_from_json(const nlohmann::json& obj, std::size_t line_no);

// One object per line with prompt, chosen, rejected, question_id,
// c_v_original, c_i. Returns the number of records written.
std::size_t write_preferences(const std::vector<PreferencePair>& pairs,
                              const std::filesystem::path& path);
std::vector<PreferencePair> read_preferences(const std::filesystem::path& path);

}  // namespace dca
