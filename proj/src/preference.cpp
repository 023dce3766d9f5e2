#include "dca/preference.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dca/errors.hpp"
#include "dca/io.hpp"

namespace dca {

using nlohmann::json;

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::kEqualAfterRounding:
      return "equal_after_rounding";
    case SkipReason::kExtractionFailed:
      return "extraction_failed";
    case SkipReason::kIncorrectAnswer:
      return "incorrect_answer";
  }
  return "unknown";
}

std::string format_percent(double percent) {
  // std::lround rounds halfway cases away from zero.
  return fmt::format("{}%", std::lround(percent));
}

PairOutcome make_pair(const std::string& prompt, const ConfidenceRecord& record,
                      const std::string& original_response) {
  if (!record.ok()) return Skipped{SkipReason::kExtractionFailed};

  VerbalizedConfidence site;
  try {
    site = parse_verbalized(original_response);
  } catch (const ParseError& e) {
    throw SubstitutionSiteNotFound("response for '" + record.question_id +
                                   "' no longer parses: " + e.what());
  }
  if (site.c_v != *record.c_v || site.label != *record.predicted_label) {
    throw SubstitutionSiteNotFound("response for '" + record.question_id +
                                   "' disagrees with its record");
  }

  std::string chosen;
  chosen.reserve(original_response.size() + 4);
  chosen.append(original_response, 0, site.probability_begin);
  chosen += format_percent(*record.c_i);
  chosen.append(original_response, site.probability_end);
  if (chosen == original_response) return Skipped{SkipReason::kEqualAfterRounding};

  PreferencePair pair;
  pair.prompt = prompt;
  pair.chosen = std::move(chosen);
  pair.rejected = original_response;
  pair.question_id = record.question_id;
  pair.c_v_original = *record.c_v;
  pair.c_i = *record.c_i;
  return pair;
}

json pair_to_json(const PreferencePair& pair) {
  return json{{"prompt", pair.prompt},
              {"chosen", pair.chosen},
              {"rejected", pair.rejected},
              {"question_id", pair.question_id},
              {"c_v_original", pair.c_v_original},
              {"c_i", pair.c_i}};
}

PreferencePair pair_from_json(const json& obj, std::size_t line_no) {
  auto get_string = [&](const char* field) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_string()) {
      throw SchemaError(line_no, std::string("missing string field '") + field + "'");
    }
    return it->get<std::string>();
  };
  auto get_number = [&](const char* field) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_number()) {
      throw SchemaError(line_no, std::string("missing numeric field '") + field + "'");
    }
    return it->get<double>();
  };
  PreferencePair pair;
  pair.prompt = get_string("prompt");
  pair.chosen = get_string("chosen");
  pair.rejected = get_string("rejected");
  pair.question_id = get_string("question_id");
  pair.c_v_original = get_number("c_v_original");
  pair.c_i = get_number("c_i");
  return pair;
}

std::size_t write_preferences(const std::vector<PreferencePair>& pairs,
                              const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(pair_to_json(p));
  write_file_atomic(path, to_jsonl(rows));
  return rows.size();
}

std::vector<PreferencePair> read_preferences(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    out.push_back(pair_from_json(obj, line_no));
  });
  return out;
}

}  // namespace dca
