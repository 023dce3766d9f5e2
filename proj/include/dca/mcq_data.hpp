#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dca {

struct Choice {
  char label = 'A';
  std::string text;

  bool operator==(const Choice&) const = default;
};

// One normalized multiple-choice item. Labels run consecutively from 'A'.
struct Question {
  std::string id;
  std::string subject;  // empty for subject-less datasets
  std::string stem;
  std::vector<Choice> choices;
  char gold_label = 'A';

  bool operator==(const Question&) const = default;
};

struct SamplingSpec {
  std::size_t per_subject = 0;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  std::string name;
  std::string split;
  std::filesystem::path path;
  std::optional<SamplingSpec> sampling;
};

// Returns a description of the first violated invariant, or nullopt.
std::optional<std::string> validate_question(const Question& q);

// Normalized record schema: id, subject, question, choices[{label, text}],
// answer_label.
Question question_from_json(const nlohmann::json& obj, std::size_t line_no);
nlohmann::json question_to_json(const Question& q);

// Loads every record in file order; applies spec.sampling when present.
// Throws SchemaError, DuplicateId, IoError, InsufficientSubjectPool.
std::vector<Question> load_dataset(const DatasetSpec& spec);
std::vector<Question> load_dataset(const std::filesystem::path& path);

void write_dataset(const std::vector<Question>& questions,
                   const std::filesystem::path& path);

// Draws exactly `per_subject` questions from every distinct subject without
// replacement. Output is sorted by (subject, id) and depends only on the
// arguments.
std::vector<Question> sample_balanced(const std::vector<Question>& questions,
                                      std::size_t per_subject,
                                      std::uint64_t seed);

}  // namespace dca
