#include "dca/mcq_data.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "dca/errors.hpp"
#include "dca/io.hpp"
#include "dca/rng.hpp"

namespace dca {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw SchemaError(line_no, std::string("missing field '") + field + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* field,
                           std::size_t line_no) {
  const json& v = require(obj, field, line_no);
  if (!v.is_string()) {
    throw SchemaError(line_no, std::string("field '") + field +
                                   "' must be a string");
  }
  return v.get<std::string>();
}

char parse_label(const json& v, const char* what, std::size_t line_no) {
  if (!v.is_string()) {
    throw SchemaError(line_no, std::string(what) + " must be a string");
  }
  const auto& s = v.get_ref<const std::string&>();
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'Z') {
    throw SchemaError(line_no, std::string(what) + " '" + s +
                                   "' is not a single uppercase letter");
  }
  return s[0];
}

}  // namespace

std::optional<std::string> validate_question(const Question& q) {
  if (q.id.empty()) return "id is empty";
  if (q.choices.size() < 2 || q.choices.size() > 26) {
    return "expected 2..26 choices, got " + std::to_string(q.choices.size());
  }
  for (std::size_t i = 0; i < q.choices.size(); ++i) {
    const char expected = static_cast<char>('A' + i);
    if (q.choices[i].label != expected) {
      return std::string("choice labels must run consecutively from 'A'; "
                         "expected '") +
             expected + "' at position " + std::to_string(i) + ", got '" +
             q.choices[i].label + "'";
    }
  }
  const char last = static_cast<char>('A' + q.choices.size() - 1);
  if (q.gold_label < 'A' || q.gold_label > last) {
    return std::string("answer_label '") + q.gold_label +
           "' is not one of the choice labels";
  }
  return std::nullopt;
}

Question question_from_json(const json& obj, std::size_t line_no) {
  Question q;
  q.id = require_string(obj, "id", line_no);
  q.subject = require_string(obj, "subject", line_no);
  q.stem = require_string(obj, "question", line_no);
  const json& choices = require(obj, "choices", line_no);
  if (!choices.is_array()) {
    throw SchemaError(line_no, "field 'choices' must be an array");
  }
  for (const auto& c : choices) {
    if (!c.is_object()) throw SchemaError(line_no, "choice is not an object");
    Choice choice;
    choice.label = parse_label(require(c, "label", line_no), "choice label",
                               line_no);
    choice.text = require_string(c, "text", line_no);
    q.choices.push_back(std::move(choice));
  }
  q.gold_label =
      parse_label(require(obj, "answer_label", line_no), "answer_label",
                  line_no);
  if (auto problem = validate_question(q)) throw SchemaError(line_no, *problem);
  return q;
}

json question_to_json(const Question& q) {
  json choices = json::array();
  for (const auto& c : q.choices) {
    choices.push_back({{"label", std::string(1, c.label)}, {"text", c.text}});
  }
  return json{{"id", q.id},
              {"subject", q.subject},
              {"question", q.stem},
              {"choices", std::move(choices)},
              {"answer_label", std::string(1, q.gold_label)}};
}

std::vector<Question> load_dataset(const std::filesystem::path& path) {
  std::vector<Question> out;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    Question q = question_from_json(obj, line_no);
    if (!seen.insert(q.id).second) throw DuplicateId(q.id);
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<Question> load_dataset(const DatasetSpec& spec) {
  if (!std::filesystem::is_regular_file(spec.path)) {
    throw IoError("dataset '" + spec.name + "' not found at '" +
                  spec.path.string() + "'");
  }
  auto questions = load_dataset(spec.path);
  if (spec.sampling) {
    return sample_balanced(questions, spec.sampling->per_subject,
                           spec.sampling->seed);
  }
  return questions;
}

void write_dataset(const std::vector<Question>& questions,
                   const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(questions.size());
  for (const auto& q : questions) rows.push_back(question_to_json(q));
  write_file_atomic(path, to_jsonl(rows));
}

std::vector<Question> sample_balanced(const std::vector<Question>& questions,
                                      std::size_t per_subject,
                                      std::uint64_t seed) {
  if (per_subject == 0) {
    throw ConfigError("per_subject must be positive");
  }
  // Pools are keyed and ordered by subject, and each pool is put in id order
  // so the draw does not depend on input ordering.
  std::map<std::string, std::vector<const Question*>> pools;
  for (const auto& q : questions) pools[q.subject].push_back(&q);

  Rng rng(seed);
  std::vector<Question> out;
  out.reserve(pools.size() * per_subject);
  for (auto& [subject, pool] : pools) {
    if (pool.size() < per_subject) {
      throw InsufficientSubjectPool(subject, pool.size(), per_subject);
    }
    std::sort(pool.begin(), pool.end(),
              [](const Question* a, const Question* b) { return a->id < b->id; });
    // Partial Fisher-Yates: the first per_subject slots become the sample.
    for (std::size_t i = 0; i < per_subject; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<const Question*> picked(pool.begin(),
                                        pool.begin() + per_subject);
    std::sort(picked.begin(), picked.end(),
              [](const Question* a, const Question* b) { return a->id < b->id; });
    for (const Question* q : picked) out.push_back(*q);
  }
  return out;
}

}  // namespace dca
