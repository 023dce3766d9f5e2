#include "dca/confidence.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

#include "dca/errors.hpp"
#include "dca/io.hpp"

namespace dca {

namespace {

using nlohmann::json;

constexpr std::string_view kGuessMarker = "guess:";
constexpr std::string_view kProbabilityMarker = "probability:";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
char upper(char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); }

std::size_t find_ci(std::string_view text, std::string_view marker,
                    std::size_t from = 0) {
  if (marker.size() > text.size()) return std::string_view::npos;
  for (std::size_t i = from; i + marker.size() <= text.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < marker.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(text[i + k])) != marker[k]) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

// Returns the uppercase letter at the single-letter position, if any.
std::optional<char> single_letter(std::string_view token) {
  std::string_view t = trim_token(token);
  if (t.size() != 1 || !is_alpha(t[0])) return std::nullopt;
  return upper(t[0]);
}

}  // namespace

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::kOk:
      return "ok";
    case RecordStatus::kParseFailed:
      return "parse_failed";
    case RecordStatus::kInternalFailed:
      return "internal_failed";
    case RecordStatus::kBackendFailed:
      return "backend_failed";
  }
  return "ok";
}

RecordStatus status_from_string(std::string_view s) {
  if (s == "ok") return RecordStatus::kOk;
  if (s == "parse_failed") return RecordStatus::kParseFailed;
  if (s == "internal_failed") return RecordStatus::kInternalFailed;
  if (s == "backend_failed") return RecordStatus::kBackendFailed;
  throw DataError("unknown record status '" + std::string(s) + "'");
}

VerbalizedConfidence parse_verbalized(std::string_view text) {
  VerbalizedConfidence out;

  const std::size_t guess = find_ci(text, kGuessMarker);
  if (guess == std::string_view::npos) throw GuessNotFound();
  std::size_t i = guess + kGuessMarker.size();
  while (i < text.size() && (is_space(text[i]) || is_punct(text[i]))) ++i;
  if (i >= text.size() || !is_alpha(text[i]) ||
      (i + 1 < text.size() && is_alnum(text[i + 1]))) {
    throw GuessNotFound();
  }
  out.label = upper(text[i]);
  out.label_offset = i;

  const std::size_t prob = find_ci(text, kProbabilityMarker);
  if (prob == std::string_view::npos) throw ProbabilityNotFound();
  for (std::size_t at = prob; at != std::string_view::npos;
       at = find_ci(text, kProbabilityMarker, at + kProbabilityMarker.size())) {
    ++out.probability_markers;
  }

  // First number after the marker; give up at a line break once the line
  // has had other content.
  std::size_t j = prob + kProbabilityMarker.size();
  bool seen_content = false;
  for (; j < text.size(); ++j) {
    const char c = text[j];
    if (is_digit(c)) break;
    if (c == '.' && j + 1 < text.size() && is_digit(text[j + 1])) break;
    if (c == '\n' && seen_content) throw ProbabilityNotFound();
    if (!is_space(c)) seen_content = true;
  }
  if (j >= text.size()) throw ProbabilityNotFound();

  std::size_t begin = j;
  const bool negative = begin > 0 && text[begin - 1] == '-';
  if (negative) --begin;
  std::size_t end = j;
  while (end < text.size() && is_digit(text[end])) ++end;
  if (end + 1 < text.size() && text[end] == '.' && is_digit(text[end + 1])) {
    ++end;
    while (end < text.size() && is_digit(text[end])) ++end;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data() + j, text.data() + end, value);
  if (ec != std::errc() || ptr != text.data() + end) throw ProbabilityNotFound();
  if (negative) value = -value;

  std::size_t span_end = end;
  std::size_t k = end;
  while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
  if (k < text.size() && text[k] == '%') span_end = k + 1;

  if (!(value >= 0.0 && value <= 100.0)) throw ProbabilityOutOfRange(value);
  out.c_v = value;
  out.probability_begin = begin;
  out.probability_end = span_end;
  return out;
}

std::string_view trim_token(std::string_view token) {
  static constexpr std::string_view kSentencePiece = "\xE2\x96\x81";  // ▁
  static constexpr std::string_view kByteLevel = "\xC4\xA0";          // Ġ
  bool changed = true;
  while (changed && !token.empty()) {
    changed = false;
    while (!token.empty() && is_space(token.front())) {
      token.remove_prefix(1);
      changed = true;
    }
    while (!token.empty() && is_space(token.back())) {
      token.remove_suffix(1);
      changed = true;
    }
    for (std::string_view mark : {kSentencePiece, kByteLevel}) {
      if (token.substr(0, mark.size()) == mark) {
        token.remove_prefix(mark.size());
        changed = true;
      }
    }
  }
  return token;
}

std::map<char, double> letter_distribution(const TokenLogprob& position,
                                           std::string_view allowed_letters) {
  std::map<char, double> mass;
  std::set<std::string> seen;
  auto add = [&](const std::string& token, double logprob) {
    if (!seen.insert(token).second) return;
    auto letter = single_letter(token);
    if (!letter) return;
    if (!allowed_letters.empty() &&
        allowed_letters.find(*letter) == std::string_view::npos) {
      return;
    }
    mass[*letter] += std::exp(logprob);
  };
  add(position.token_text, position.logprob);
  for (const auto& alt : position.alternatives) add(alt.token_text, alt.logprob);

  double total = 0.0;
  for (const auto& [letter, m] : mass) total += m;
  if (total > 0.0) {
    for (auto& [letter, m] : mass) m = 100.0 * m / total;
  }
  return mass;
}

double extract_internal(const GenerationResult& result, char predicted_label,
                        bool renormalize, std::size_t label_offset,
                        std::string_view allowed_letters) {
  const char wanted = upper(predicted_label);
  std::size_t offset = 0;
  for (const auto& tok : result.tokens) {
    const std::size_t end = offset + tok.token_text.size();
    offset = end;
    if (end <= label_offset) continue;
    auto letter = single_letter(tok.token_text);
    if (!letter || *letter != wanted) continue;
    if (renormalize) {
      const auto dist = letter_distribution(tok, allowed_letters);
      auto it = dist.find(wanted);
      if (it == dist.end()) throw AnswerTokenNotFound();
      return std::clamp(it->second, 0.0, 100.0);
    }
    return std::clamp(100.0 * std::exp(tok.logprob), 0.0, 100.0);
  }
  throw AnswerTokenNotFound();
}

std::vector<ConfidenceRecord> build_records(const std::vector<Question>& questions,
                                            const std::vector<BatchEntry>& outcomes,
                                            const ExtractionOptions& options,
                                            ExtractionDiagnostics* diagnostics) {
  std::unordered_map<std::string, const BatchEntry*> by_id;
  by_id.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (!by_id.emplace(o.question_id, &o).second) throw DuplicateId(o.question_id);
  }
  std::unordered_map<std::string, const Question*> questions_by_id;
  for (const auto& q : questions) questions_by_id.emplace(q.id, &q);
  for (const auto& o : outcomes) {
    if (!questions_by_id.count(o.question_id)) throw UnmatchedQuestionId(o.question_id);
  }

  std::vector<ConfidenceRecord> records;
  records.reserve(questions.size());
  for (const auto& q : questions) {
    auto it = by_id.find(q.id);
    if (it == by_id.end()) throw UnmatchedQuestionId(q.id);
    const BatchEntry& outcome = *it->second;

    ConfidenceRecord rec;
    rec.question_id = q.id;
    if (!outcome.ok()) {
      rec.status = RecordStatus::kBackendFailed;
      records.push_back(std::move(rec));
      continue;
    }

    VerbalizedConfidence verbal;
    try {
      verbal = parse_verbalized(outcome.result->text);
    } catch (const ParseError&) {
      rec.status = RecordStatus::kParseFailed;
      records.push_back(std::move(rec));
      continue;
    }
    if (diagnostics && verbal.probability_markers > 1) {
      ++diagnostics->multiple_probability_markers;
    }
    rec.predicted_label = verbal.label;
    rec.c_v = verbal.c_v;

    std::string letters;
    for (const auto& c : q.choices) letters += c.label;
    try {
      rec.c_i = extract_internal(*outcome.result, verbal.label, options.renormalize,
                                 verbal.label_offset, letters);
    } catch (const AnswerTokenNotFound&) {
      rec.status = RecordStatus::kInternalFailed;
      records.push_back(std::move(rec));
      continue;
    }
    rec.correct = verbal.label == q.gold_label;
    rec.status = RecordStatus::kOk;
    records.push_back(std::move(rec));
  }
  return records;
}

double extraction_failure_rate(const std::vector<ConfidenceRecord>& records) {
  if (records.empty()) throw EmptyInput("no records for failure rate");
  const auto failed = std::count_if(records.begin(), records.end(),
                                    [](const ConfidenceRecord& r) { return !r.ok(); });
  return static_cast<double>(failed) / static_cast<double>(records.size());
}

json record_to_json(const ConfidenceRecord& r) {
  json obj{{"question_id", r.question_id}};
  if (r.predicted_label) obj["predicted_label"] = std::string(1, *r.predicted_label);
  if (r.c_v) obj["c_v"] = *r.c_v;
  if (r.c_i) obj["c_i"] = *r.c_i;
  if (r.correct) obj["correct"] = *r.correct;
  obj["status"] = std::string(to_string(r.status));
  return obj;
}

ConfidenceRecord record_from_json(const json& obj, std::size_t line_no) {
  ConfidenceRecord r;
  auto id = obj.find("question_id");
  if (id == obj.end() || !id->is_string()) {
    throw SchemaError(line_no, "missing string field 'question_id'");
  }
  r.question_id = id->get<std::string>();

  auto status = obj.find("status");
  if (status == obj.end() || !status->is_string()) {
    throw SchemaError(line_no, "missing string field 'status'");
  }
  try {
    r.status = status_from_string(status->get_ref<const std::string&>());
  } catch (const DataError& e) {
    throw SchemaError(line_no, e.what());
  }

  if (auto it = obj.find("predicted_label"); it != obj.end()) {
    if (!it->is_string() || it->get_ref<const std::string&>().size() != 1 ||
        !std::isupper(static_cast<unsigned char>(it->get_ref<const std::string&>()[0]))) {
      throw SchemaError(line_no, "predicted_label must be one uppercase letter");
    }
    r.predicted_label = it->get_ref<const std::string&>()[0];
  }
  for (const char* field : {"c_v", "c_i"}) {
    auto it = obj.find(field);
    if (it == obj.end()) continue;
    if (!it->is_number()) {
      throw SchemaError(line_no, std::string(field) + " must be a number");
    }
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 100.0)) {
      throw SchemaError(line_no, std::string(field) + " outside [0, 100]");
    }
    (field[2] == 'v' ? r.c_v : r.c_i) = v;
  }
  if (auto it = obj.find("correct"); it != obj.end()) {
    if (!it->is_boolean()) throw SchemaError(line_no, "correct must be a boolean");
    r.correct = it->get<bool>();
  }
  const bool complete = r.predicted_label && r.c_v && r.c_i && r.correct;
  if (r.ok() != complete) {
    throw SchemaError(line_no,
                      "status 'ok' requires predicted_label, c_v, c_i and correct, "
                      "and only 'ok' records may carry all four");
  }
  return r;
}

void write_records(const std::vector<ConfidenceRecord>& records,
                   const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(record_to_json(r));
  write_file_atomic(path, to_jsonl(rows));
}

std::vector<ConfidenceRecord> read_records(const std::filesystem::path& path) {
  std::vector<ConfidenceRecord> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    out.push_back(record_from_json(obj, line_no));
  });
  return out;
}

}  // namespace dca
