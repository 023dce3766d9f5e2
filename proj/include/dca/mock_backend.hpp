#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dca/backend.hpp"
#include "dca/mcq_data.hpp"

namespace dca {

// Distribution of the mock model's internal confidence, on the [0,1] scale.
struct InternalDist {
  enum class Family { kBeta, kUniform };
  Family family = Family::kBeta;
  // kBeta: alpha, beta (both > 0). kUniform: lower, upper in [0,1].
  double a = 5.0;
  double b = 2.0;

  double mean() const;
  // Inverse CDF at u in (0,1).
  double quantile(double u) const;
};

enum class VerbalMode {
  kVanilla,  // C_v = clamp(C_i + bias + N(0, noise_sd)), rounded
  kAligned,  // C_v = round(C_i)
};

struct ConfidenceProfile {
  double accuracy = 0.7;
  InternalDist internal_dist;
  VerbalMode verbal_mode = VerbalMode::kVanilla;
  double verbal_bias = 0.0;      // percentage points
  double verbal_noise_sd = 0.0;  // percentage points
  std::uint64_t seed = 0;
  // Fraction of responses emitted in a malformed format.
  double format_failure_rate = 0.0;
};

// Throws ConfigError on out-of-range fields.
void validate_profile(const ConfidenceProfile& profile);

// Deterministic stand-in for a logprob-exposing model. The output for a
// question is a pure function of (profile, question id, answer key).
class MockBackend final : public Backend {
 public:
  MockBackend(ConfidenceProfile profile, const std::vector<Question>& answer_key);

  GenerationResult generate(const GenerationRequest& request) const override;

  const ConfidenceProfile& profile() const { return profile_; }

 private:
  struct Key {
    char gold;
    std::size_t n_choices;
  };

  ConfidenceProfile profile_;
  std::unordered_map<std::string, Key> key_;
};

// Splits text into word-like pieces with the leading space attached
// (" B", " 85"), single punctuation characters, and newlines.
std::vector<std::string> mock_tokenize(const std::string& text);

// Synthetic questions for simulations. Subjects are "subject_00".. when
// n_subjects > 0, otherwise empty.
std::vector<Question> make_synthetic_questions(std::size_t n,
                                               std::size_t n_subjects,
                                               std::size_t n_choices,
                                               std::uint64_t seed);

}  // namespace dca
