#include "dca/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "dca/errors.hpp"
#include "dca/rng.hpp"

namespace dca {

namespace {

// Logprob given to every non-answer token of a mock response.
constexpr double kFormatTokenLogprob = -0.001;
// Share of the non-answer mass spread over the other choice letters; the rest
// goes to a non-letter filler alternative.
constexpr double kLetterShare = 0.9;
constexpr double kMinProbability = 1e-6;

double standard_normal_quantile(double u) {
  static const boost::math::normal_distribution<double> unit(0.0, 1.0);
  return boost::math::quantile(unit, u);
}

std::string letter(char c) { return std::string(1, c); }

}  // namespace

double InternalDist::mean() const {
  if (family == Family::kBeta) return a / (a + b);
  return 0.5 * (a + b);
}

double InternalDist::quantile(double u) const {
  if (family == Family::kBeta) {
    return boost::math::quantile(boost::math::beta_distribution<double>(a, b), u);
  }
  return a + (b - a) * u;
}

void validate_profile(const ConfidenceProfile& p) {
  if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0)) {
    throw ConfigError("mock accuracy must be in [0, 1]");
  }
  if (p.internal_dist.family == InternalDist::Family::kBeta) {
    if (!(p.internal_dist.a > 0.0 && p.internal_dist.b > 0.0)) {
      throw ConfigError("beta parameters must be positive");
    }
  } else if (!(p.internal_dist.a >= 0.0 && p.internal_dist.a <= p.internal_dist.b &&
               p.internal_dist.b <= 1.0)) {
    throw ConfigError("uniform bounds must satisfy 0 <= lower <= upper <= 1");
  }
  if (!(p.verbal_noise_sd >= 0.0)) {
    throw ConfigError("verbal_noise_sd must be non-negative");
  }
  if (!std::isfinite(p.verbal_bias)) throw ConfigError("verbal_bias must be finite");
  if (!(p.format_failure_rate >= 0.0 && p.format_failure_rate <= 1.0)) {
    throw ConfigError("format_failure_rate must be in [0, 1]");
  }
}

MockBackend::MockBackend(ConfidenceProfile profile,
                         const std::vector<Question>& answer_key)
    : profile_(profile) {
  validate_profile(profile_);
  key_.reserve(answer_key.size());
  for (const auto& q : answer_key) {
    key_[q.id] = Key{q.gold_label, q.choices.size()};
  }
}

GenerationResult MockBackend::generate(const GenerationRequest& request) const {
  validate_request(request);
  const std::string& id = request.prompt.question_id;
  auto it = key_.find(id);
  if (it == key_.end()) {
    throw ConfigError("mock backend has no answer key for question '" + id + "'");
  }
  const Key& key = it->second;

  // Fixed draw order keeps every question's stream stable across profiles.
  Rng rng(splitmix64(profile_.seed ^ fnv1a64(id)));
  const double u_correct = rng.open01();
  const std::uint64_t wrong_pick = rng.below(key.n_choices - 1);
  const double u_internal = rng.open01();
  const double z = standard_normal_quantile(rng.open01());
  const double u_format = rng.open01();
  const std::uint64_t format_variant = rng.below(3);

  char answer = key.gold;
  if (u_correct >= profile_.accuracy) {
    char c = static_cast<char>('A' + wrong_pick);
    if (c >= key.gold) ++c;
    answer = c;
  }

  const double p = std::clamp(profile_.internal_dist.quantile(u_internal),
                              kMinProbability, 1.0);
  const double answer_logprob = std::log(p);
  const double c_i = 100.0 * std::exp(answer_logprob);

  long verbal = 0;
  if (profile_.verbal_mode == VerbalMode::kAligned) {
    verbal = std::lround(c_i);
  } else {
    const double raw = c_i + profile_.verbal_bias + profile_.verbal_noise_sd * z;
    verbal = std::lround(std::clamp(raw, 0.0, 100.0));
  }

  std::string text;
  if (u_format < profile_.format_failure_rate) {
    switch (format_variant) {
      case 0:
        text = fmt::format("I believe the answer is {}.", answer);
        break;
      case 1:
        text = fmt::format("Guess: {}", answer);
        break;
      default:
        text = fmt::format("Guess: {}\nProbability: {}%", answer, 101 + verbal);
        break;
    }
  } else {
    text = fmt::format("Guess: {}\nProbability: {}%", answer, verbal);
  }

  GenerationResult result;
  result.question_id = id;
  result.text = text;
  const auto pieces = mock_tokenize(text);
  const std::size_t guess_pos = text.find("Guess:");
  std::size_t offset = 0;
  bool answer_placed = false;
  for (const auto& piece : pieces) {
    TokenLogprob tok;
    tok.token_text = piece;
    const bool is_answer = !answer_placed && guess_pos != std::string::npos &&
                           offset > guess_pos && piece == " " + letter(answer);
    if (is_answer) {
      answer_placed = true;
      tok.logprob = answer_logprob;
      tok.alternatives.push_back({piece, answer_logprob});
      const double rest = 1.0 - p;
      if (rest > 0.0) {
        const double each = kLetterShare * rest / static_cast<double>(key.n_choices - 1);
        for (std::size_t k = 0; k < key.n_choices; ++k) {
          const char c = static_cast<char>('A' + k);
          if (c == answer) continue;
          tok.alternatives.push_back({" " + letter(c), std::log(each)});
        }
        tok.alternatives.push_back({" The", std::log((1.0 - kLetterShare) * rest)});
      }
      std::stable_sort(tok.alternatives.begin(), tok.alternatives.end(),
                       [](const TokenAlternative& x, const TokenAlternative& y) {
                         return x.logprob > y.logprob;
                       });
      if (tok.alternatives.size() > request.top_logprobs) {
        tok.alternatives.resize(request.top_logprobs);
      }
    } else {
      tok.logprob = kFormatTokenLogprob;
      tok.alternatives.push_back({piece, kFormatTokenLogprob});
    }
    offset += piece.size();
    result.tokens.push_back(std::move(tok));
  }
  return result;
}

std::vector<std::string> mock_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const auto is_word = [](unsigned char c) { return std::isalnum(c) != 0; };
  while (i < text.size()) {
    const std::size_t start = i;
    if (text[i] == ' ' && i + 1 < text.size() &&
        is_word(static_cast<unsigned char>(text[i + 1]))) {
      ++i;
    }
    if (is_word(static_cast<unsigned char>(text[i]))) {
      while (i < text.size() && is_word(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++i;
    }
    out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<Question> make_synthetic_questions(std::size_t n,
                                               std::size_t n_subjects,
                                               std::size_t n_choices,
                                               std::uint64_t seed) {
  if (n_choices < 2 || n_choices > 26) {
    throw ConfigError("n_choices must be in [2, 26]");
  }
  Rng rng(seed);
  std::vector<Question> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Question q;
    q.id = fmt::format("q{:06d}", i);
    if (n_subjects > 0) q.subject = fmt::format("subject_{:02d}", i % n_subjects);
    q.stem = fmt::format("Synthetic question {}?", i);
    for (std::size_t k = 0; k < n_choices; ++k) {
      const char c = static_cast<char>('A' + k);
      q.choices.push_back({c, fmt::format("option {} of question {}", c, i)});
    }
    q.gold_label = static_cast<char>('A' + rng.below(n_choices));
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace dca
