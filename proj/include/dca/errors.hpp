#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dca {

// Root of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing configuration; maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be used as-is; maps to CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  SchemaError(std::size_t line_no, const std::string& reason)
      : DataError("line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(reason) {}

  std::size_t line_no() const { return line_no_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class DuplicateId : public DataError {
 public:
  explicit DuplicateId(const std::string& id)
      : DataError("duplicate question id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class InsufficientSubjectPool : public DataError {
 public:
  InsufficientSubjectPool(const std::string& subject, std::size_t available,
                          std::size_t requested)
      : DataError("subject '" + subject + "' has " + std::to_string(available) +
                  " questions, " + std::to_string(requested) + " requested"),
        subject_(subject),
        available_(available),
        requested_(requested) {}

  const std::string& subject() const { return subject_; }
  std::size_t available() const { return available_; }
  std::size_t requested() const { return requested_; }

 private:
  std::string subject_;
  std::size_t available_;
  std::size_t requested_;
};

class EmptyInput : public DataError {
 public:
  explicit EmptyInput(const std::string& what = "empty input")
      : DataError(what) {}
};

class UnmatchedQuestionId : public DataError {
 public:
  explicit UnmatchedQuestionId(const std::string& id)
      : DataError("no matching entry for question id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class TooFewPoints : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSeries : public DataError {
 public:
  using DataError::DataError;
};

// Verbalized-confidence parse failures. Each one counts toward the
// extraction failure rate.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class GuessNotFound : public ParseError {
 public:
  GuessNotFound() : ParseError("no 'Guess:' letter found") {}
};

class ProbabilityNotFound : public ParseError {
 public:
  ProbabilityNotFound() : ParseError("no 'Probability:' value found") {}
};

class ProbabilityOutOfRange : public ParseError {
 public:
  explicit ProbabilityOutOfRange(double value)
      : ParseError("probability " + std::to_string(value) +
                   " outside [0, 100]"),
        value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

class AnswerTokenNotFound : public DataError {
 public:
  AnswerTokenNotFound()
      : DataError("no token isolates the answer letter") {}
};

// The response changed between parsing and substitution. Internal bug.
class SubstitutionSiteNotFound : public Error {
 public:
  using Error::Error;
};

// Maps to CLI exit code 2.
class BackendError : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

class MissingLogprobs : public BackendError {
 public:
  MissingLogprobs()
      : BackendError("endpoint response carries no logprob data") {}
};

}  // namespace dca
