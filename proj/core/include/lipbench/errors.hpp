#pragma once

#include <stdexcept>
#include <string>

namespace lipbench {

/// Dimension or shape disagreement between arguments.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid user-supplied configuration (bad ranges, infeasible settings).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required input file is missing or unreadable.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParseErrorKind {
  kBadMagic,
  kTruncated,
  kCountMismatch,
  kBadLength,
  kBadLabel,
  kEmpty,
};

const char* to_string(ParseErrorKind kind);

/// Malformed binary input (IDX, CIFAR batches, cache files, checkpoints).
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

}  // namespace lipbench
