#pragma once

#include <stdexcept>
#include <string>

namespace cbir {

// Base of every error raised by the library. The kind() string is stable and
// used by the CLI to tag messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what);
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CBIR_DECLARE_ERROR(Name, tag)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(tag, what) {}      \
  }

CBIR_DECLARE_ERROR(IoError, "io");
CBIR_DECLARE_ERROR(FormatError, "format");
CBIR_DECLARE_ERROR(ParameterError, "parameter");
CBIR_DECLARE_ERROR(ValidationError, "validation");
CBIR_DECLARE_ERROR(ShapeError, "shape");
CBIR_DECLARE_ERROR(StateError, "state");
CBIR_DECLARE_ERROR(LookupError, "lookup");
CBIR_DECLARE_ERROR(ParseError, "parse");
CBIR_DECLARE_ERROR(DegenerateInputError, "degenerate-input");
CBIR_DECLARE_ERROR(EmptyResultError, "empty-result");

#undef CBIR_DECLARE_ERROR

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what);
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Wraps an error raised inside one pipeline phase.
class PhaseError : public Error {
 public:
  PhaseError(std::string phase, const Error& cause);
  const std::string& phase() const noexcept { return phase_; }
  const std::string& cause_kind() const noexcept { return cause_kind_; }

 private:
  std::string phase_;
  std::string cause_kind_;
};

}  // namespace cbir
