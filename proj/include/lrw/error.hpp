#pragma once

#include <stdexcept>
#include <string>

namespace lrw {

/// Base for every error raised by the library. `numerical()` separates
/// input/config problems from failures of a numerical kernel; the CLI maps
/// them to exit codes 2 and 3.
class Error : public std::runtime_error {
 public:
  Error(std::string what, bool numerical)
      : std::runtime_error(std::move(what)), numerical_(numerical) {}
  bool numerical() const noexcept { return numerical_; }

 private:
  bool numerical_;
};

#define LRW_DEFINE_ERROR(Name, numerical_flag)                     \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(std::string what)                                \
        : Error(#Name ": " + std::move(what), numerical_flag) {}   \
  };

LRW_DEFINE_ERROR(ParseError, false)
LRW_DEFINE_ERROR(ValidationError, false)
LRW_DEFINE_ERROR(ConfigError, false)
LRW_DEFINE_ERROR(DimMismatch, false)
LRW_DEFINE_ERROR(InvalidKind, false)
LRW_DEFINE_ERROR(BadExponent, false)
LRW_DEFINE_ERROR(TooShort, false)
LRW_DEFINE_ERROR(TooLarge, false)
LRW_DEFINE_ERROR(TooFewPoints, false)
LRW_DEFINE_ERROR(NonPositive, false)
LRW_DEFINE_ERROR(AlphabetTooLarge, false)
LRW_DEFINE_ERROR(SingularInput, true)
LRW_DEFINE_ERROR(NoConvergence, true)
LRW_DEFINE_ERROR(NumericalFailure, true)

#undef LRW_DEFINE_ERROR

}  // namespace lrw
