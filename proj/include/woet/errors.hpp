#pragma once

#include <stdexcept>
#include <string>

namespace woet {

// Base for all library errors. `kind()` is a stable machine-readable tag;
// what() carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define WOET_DEFINE_ERROR(Name)                             \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& message)               \
        : Error(#Name, message) {}                          \
  }

WOET_DEFINE_ERROR(GroundMismatch);
WOET_DEFINE_ERROR(ZeroMassRow);
WOET_DEFINE_ERROR(NegativeScale);
WOET_DEFINE_ERROR(NegativeArgument);
WOET_DEFINE_ERROR(PsiOutOfDomain);
WOET_DEFINE_ERROR(NotAProbability);
WOET_DEFINE_ERROR(EmptyFinitePart);
WOET_DEFINE_ERROR(ShapeMismatch);
WOET_DEFINE_ERROR(InfeasibleProblem);
WOET_DEFINE_ERROR(TooLarge);
WOET_DEFINE_ERROR(InfeasiblePair);
WOET_DEFINE_ERROR(InfeasibleTriple);
WOET_DEFINE_ERROR(ConstraintViolated);
WOET_DEFINE_ERROR(HypothesesNotMet);
WOET_DEFINE_ERROR(ParseError);
WOET_DEFINE_ERROR(ValidationError);
WOET_DEFINE_ERROR(IoError);

#undef WOET_DEFINE_ERROR

}  // namespace woet
