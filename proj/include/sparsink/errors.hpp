#ifndef SPARSINK_ERRORS_HPP_
#define SPARSINK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sparsink {

// Exit-code categories used by the CLI:
//   2 = solver non-convergence, 3 = degenerate sketch, 4 = input error.
enum class ErrorCategory { Input = 4, DegenerateSketch = 3, Solver = 2 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

#define SPARSINK_DEFINE_ERROR(Name, Cat)                      \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& msg)                     \
        : Error(ErrorCategory::Cat, #Name ": " + msg) {}      \
  }

SPARSINK_DEFINE_ERROR(NegativeWeight, Input);
SPARSINK_DEFINE_ERROR(LengthMismatch, Input);
SPARSINK_DEFINE_ERROR(NotNormalized, Input);
SPARSINK_DEFINE_ERROR(AllBlack, Input);
SPARSINK_DEFINE_ERROR(EmptyOutput, Input);
SPARSINK_DEFINE_ERROR(DimensionMismatch, Input);
SPARSINK_DEFINE_ERROR(NonPositiveEta, Input);
SPARSINK_DEFINE_ERROR(NonPositiveEpsilon, Input);
SPARSINK_DEFINE_ERROR(DegenerateSupport, Input);
SPARSINK_DEFINE_ERROR(AllZeroKernel, Input);
SPARSINK_DEFINE_ERROR(ThetaOutOfRange, Input);
SPARSINK_DEFINE_ERROR(BudgetTooLarge, Input);
SPARSINK_DEFINE_ERROR(EmptyWindow, Input);
SPARSINK_DEFINE_ERROR(InfiniteCostOnSupport, Input);
SPARSINK_DEFINE_ERROR(IoError, Input);
SPARSINK_DEFINE_ERROR(ZeroDenominator, Solver);
SPARSINK_DEFINE_ERROR(BaselineFailed, Solver);
SPARSINK_DEFINE_ERROR(DegenerateSketchError, DegenerateSketch);

#undef SPARSINK_DEFINE_ERROR

}  // namespace sparsink

#endif  // SPARSINK_ERRORS_HPP_
