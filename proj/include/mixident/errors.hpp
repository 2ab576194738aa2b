#ifndef MIXIDENT_ERRORS_HPP
#define MIXIDENT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mixident {

// Base class for all domain errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define MIXIDENT_DEFINE_ERROR(NAME)                                \
  class NAME : public Error {                                      \
   public:                                                         \
    explicit NAME(const std::string& what) : Error(#NAME ": " + what) {} \
  }

MIXIDENT_DEFINE_ERROR(DimensionMismatch);
MIXIDENT_DEFINE_ERROR(NonPositiveWeight);
MIXIDENT_DEFINE_ERROR(DegenerateCovariance);
MIXIDENT_DEFINE_ERROR(NotInvertible);
MIXIDENT_DEFINE_ERROR(RegionCapExceeded);
MIXIDENT_DEFINE_ERROR(UnsupportedActivation);
MIXIDENT_DEFINE_ERROR(NotGenericPoint);
MIXIDENT_DEFINE_ERROR(NotConditionallyFactorial);
MIXIDENT_DEFINE_ERROR(NoValidPair);
MIXIDENT_DEFINE_ERROR(AssumptionViolated);
MIXIDENT_DEFINE_ERROR(RepeatedSingularValues);
MIXIDENT_DEFINE_ERROR(RankDeficientMeans);
MIXIDENT_DEFINE_ERROR(TooManyComponents);
MIXIDENT_DEFINE_ERROR(SingularCovariance);
MIXIDENT_DEFINE_ERROR(ZeroVarianceCoordinate);
MIXIDENT_DEFINE_ERROR(ParseError);
MIXIDENT_DEFINE_ERROR(InconsistentDimensions);
MIXIDENT_DEFINE_ERROR(GridTooLarge);
MIXIDENT_DEFINE_ERROR(PrerequisiteViolated);
MIXIDENT_DEFINE_ERROR(InvalidArgument);

#undef MIXIDENT_DEFINE_ERROR

}  // namespace mixident

#endif
