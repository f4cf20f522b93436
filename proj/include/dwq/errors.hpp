#pragma once
#include <stdexcept>
#include <string>

namespace dwq {

// Error taxonomy shared by all modules. Each condition named in the
// operation contracts maps to one subclass so callers can catch precisely.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricMismatch : Error {
  using Error::Error;
};
struct InvalidParameter : Error {
  using Error::Error;
};
struct ConvergenceFailure : Error {
  using Error::Error;
};
struct UnsupportedDegree : Error {
  using Error::Error;
};
struct NotHamiltonian : Error {
  using Error::Error;
};
struct UndefinedBracketDegree : Error {
  using Error::Error;
};
struct InvalidSolutionData : Error {
  using Error::Error;
};
struct InvalidDomain : Error {
  using Error::Error;
};
struct TachyonicMode : Error {
  using Error::Error;
};
struct SingularHJNorm : Error {
  using Error::Error;
};
struct DecompositionFailure : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

} // namespace dwq
