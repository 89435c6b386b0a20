#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace dilatio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid parameters at construction time (non-positive axis, offset <= 0, ...).
struct ConstructionError : Error {
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Operation not implemented for this kind of object.
struct UnsupportedError : Error {
  using Error::Error;
};

/// A claimed property (C1, quasi-convexity) is contradicted by an evaluation.
struct ConsistencyError : Error {
  using Error::Error;
};

struct QuasiConvexityViolation : ConsistencyError {
  using ConsistencyError::ConsistencyError;
};

struct DegenerateInputError : Error {
  using Error::Error;
};

struct SamplingError : Error {
  using Error::Error;
};

}  // namespace dilatio
