#pragma once

#include "dilatio/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dilatio {

enum class Method { Auto, Quadrature, MonteCarlo };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// Explicit resources for one estimate: method, sample/node counts, seed.
struct EstimationBudget {
  Method method = Method::Auto;
  std::uint64_t samples = 200000;
  int nodes = 256;
  int max_intervals = 2000;
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
  std::uint64_t seed = 1;

  /// Quadrature when n <= 2 unless Monte Carlo is forced.
  bool use_quadrature(Index dim) const;
  EstimationBudget scaled(double factor) const;
  EstimationBudget with_seed(std::uint64_t s) const;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::string method = "exact";
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  bool inconclusive = false;
  std::string note;

  static Estimate exact(double v, std::string tag = "exact");
};

/// Several correlated integrals with their joint error covariance.
struct MultiEstimate {
  Vector mean;
  Matrix cov;
  std::string method;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  bool inconclusive = false;
  std::string note;

  double error(Index i) const;
  Estimate component(Index i) const;
  /// First-order propagation of the covariance through a smooth map.
  Estimate combine(double value, const Vector& gradient) const;
};

/// Componentwise Neumaier-compensated average of equally sized vectors.
Vector compensated_mean(const std::vector<Vector>& values);

/// Relative floor added to deterministic quadrature errors.
inline constexpr double kQuadratureFloor = 1e-13;

struct Extrapolation {
  double value;
  double error;
  bool converged;
  std::size_t order;
};

/// Richardson extrapolation to h -> 0 of samples taken at h_k = h_0 / 2^k
/// (decreasing), assuming an expansion in integer powers of h.
Extrapolation richardson_halving(std::span<const double> values);

/// Weights w (one per value) such that sum_k w_k values_k is the Richardson
/// entry of the given order in the last tableau row.
std::vector<double> richardson_weights(std::size_t count, std::size_t order);

}  // namespace dilatio
