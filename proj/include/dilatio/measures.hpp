#pragma once

// Probability measures e^{-phi} dx on symmetric convex domains, and the
// integration engine shared by every estimator.

#include "dilatio/estimate.hpp"
#include "dilatio/geometry.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dilatio {

enum class MeasureKind {
  Gaussian,
  OneSidedExponential,
  SymmetricExponential,
  Uniform,
  Custom1d,
  Product,
  Perturbed
};

/// A dilation constant together with the result that justifies it.
struct KappaClaim {
  double value = 0.0;
  std::string provenance;
  bool tagged() const { return value > 0.0; }
};

class Measure {
 public:
  struct Impl;

  /// Centered isotropic normal N(0, sigma^2 I_n); sigma = 1 is gamma_n.
  static Measure gaussian(Index dim, double sigma = 1.0);
  /// Density e^{-x} on (0, inf).
  static Measure one_sided_exponential();
  /// Density e^{-|x|}/2 on the line.
  static Measure symmetric_exponential();
  static Measure uniform(const Body& support);
  /// Density proportional to exp(-potential) on (-half_width, half_width).
  static Measure custom_1d(std::function<double(double)> potential, double half_width, bool symmetric,
                           bool log_concave, std::string name = "custom");
  static Measure product(const Measure& first, const Measure& second);
  /// Density h dmu with h = exp(log(b)/2 cos(frequency x_1)) / Z, so b^-1 <= h <= b.
  static Measure perturbed(const Measure& base, double bound, double frequency = 1.0);

  MeasureKind kind() const;
  Index dim() const;
  std::string describe() const;

  /// log of the Lebesgue density; -inf outside the support.
  double log_density(const Vector& x) const;
  double density(const Vector& x) const;
  /// sup{r >= 0 : r u in the support} along the unit direction u.
  double ray_extent(const Vector& u) const;
  /// Angles (2-d) across which the density is not smooth.
  std::vector<double> angular_breaks() const;
  const Body* support() const;

  bool symmetric() const;
  bool log_concave() const;
  KappaClaim kappa() const;
  Measure with_kappa(double value, std::string provenance) const;

  std::vector<Vector> sample(std::size_t count, std::uint64_t seed) const;

  double cdf_1d(double x) const;
  double quantile_1d(double u) const;

  /// Standard deviation of a Gaussian measure.
  double gaussian_sigma() const;
  /// Factors of a product measure.
  const Measure& factor(int index) const;
  const Measure& base() const;
  /// h of a perturbed measure and its bound b.
  double perturbation(const Vector& x) const;
  double perturbation_bound() const;

 private:
  explicit Measure(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
  KappaClaim override_;
};

/// Which integrand radii and angles to split the quadrature at.
struct IntegrationHints {
  std::function<std::vector<double>(const Vector& u)> ray_breaks;
  std::vector<double> angular_breaks;
  /// The integrand returns log-values; the density is applied as exp(g + log rho).
  bool log_space = false;
};

using VectorIntegrand = std::function<Vector(const Vector& x)>;

/// Joint estimate of int g_i dmu for a vector-valued g: nested adaptive
/// quadrature in polar coordinates for n <= 2, Monte Carlo otherwise.
MultiEstimate integrate(const Measure& m, const VectorIntegrand& integrand, Index outputs,
                        const EstimationBudget& budget, const IntegrationHints& hints = {});

/// Integral over the ray segment r in [0, extent(u)) for n = 1 and n = 2 only:
/// int_0^ext g(r u) rho(r u) r^{n-1} dr with breaks.
MultiEstimate integrate_polar(const Measure& m, const VectorIntegrand& integrand, Index outputs,
                              const EstimationBudget& budget, const IntegrationHints& hints);

Estimate mass_of_body(const Measure& m, const Body& body, const EstimationBudget& budget);
/// int |x|^p dmu.
Estimate moment(const Measure& m, double p, const EstimationBudget& budget);

/// Surface area of the unit sphere in R^n.
double sphere_area(Index n);

/// Uniform direction in R^n from a Gaussian draw.
template <typename Rng>
Vector random_direction(Index n, Rng& rng);

}  // namespace dilatio

#include <random>

template <typename Rng>
dilatio::Vector dilatio::random_direction(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector u(n);
  do {
    for (Index i = 0; i < n; ++i) u[i] = normal(rng);
  } while (u.norm() == 0.0);
  return u.normalized();
}
