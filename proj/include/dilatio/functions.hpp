#pragma once

// Symmetric quasi-convex test functions, the dilation derivative Phi_f, and
// audits of the quasi-convexity and QC-membership claims.

#include "dilatio/estimate.hpp"
#include "dilatio/geometry.hpp"
#include "dilatio/measures.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dilatio {

enum class FunctionKind {
  Constant,
  Radial,
  GaugePower,
  ShiftedRadial,
  MinCap,
  MaxFloor,
  FSigma,
  GaussianRatio,
  Affine,
  Power,
  Custom
};

enum class Smoothness { C1, Lipschitz, Continuous };

std::string to_string(Smoothness s);

struct GradientEval {
  double value;
  std::optional<Vector> gradient;
  bool numeric = false;
};

class QcFunction {
 public:
  struct Node;

  static QcFunction constant(Index dim, double value);
  /// |x|^p.
  static QcFunction radial(Index dim, double p);
  /// ||x||_K^p.
  static QcFunction gauge_power(const Body& body, double p);
  /// (|x|^2 + c)^s.
  static QcFunction shifted_radial(Index dim, double offset, double s);
  /// min(f, level).
  static QcFunction min_cap(const QcFunction& f, double level);
  /// max(f, level).
  static QcFunction max_floor(const QcFunction& f, double level);
  /// 0 on K, (||x||_K - 1)/delta on K_sigma \ K, 1 - sigma outside, delta = 2 sigma/(1-sigma)^2.
  static QcFunction f_sigma(const Body& body, double sigma);
  /// Density of N(0, sigma^2 I) relative to gamma_n.
  static QcFunction gaussian_ratio(Index dim, double sigma);
  /// scale * f + shift with scale > 0.
  static QcFunction affine(const QcFunction& f, double scale, double shift);
  /// f^q for nonnegative f.
  static QcFunction power(const QcFunction& f, double q);
  static QcFunction custom(Index dim, std::function<double(const Vector&)> eval,
                           std::function<Vector(const Vector&)> gradient, Smoothness smoothness, bool convex,
                           std::string name);

  FunctionKind kind() const;
  Index dim() const;
  std::string describe() const;
  const QcFunction& inner() const;
  double parameter(int index) const;
  const Body& body() const;

  double operator()(const Vector& x) const;
  std::optional<Vector> analytic_gradient(const Vector& x) const;
  /// Analytic gradient, or central differences with step max(1e-6, 1e-6|x|).
  GradientEval eval_and_grad(const Vector& x) const;
  /// Closed-form Phi_f(x) when the kind provides it.
  std::optional<double> analytic_phi(const Vector& x) const;
  /// inf over the subdifferential of <x, y>, for convex kinds.
  std::optional<double> subgradient_pairing(const Vector& x) const;

  Smoothness smoothness() const;
  bool convex() const;
  bool claims_quasi_convex() const;
  bool unconditional() const;
  double min_value() const;

  /// Radii along u where f is not smooth.
  std::vector<double> ray_breaks(const Vector& u) const;
  /// Angles (2-d) where f is not smooth.
  std::vector<double> angular_breaks() const;
  /// Levels t at which the sublevel set {f < t} jumps.
  std::vector<double> value_breaks() const;
  /// sup{r : f(r u) < t} (or <= t when closed), using ray monotonicity.
  double level_radius(const Vector& u, double t, bool closed = false) const;
  /// {f < t} as a body when it is a scaled copy of a fixed body.
  std::optional<Body> level_body(double t) const;

 private:
  explicit QcFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Default ladder {2^-k : k = 4..20}.
std::vector<double> default_phi_ladder();

/// Difference quotients [f(x) - f((1-e)/(1+e) x)]/e on the ladder.
std::vector<double> phi_quotients(const QcFunction& f, const Vector& x, std::span<const double> ladder);

/// Numeric Phi_f(x): Richardson limit when the tail is Cauchy, otherwise the
/// maximum over the 8 smallest ladder values; throws QuasiConvexityViolation
/// on a negative quotient.
Estimate phi_ladder(const QcFunction& f, const Vector& x, std::span<const double> ladder);

/// Phi_f(x): analytic where available (ladder recorded in the note), numeric otherwise.
Estimate phi(const QcFunction& f, const Vector& x, std::span<const double> ladder);
Estimate phi(const QcFunction& f, const Vector& x);

/// Phi used inside integrands: analytic if present, ladder otherwise.
double phi_value(const QcFunction& f, const Vector& x);

struct AuditReport {
  bool pass = true;
  bool segment_pass = true;
  bool symmetry_pass = true;
  bool gradient_pass = true;
  bool monotone_split_pass = true;
  bool domination_pass = true;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> witnesses;
  std::string note;
};

AuditReport quasiconvexity_audit(const QcFunction& f, const std::optional<Body>& domain, std::size_t trials,
                                 std::uint64_t seed);

/// Evidence that the ladder quotients stay below g on samples of m.
AuditReport qc_membership_check(const QcFunction& f, const Measure& m, double eps0,
                                const std::function<double(const Vector&)>& bound, std::size_t samples,
                                std::uint64_t seed);

}  // namespace dilatio
