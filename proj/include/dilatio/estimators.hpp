#pragma once

// Numeric functionals: entropy, information, norms, dilation area,
// perimeter, boundary integrals, Wasserstein distance and co-area integrals.

#include "dilatio/estimate.hpp"
#include "dilatio/functions.hpp"
#include "dilatio/geometry.hpp"
#include "dilatio/measures.hpp"

#include <functional>
#include <span>
#include <vector>

namespace dilatio {

/// {2^-k : k = 5..14}.
std::vector<double> default_dilation_ladder();

/// Split points for integrals of expressions in f.
IntegrationHints hints_for(const QcFunction& f);

/// int f dmu.
Estimate expectation(const QcFunction& f, const Measure& m, const EstimationBudget& budget);

Estimate entropy(const QcFunction& f, const Measure& m, const EstimationBudget& budget);

using Certificate = std::function<double(const Vector&)>;

/// max over certificates of int f phi dmu - log int e^phi dmu, with f normalised.
Estimate entropy_dual_lower_bound(const QcFunction& f, const Measure& m, std::span<const Certificate> certificates,
                                  const EstimationBudget& budget);

/// int |grad f|^2 / f dmu.
Estimate fisher_information(const QcFunction& f, const Measure& m, const EstimationBudget& budget);

/// (int f^p dmu)^{1/p} for p != 0.
Estimate lp_norm(const QcFunction& f, const Measure& m, double p, const EstimationBudget& budget);

struct OrliczResult {
  Estimate norm;
  /// sup over the p-grid of ||f||_p / p^{1/alpha}.
  Estimate sup_form;
  double sup_at = 0.0;
  bool infinite = false;
};

OrliczResult orlicz_norm(const QcFunction& f, const Measure& m, double alpha, const EstimationBudget& budget);

/// mu({f < t}), or mu({f <= t}) when closed.
Estimate level_mass(const QcFunction& f, const Measure& m, double t, bool closed, const EstimationBudget& budget);

/// Lévy mean: inf{t : mu(f <= t) >= 1/2}; sample median for n >= 3.
Estimate levy_mean(const QcFunction& f, const Measure& m, const EstimationBudget& budget);

/// Ray radius of a star-shaped symmetric set along a unit direction.
using RadiusFunction = std::function<double(const Vector& u)>;

/// Coupled ladder estimate of liminf [mu(rho_eps A) - mu(A)]/eps with
/// rho_eps = (1+eps)/(1-eps), for A given by its ray radius.
Estimate dilation_area_rays(const Measure& m, const RadiusFunction& radius, const std::vector<double>& angular_breaks,
                            std::span<const double> ladder, const EstimationBudget& budget);

Estimate dilation_area(const Measure& m, const Body& body, std::span<const double> ladder,
                       const EstimationBudget& budget);
Estimate dilation_area(const Measure& m, const Body& body, const EstimationBudget& budget);

/// mu*((0, x)) under the general dilation for a measure on (0, inf): A_eps = (0, x/(1-eps)).
Estimate one_sided_interval_dilation_area(const Measure& m, double x, const EstimationBudget& budget);

/// liminf [mu(K + eps B) - mu(K)]/eps.
Estimate perimeter(const Measure& m, const Body& body, std::span<const double> ladder,
                   const EstimationBudget& budget);
Estimate perimeter(const Measure& m, const Body& body, const EstimationBudget& budget);

/// int over the boundary of <x, eta> |x|^p' rho(x) dsigma.
Estimate surface_moment_integral(const Measure& m, const Body& body, double p_prime, int resolution = 256);

/// W_2 by quantile coupling in 1-d, closed form for isotropic Gaussian pairs.
Estimate w2_distance(const Measure& first, const Measure& second, const EstimationBudget& budget);

enum class CoareaSign { Positive, Negative };

struct CoareaResult {
  Estimate lhs;
  Estimate rhs;
  double t_max = 0.0;
};

CoareaResult coarea_integral(const Measure& m, const QcFunction& f, double p, CoareaSign sign,
                             const EstimationBudget& budget);

/// Sampled supremum of Phi_f / f over 1e5 draws and a ray grid; a lower bound of the essential sup.
Estimate sup_phi_ratio(const QcFunction& f, const Measure& m, std::uint64_t seed);

}  // namespace dilatio
