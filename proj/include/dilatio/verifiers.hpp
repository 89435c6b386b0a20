#pragma once

// One check per inequality: both sides with error bars and a
// pass/fail/inconclusive decision, plus sharpness probes and the
// reconstruction of the dilation inequality from the entropy bound.

#include "dilatio/estimators.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dilatio {

enum class Status { Pass, Fail, Inconclusive };

std::string to_string(Status s);

/// How lhs and rhs are compared.
enum class Relation { AtMost, Equal, Report };

std::string to_string(Relation r);

struct CheckResult {
  std::string id;
  Relation relation = Relation::AtMost;
  Estimate lhs;
  Estimate rhs;
  double kappa = 0.0;
  std::string kappa_provenance;
  double margin = 0.0;
  /// Tolerance of an equality check.
  double tolerance = 0.0;
  Status status = Status::Inconclusive;
  std::string witness;
  std::uint64_t seed = 0;
  std::string note;

  bool passed() const { return status == Status::Pass; }
};

/// Decision for lhs <= rhs: pass within three combined standard errors; fail
/// only when the margin is also below -max(1e-6, 1e-3|rhs|).
CheckResult decide(std::string id, Estimate lhs, Estimate rhs);

/// Decision for |lhs - rhs| <= tolerance (plus three combined standard errors).
CheckResult decide_equal(std::string id, Estimate lhs, Estimate rhs, double tolerance);

/// Informational record (empirical constants, fitted slopes).
CheckResult report(std::string id, Estimate value, std::string note);

/// The measure's tagged kappa, or the user's value; throws DomainError when neither exists.
KappaClaim resolve_kappa(const Measure& m, std::optional<double> user);

CheckResult check_dilation(const Measure& m, const Body& body, double kappa, const EstimationBudget& budget);

/// Dilation inequality on A = (0, x) for a measure on the half-line, as an equality probe.
CheckResult check_one_sided_probe(const Measure& m, double x, double kappa, double tolerance,
                                  const EstimationBudget& budget);

enum class EntropyVariant { Convex, Lipschitz, C1, Master };

std::string to_string(EntropyVariant v);
EntropyVariant entropy_variant_from_string(const std::string& s);

CheckResult check_entropy_bounds(const Measure& m, const QcFunction& f, double kappa, EntropyVariant variant,
                                 const EstimationBudget& budget);

enum class LsiVariant { CauchySchwarz, Defective, OneDim };

std::string to_string(LsiVariant v);
LsiVariant lsi_variant_from_string(const std::string& s);

/// For the one-dim variant f is the square g^2 of an odd monotone g, so the
/// energy int |g'|^2 dmu equals I_mu(f)/4.
CheckResult check_lsi(const Measure& m, const QcFunction& f, double kappa, LsiVariant variant,
                      const EstimationBudget& budget, std::optional<double> poincare = std::nullopt);

/// Gaussian suite for f on gamma_n: entropy-variance, transport-variance,
/// variance lower bound, reverse Shannon, Talagrand and Cramér-Rao.
std::vector<CheckResult> check_gaussian_suite(const QcFunction& f, const EstimationBudget& budget);

struct MomentPair {
  double p;
  double q;
};

std::vector<CheckResult> check_moment_suite(const Measure& m, const QcFunction& f, double kappa,
                                            const std::vector<MomentPair>& pairs, std::optional<double> alpha,
                                            const EstimationBudget& budget);

std::vector<CheckResult> check_negative_suite(const Measure& m, const QcFunction& f, double kappa,
                                              const std::vector<double>& p_grid, double eps_beta,
                                              const std::vector<double>& t_grid, const EstimationBudget& budget);

std::vector<CheckResult> check_isoperimetry(const Measure& m, const Body& body, double kappa, double p,
                                            const EstimationBudget& budget);

CheckResult check_coarea(const Measure& m, const QcFunction& f, double p, CoareaSign sign,
                         const EstimationBudget& budget);

struct ReconstructionRow {
  double sigma;
  Estimate entropy;
  Estimate phi_integral;
};

struct Reconstruction {
  /// Extrapolated entropy limit against the extrapolated Phi-integral limit.
  CheckResult result;
  /// Entropy limit against -(1 - mu) log(1 - mu), Phi limit against mu*/kappa.
  std::vector<CheckResult> limits;
  std::vector<ReconstructionRow> table;
};

/// {2^-k : k = 2..10}.
std::vector<double> default_sigma_ladder();

Reconstruction reconstruct_dilation(const Measure& m, const Body& body, double kappa,
                                    const std::vector<double>& sigmas, const EstimationBudget& budget,
                                    double tolerance = 5e-3);

/// Dilation checks for base * h with b^-1 <= h <= b and kappa b^-2 kappa_base, on
/// `count` balls with radii drawn from U(0.1, 3).
std::vector<CheckResult> check_perturbation(const Measure& base, double bound, double kappa_base, int count,
                                            std::uint64_t seed, const EstimationBudget& budget);

/// Dilation check on the product with kappa = (1/kappa_1 + 1/kappa_2)^-1 for unconditional K.
CheckResult check_tensor_harmonic(const Measure& first, double kappa_first, const Measure& second,
                                  double kappa_second, const Body& body, const EstimationBudget& budget);

/// Master entropy bound on the product with kappa = min(kappa_1, kappa_2).
CheckResult check_tensor_min(const Measure& first, double kappa_first, const Measure& second, double kappa_second,
                             const QcFunction& f, const EstimationBudget& budget);

/// Exploratory search over boxes in a product of two 2-d factors with the
/// harmonic kappa; always inconclusive, reports the smallest margin found.
CheckResult explore_tensor_2x2(const Measure& first, double kappa_first, const Measure& second,
                               double kappa_second, int trials, const EstimationBudget& budget);

struct SharpnessOptions {
  std::vector<double> gaussian_t{0.3, 0.1, 0.03, 0.01};
  double ratio_upper = 1.01;
  std::vector<double> one_sided_x{0.5, 1.0, 2.0};
  std::vector<double> exponential_t{0.5, 1.0, 2.0};
  double borell_radius = 1.5;
  std::vector<double> borell_t{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
};

std::vector<CheckResult> sharpness_probes(const EstimationBudget& budget, const SharpnessOptions& options = {});

}  // namespace dilatio
