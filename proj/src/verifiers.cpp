#include "dilatio/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace dilatio {

namespace {

Vector one(double v) { return Vector::Constant(1, v); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void append_note(std::string& dst, const std::string& note) {
  if (note.empty()) return;
  dst = dst.empty() ? note : dst + "; " + note;
}

Estimate scaled(Estimate e, double factor) {
  e.value *= factor;
  e.std_error *= std::abs(factor);
  return e;
}

Estimate exact(double v, const std::string& tag) { return Estimate::exact(v, tag); }

/// -kappa (1 - mu) log(1 - mu) with the mass error propagated.
Estimate dilation_lower_side(const Estimate& mu, double kappa) {
  Estimate e = mu;
  const double c = 1.0 - mu.value;
  e.value = c > 0 ? -kappa * c * std::log(c) : 0.0;
  e.std_error = c > 0 ? std::abs(kappa * (std::log(c) + 1.0)) * mu.std_error : 0.0;
  e.method = "mass/" + mu.method;
  return e;
}

CheckResult with_context(CheckResult r, double kappa, std::uint64_t seed, std::string witness) {
  r.kappa = kappa;
  r.seed = seed;
  r.witness = std::move(witness);
  return r;
}

// Aitken's delta-squared limit of the last three entries, which is exact for
// L + a q^k; falls back to Richardson when the tail is not geometric.
Extrapolation aitken_tail(const std::vector<double>& v) {
  auto aitken = [&](std::size_t end) -> std::optional<double> {
    const double x0 = v[end - 3], x1 = v[end - 2], x2 = v[end - 1];
    const double d1 = x1 - x0, d2 = x2 - x1, den = d2 - d1;
    if (d1 == 0.0 || d2 == 0.0) return x2;
    if (d1 * d2 < 0 || std::abs(den) < 1e-300) return std::nullopt;
    return x2 - d2 * d2 / den;
  };
  if (v.size() >= 3) {
    if (auto last = aitken(v.size())) {
      double err = std::abs(v.back() - v[v.size() - 2]);
      if (v.size() >= 4)
        if (auto prev = aitken(v.size() - 1)) err = std::abs(*last - *prev);
      return {*last, err, true, 2};
    }
  }
  return richardson_halving(v);
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass:
      return "pass";
    case Status::Fail:
      return "fail";
    case Status::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Relation r) {
  switch (r) {
    case Relation::AtMost:
      return "<=";
    case Relation::Equal:
      return "==";
    case Relation::Report:
      return "report";
  }
  return "<=";
}

CheckResult decide(std::string id, Estimate lhs, Estimate rhs) {
  CheckResult r;
  r.id = std::move(id);
  r.relation = Relation::AtMost;
  r.margin = rhs.value - lhs.value;
  const double sigma = std::hypot(lhs.std_error, rhs.std_error);
  const double tol = std::max(1e-6, 1e-3 * std::abs(rhs.value));
  const bool flagged = lhs.inconclusive || rhs.inconclusive;
  if (std::isnan(lhs.value) || std::isnan(rhs.value) || std::isnan(sigma)) {
    r.status = Status::Inconclusive;
    r.note = "undefined side";
  } else if (r.margin >= -3.0 * sigma || (std::isinf(rhs.value) && rhs.value > 0)) {
    r.status = flagged && !(r.margin >= 3.0 * sigma + tol) ? Status::Inconclusive : Status::Pass;
  } else if (r.margin < -tol) {
    r.status = flagged ? Status::Inconclusive : Status::Fail;
  } else {
    r.status = Status::Inconclusive;
  }
  if (flagged && r.status == Status::Inconclusive) append_note(r.note, "an estimate did not settle");
  r.lhs = std::move(lhs);
  r.rhs = std::move(rhs);
  r.seed = r.lhs.seed;
  return r;
}

CheckResult decide_equal(std::string id, Estimate lhs, Estimate rhs, double tolerance) {
  CheckResult r;
  r.id = std::move(id);
  r.relation = Relation::Equal;
  r.tolerance = tolerance;
  r.margin = rhs.value - lhs.value;
  const double sigma = std::hypot(lhs.std_error, rhs.std_error);
  const double gap = std::abs(r.margin);
  const bool flagged = lhs.inconclusive || rhs.inconclusive;
  if (std::isnan(gap)) {
    r.status = Status::Inconclusive;
  } else if (gap <= tolerance + 3.0 * sigma) {
    r.status = flagged ? Status::Inconclusive : Status::Pass;
  } else {
    r.status = flagged ? Status::Inconclusive : Status::Fail;
  }
  r.lhs = std::move(lhs);
  r.rhs = std::move(rhs);
  r.seed = r.lhs.seed;
  return r;
}

CheckResult report(std::string id, Estimate value, std::string note) {
  CheckResult r;
  r.id = std::move(id);
  r.relation = Relation::Report;
  r.lhs = value;
  r.rhs = value;
  r.status = std::isfinite(value.value) && !value.inconclusive ? Status::Pass : Status::Inconclusive;
  r.note = std::move(note);
  r.seed = value.seed;
  return r;
}

KappaClaim resolve_kappa(const Measure& m, std::optional<double> user) {
  if (user) {
    if (!(*user > 0)) throw DomainError("kappa must be positive");
    return {*user, "user-supplied"};
  }
  KappaClaim k = m.kappa();
  if (!k.tagged()) throw DomainError("measure " + m.describe() + " has no tagged kappa; supply one");
  return k;
}

CheckResult check_dilation(const Measure& m, const Body& body, double kappa, const EstimationBudget& budget) {
  if (!(kappa > 0)) throw DomainError("check_dilation: kappa must be positive");
  const std::string witness = "K=" + body.describe() + " mu=" + m.describe();
  const Estimate mu = mass_of_body(m, body, budget);
  if (mu.value <= 0.0 || mu.value >= 1.0) {
    CheckResult r = decide("dilation", exact(0.0, "trivial"), exact(0.0, "trivial"));
    r.note = "mu(K) in {0, 1}: trivial";
    return with_context(r, kappa, budget.seed, witness);
  }
  CheckResult r = decide("dilation", dilation_lower_side(mu, kappa), dilation_area(m, body, budget));
  r.note = "mu(K)=" + fmt(mu.value);
  return with_context(r, kappa, budget.seed, witness);
}

CheckResult check_one_sided_probe(const Measure& m, double x, double kappa, double tolerance,
                                  const EstimationBudget& budget) {
  const double tail = 1.0 - m.cdf_1d(x);
  Estimate mu = exact(1.0 - tail, "cdf");
  Estimate lhs = dilation_lower_side(mu, kappa);
  lhs.value = tail > 0 ? -kappa * tail * std::log(tail) : 0.0;
  CheckResult r = decide_equal("one-sided-probe", lhs, one_sided_interval_dilation_area(m, x, budget), tolerance);
  return with_context(r, kappa, budget.seed, "A=(0," + fmt(x) + ") mu=" + m.describe());
}

std::string to_string(EntropyVariant v) {
  switch (v) {
    case EntropyVariant::Convex:
      return "convex";
    case EntropyVariant::Lipschitz:
      return "lipschitz";
    case EntropyVariant::C1:
      return "c1";
    case EntropyVariant::Master:
      return "master";
  }
  return "master";
}

EntropyVariant entropy_variant_from_string(const std::string& s) {
  if (s == "convex") return EntropyVariant::Convex;
  if (s == "lipschitz") return EntropyVariant::Lipschitz;
  if (s == "c1") return EntropyVariant::C1;
  if (s == "master") return EntropyVariant::Master;
  throw DomainError("unknown entropy variant '" + s + "'");
}

CheckResult check_entropy_bounds(const Measure& m, const QcFunction& f, double kappa, EntropyVariant variant,
                                 const EstimationBudget& budget) {
  if (!(kappa > 0)) throw DomainError("check_entropy_bounds: kappa must be positive");
  if (f.dim() != m.dim()) throw DomainError("check_entropy_bounds: dimension mismatch");
  if (!f.claims_quasi_convex()) throw DomainError(f.describe() + " is not symmetric quasi-convex");
  std::function<double(const Vector&)> g;
  double scale = 2.0 / kappa;
  switch (variant) {
    case EntropyVariant::Convex:
      if (!f.convex()) throw DomainError("variant convex requires a convex function, got " + f.describe());
      g = [&](const Vector& x) {
        auto p = f.subgradient_pairing(x);
        if (!p) throw UnsupportedError(f.describe() + " ships no subdifferential");
        return *p;
      };
      break;
    case EntropyVariant::Lipschitz:
      if (f.smoothness() == Smoothness::Continuous)
        throw DomainError("variant lipschitz requires a locally Lipschitz function, got " + f.describe());
      g = [&](const Vector& x) {
        const GradientEval ge = f.eval_and_grad(x);
        return x.norm() * ge.gradient->norm();
      };
      break;
    case EntropyVariant::C1:
      if (f.smoothness() != Smoothness::C1) throw DomainError("variant c1 requires a C1 function, got " + f.describe());
      g = [&](const Vector& x) { return x.dot(*f.eval_and_grad(x).gradient); };
      break;
    case EntropyVariant::Master:
      scale = 1.0 / kappa;
      g = [&](const Vector& x) { return phi_value(f, x); };
      break;
  }
  const Estimate lhs = entropy(f, m, budget);
  const Estimate integral =
      integrate(m, [&](const Vector& x) { return one(g(x)); }, 1, budget, hints_for(f)).component(0);
  CheckResult r = decide("entropy-" + to_string(variant), lhs, scaled(integral, scale));
  return with_context(r, kappa, budget.seed, "f=" + f.describe() + " mu=" + m.describe());
}

std::string to_string(LsiVariant v) {
  switch (v) {
    case LsiVariant::CauchySchwarz:
      return "cauchy-schwarz";
    case LsiVariant::Defective:
      return "defective";
    case LsiVariant::OneDim:
      return "one-dim";
  }
  return "cauchy-schwarz";
}

LsiVariant lsi_variant_from_string(const std::string& s) {
  if (s == "cauchy-schwarz") return LsiVariant::CauchySchwarz;
  if (s == "defective") return LsiVariant::Defective;
  if (s == "one-dim") return LsiVariant::OneDim;
  throw DomainError("unknown lsi variant '" + s + "'");
}

CheckResult check_lsi(const Measure& m, const QcFunction& f, double kappa, LsiVariant variant,
                      const EstimationBudget& budget, std::optional<double> poincare) {
  if (!(kappa > 0)) throw DomainError("check_lsi: kappa must be positive");
  if (f.dim() != m.dim()) throw DomainError("check_lsi: dimension mismatch");
  if (!f.claims_quasi_convex()) throw DomainError(f.describe() + " is not symmetric quasi-convex");
  if (f.smoothness() == Smoothness::Continuous) throw DomainError("check_lsi: f must be locally Lipschitz");
  const std::string witness = "f=" + f.describe() + " mu=" + m.describe();
  const Estimate lhs = entropy(f, m, budget);
  const Estimate info = fisher_information(f, m, budget);
  const std::string id = "lsi-" + to_string(variant);
  if (variant == LsiVariant::OneDim) {
    if (m.dim() != 1) throw DomainError("one-dim LSI needs a 1-d measure");
    const double half = m.ray_extent(Vector::Constant(1, 1.0));
    if (!std::isfinite(half) || !m.symmetric())
      throw DomainError("one-dim LSI needs a symmetric measure on a bounded interval");
    const double diam = 2.0 * half;
    const Estimate energy = scaled(info, 0.25);
    std::optional<double> c = poincare;
    std::string origin = "supplied";
    if (!c && m.kind() == MeasureKind::Uniform) {
      c = std::pow(kPi / diam, 2.0);
      origin = "exact Neumann gap (pi/diam)^2";
    }
    CheckResult r;
    if (c) {
      if (!(*c > 0)) throw DomainError("Poincare constant must be positive");
      r = decide(id, lhs, scaled(energy, (4.0 + diam * diam / (4.0 * *c)) / kappa));
      r.note = "C_mu=" + fmt(*c) + " (" + origin + ")";
      return with_context(r, kappa, budget.seed, witness);
    }
    if (!m.log_concave()) throw DomainError("one-dim LSI: no Poincare constant for a non-log-concave measure");
    const double d0 = m.density(Vector::Zero(1));
    r = decide(id, lhs, scaled(energy, 2.0 + diam * diam / (8.0 * d0 * d0)));
    r.note = "log-concave form with C_mu >= rho(0)^2, kappa=2";
    return with_context(r, 2.0, budget.seed, witness);
  }
  auto second = [&](const Vector& x) { return one(x.squaredNorm() * f(x)); };
  const Estimate m2 = integrate(m, second, 1, budget, hints_for(f)).component(0);
  Estimate rhs = m2;
  if (variant == LsiVariant::CauchySchwarz) {
    const double v = (2.0 / kappa) * std::sqrt(m2.value * info.value);
    rhs.value = v;
    rhs.std_error = 0.5 * v *
                    std::hypot(m2.value > 0 ? m2.std_error / m2.value : 0.0,
                               info.value > 0 ? info.std_error / info.value : 0.0);
  } else {
    rhs.value = (info.value + m2.value) / kappa;
    rhs.std_error = std::hypot(info.std_error, m2.std_error) / kappa;
  }
  rhs.inconclusive = m2.inconclusive || info.inconclusive;
  CheckResult r = decide(id, lhs, rhs);
  return with_context(r, kappa, budget.seed, witness);
}

std::vector<CheckResult> check_gaussian_suite(const QcFunction& f, const EstimationBudget& budget) {
  const Index n = f.dim();
  const double dn = double(n);
  if (!f.claims_quasi_convex()) throw DomainError(f.describe() + " is not symmetric quasi-convex");
  if (f.smoothness() != Smoothness::C1) throw DomainError("gaussian suite needs a C1 function");
  const Measure gamma = Measure::gaussian(n);
  Estimate ent, m2, w2, info;
  std::string note;
  bool analytic = false;
  if (f.kind() == FunctionKind::Constant) {
    if (!(f.parameter(0) > 0)) throw DegenerateInputError("gaussian suite: int f dgamma = 0");
    ent = exact(0.0, "analytic");
    m2 = exact(dn, "analytic");
    w2 = exact(0.0, "analytic");
    info = exact(dn, "analytic");
    analytic = true;
  } else if (f.kind() == FunctionKind::GaussianRatio) {
    const double s = f.parameter(0);
    ent = exact(0.5 * dn * (s * s - 1.0 - 2.0 * std::log(s)), "analytic");
    m2 = exact(dn * s * s, "analytic");
    w2 = exact(std::sqrt(dn) * std::abs(1.0 - s), "analytic");
    info = exact(dn / (s * s), "analytic");
    analytic = true;
  } else {
    auto g = [&](const Vector& x) {
      const GradientEval ge = f.eval_and_grad(x);
      const double v = ge.value;
      Vector out(4);
      out[0] = v;
      out[1] = v > 0 ? v * std::log(v) : 0.0;
      out[2] = x.squaredNorm() * v;
      const Vector score = *ge.gradient - x * v;
      out[3] = v > 0 ? score.squaredNorm() / v : 0.0;
      return out;
    };
    const MultiEstimate me = integrate(gamma, g, 4, budget, hints_for(f));
    const double a = me.mean[0];
    if (!(a > 0)) throw DegenerateInputError("gaussian suite: int f dgamma = 0");
    const double b = me.mean[1], c = me.mean[2], d = me.mean[3];
    Vector grad = Vector::Zero(4);
    grad << -b / (a * a) - 1.0 / a, 1.0 / a, 0, 0;
    ent = me.combine(b / a - std::log(a), grad);
    ent.std_error += 1e-14 * (std::abs(b / a) + std::abs(std::log(a)));
    grad << -c / (a * a), 0, 1.0 / a, 0;
    m2 = me.combine(c / a, grad);
    grad << -d / (a * a), 0, 0, 1.0 / a;
    info = me.combine(d / a, grad);
    if (n == 1) {
      const double log_a = std::log(a);
      auto potential = [&f, log_a](double x) {
        const double v = f(Vector::Constant(1, x));
        return v > 0 ? 0.5 * x * x + 0.5 * std::log(2.0 * kPi) - std::log(v) + log_a : kInf;
      };
      const Measure h = Measure::custom_1d(potential, kInf, true, false, "f*gamma_1");
      w2 = w2_distance(gamma, h, budget);
    } else {
      w2 = exact(kNaN, "unsupported");
      w2.inconclusive = true;
      w2.note = "W2 needs 1-d or a Gaussian pair";
    }
  }
  // Decay |x| f(x) gamma(x) -> 0 along the axes.
  bool decays = true;
  for (Index i = 0; i < n && decays; ++i) {
    double prev = kInf;
    for (double r : {8.0, 16.0, 32.0}) {
      Vector x = Vector::Zero(n);
      x[i] = r;
      const double v = r * f(x) * gamma.density(x);
      if (!(v <= prev) || !std::isfinite(v)) decays = false;
      prev = v;
    }
    if (prev > 1e-12) decays = false;
  }
  if (!decays) note = "decay condition failed on the radius grid";

  const Estimate n_exact = exact(dn, "dimension");
  auto sub = [](const Estimate& e, double c) {
    Estimate out = e;
    out.value -= c;
    return out;
  };
  const Estimate var_gap = sub(m2, dn);
  Estimate half_w2 = w2;
  half_w2.value = 0.5 * w2.value * w2.value;
  half_w2.std_error = std::abs(w2.value) * w2.std_error;
  Estimate shannon_lhs = ent;
  shannon_lhs.value = ent.value - 0.5 * dn * std::log(2.0 * kPi) - 0.5 * m2.value;
  shannon_lhs.std_error = std::hypot(ent.std_error, 0.5 * m2.std_error);
  Estimate shannon_rhs = m2;
  shannon_rhs.value = 0.5 * m2.value - 0.5 * dn * std::log(2.0 * kPi * std::exp(2.0));
  shannon_rhs.std_error = 0.5 * m2.std_error;
  Estimate cr = m2;
  cr.value = std::sqrt(m2.value * info.value);
  cr.std_error = 0.5 * cr.value *
                 std::hypot(m2.value > 0 ? m2.std_error / m2.value : 0.0,
                            info.value > 0 ? info.std_error / info.value : 0.0);
  cr.inconclusive = m2.inconclusive || info.inconclusive;

  std::vector<CheckResult> out;
  out.push_back(decide("entropy-variance", ent, var_gap));
  out.push_back(decide("transport-variance", half_w2, var_gap));
  out.push_back(decide("variance", n_exact, m2));
  out.push_back(decide("reverse-shannon", shannon_lhs, shannon_rhs));
  out.push_back(decide("talagrand", half_w2, ent));
  out.push_back(decide("cramer-rao", n_exact, cr));
  for (auto& r : out) {
    r.kappa = 2.0;
    r.kappa_provenance = "standard Gaussian: kappa = 2";
    r.seed = budget.seed;
    r.witness = "f=" + f.describe() + " n=" + std::to_string(n) + (analytic ? " (analytic)" : "");
    if (!decays) {
      r.status = r.status == Status::Pass ? Status::Inconclusive : r.status;
      append_note(r.note, note);
    }
  }
  return out;
}

std::vector<CheckResult> check_moment_suite(const Measure& m, const QcFunction& f, double kappa,
                                            const std::vector<MomentPair>& pairs, std::optional<double> alpha,
                                            const EstimationBudget& budget) {
  if (!(kappa > 0)) throw DomainError("check_moment_suite: kappa must be positive");
  if (f.dim() != m.dim()) throw DomainError("check_moment_suite: dimension mismatch");
  if (!f.claims_quasi_convex()) throw DomainError(f.describe() + " is not symmetric quasi-convex");
  const std::string witness = "f=" + f.describe() + " mu=" + m.describe();
  const Estimate sup = sup_phi_ratio(f, m, budget.seed);
  const double exponent = sup.value / kappa;
  std::vector<CheckResult> out;
  for (const auto& pq : pairs) {
    if (!(pq.p > 0 && pq.q >= pq.p)) throw DomainError("moment pair needs 0 < p <= q");
    const Estimate lq = lp_norm(f, m, pq.q, budget);
    const Estimate lp = lp_norm(f, m, pq.p, budget);
    CheckResult r = decide("moment-" + fmt(pq.p) + "-" + fmt(pq.q), lq, scaled(lp, std::pow(pq.q / pq.p, exponent)));
    r.note = "exponent ||Phi_f/f||/kappa=" + fmt(exponent) + " (sampled sup, lower bound)";
    out.push_back(with_context(r, kappa, budget.seed, witness));
  }
  const double a = alpha ? *alpha : (sup.value > 0 ? kappa / sup.value : kInf);
  if (!(a >= 1.0) || !std::isfinite(a)) {
    const std::string why = "alpha=" + fmt(a) + " outside [1, inf): Orlicz and deviation checks skipped";
    if (out.empty()) {
      out.push_back(report("orlicz-skipped", exact(a, "alpha"), why));
      out.back().status = Status::Pass;
    } else {
      append_note(out.front().note, why);
    }
    return out;
  }
  const OrliczResult orl = orlicz_norm(f, m, a, budget);
  const Estimate la = lp_norm(f, m, a, budget);
  const Estimate scaled_la = scaled(la, std::pow(a, -1.0 / a));
  auto ratio_side = [](const Estimate& x, const Estimate& y) {
    Estimate e = x;
    const double r = x.value / y.value;
    e.value = std::max(r, 1.0 / r);
    e.std_error = e.value * std::hypot(x.std_error / x.value, y.std_error / y.value);
    e.inconclusive = x.inconclusive || y.inconclusive;
    return e;
  };
  CheckResult eq = decide("orlicz-equivalence", ratio_side(orl.norm, scaled_la), exact(8.0, "bracket"));
  eq.note = "psi_alpha=" + fmt(orl.norm.value) + " alpha^(-1/alpha)||f||_alpha=" + fmt(scaled_la.value) +
            " alpha=" + fmt(a);
  out.push_back(with_context(eq, kappa, budget.seed, witness));
  CheckResult lem = decide("orlicz-lemma", ratio_side(orl.norm, orl.sup_form), exact(8.0, "bracket"));
  lem.note = "sup_p ||f||_p/p^(1/alpha)=" + fmt(orl.sup_form.value) + " at p=" + fmt(orl.sup_at);
  out.push_back(with_context(lem, kappa, budget.seed, witness));

  // Minimal C with mu(f >= C t alpha^{-1/alpha}||f||_alpha) <= 2 exp(-t^alpha) over the grid.
  const double scale = scaled_la.value;
  std::vector<double> sorted;
  if (m.dim() > 1) {
    for (const auto& x : m.sample(budget.samples, budget.seed)) sorted.push_back(f(x));
    std::sort(sorted.begin(), sorted.end());
  }
  auto upper_tail = [&](double s) {
    if (m.dim() == 1) return 1.0 - level_mass(f, m, s, false, budget).value;
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), s);
    return double(sorted.end() - it) / double(sorted.size());
  };
  double c_min = 0.0, worst_t = 0.0;
  for (double t : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0}) {
    const double target = 2.0 * std::exp(-std::pow(t, a));
    if (target >= 1.0 || target < 1e-12) continue;
    double lo = f.min_value(), hi = std::max(lo, 0.0) + scale;
    while (upper_tail(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) break;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (upper_tail(mid) > target ? lo : hi) = mid;
    }
    const double c = hi / (t * scale);
    if (c > c_min) {
      c_min = c;
      worst_t = t;
    }
  }
  Estimate ce = exact(c_min, m.dim() == 1 ? "pushforward-quantile" : "sample-quantile");
  ce.seed = budget.seed;
  out.push_back(with_context(report("deviation-constant", ce,
                                    "empirical C over t in [0.5, 5]; worst t=" + fmt(worst_t) + " alpha=" + fmt(a)),
                             kappa, budget.seed, witness));
  return out;
}

std::vector<CheckResult> check_negative_suite(const Measure& m, const QcFunction& f, double kappa,
                                              const std::vector<double>& p_grid, double eps_beta,
                                              const std::vector<double>& t_grid, const EstimationBudget& budget) {
  if (!(kappa > 0)) throw DomainError("check_negative_suite: kappa must be positive");
  if (!(f.min_value() > 0)) throw DomainError("negative suite needs f > 0");
  if (!f.claims_quasi_convex()) throw DomainError(f.describe() + " is not symmetric quasi-convex");
  if (!(eps_beta > 0 && eps_beta < 1)) throw DomainError("negative suite: eps*beta must lie in (0, 1)");
  const std::string witness = "f=" + f.describe() + " mu=" + m.describe();
  const Estimate sup = sup_phi_ratio(f, m, budget.seed);
  const double beta = sup.value / (kappa * std::log(2.0));
  const bool constant = f.kind() == FunctionKind::Constant;
  if (!std::isfinite(beta) || (beta == 0.0 && !constant)) throw DomainError("negative suite: beta is 0 or infinite");
  const Estimate med = levy_mean(f, m, budget);
  std::vector<CheckResult> out;
  for (double p : p_grid) {
    if (!(p > 0) || beta * p >= 1.0) throw DomainError("negative suite: p must lie in (0, 1/beta)");
    const Estimate neg = lp_norm(f, m, -p, budget);
    const double factor = beta == 0.0 ? 1.0 : std::pow(std::exp(1.0) / (1.0 - beta * p), beta);
    CheckResult r = decide("negative-moment-" + fmt(p), med, scaled(neg, factor));
    r.note = "beta=" + fmt(beta) + " (sampled sup, lower bound)";
    out.push_back(with_context(r, kappa, budget.seed, witness));
  }
  if (constant) return out;
  const double eps = eps_beta / beta;
  const double front = std::pow(std::exp(1.0) / eps_beta, 1.0 - eps_beta);
  for (double t : t_grid) {
    if (!(t > 0 && t <= 1)) throw DomainError("small-ball grid must lie in (0, 1]");
    const Estimate mass = level_mass(f, m, t * med.value, true, budget);
    CheckResult r = decide("small-ball-" + fmt(t), mass, exact(front * std::pow(t, 1.0 / beta - eps), "bound"));
    r.note = "beta=" + fmt(beta) + " eps=" + fmt(eps);
    out.push_back(with_context(r, kappa, budget.seed, witness));
  }
  return out;
}

std::vector<CheckResult> check_isoperimetry(const Measure& m, const Body& body, double kappa, double p,
                                            const EstimationBudget& budget) {
  if (!(p > 1 && p <= 2)) throw DomainError("isoperimetry: p must lie in (1, 2]");
  if (!body.bounded()) throw DomainError("isoperimetry: K must be bounded");
  const std::string witness = "K=" + body.describe() + " mu=" + m.describe();
  const Radii rr = radii(body);
  const Estimate mu = mass_of_body(m, body, budget);
  const Estimate per = perimeter(m, body, budget);
  const Estimate dil = dilation_area(m, body, budget);
  const Estimate profile = dilation_lower_side(mu, 0.5 * kappa);  // -(kappa/2)(1-mu)log(1-mu)
  std::vector<CheckResult> out;
  std::string skipped;
  try {
    const double p_prime = p / (p - 1.0);
    const Estimate s = surface_moment_integral(m, body, p_prime, std::max(64, budget.nodes));
    Estimate lhs = profile;
    const double base = rr.inner / s.value;
    lhs.value = std::pow(base, p - 1.0) * std::pow(profile.value, p);
    lhs.std_error = lhs.value * std::hypot((p - 1.0) * s.std_error / s.value,
                                           profile.value > 0 ? p * profile.std_error / profile.value : 0.0);
    CheckResult r = decide("iso-surface", lhs, per);
    r.note = "r(K)=" + fmt(rr.inner) + " S=" + fmt(s.value) + " p=" + fmt(p);
    out.push_back(with_context(r, kappa, budget.seed, witness));
  } catch (const UnsupportedError& e) {
    skipped = std::string("surface form skipped: ") + e.what();
  }
  CheckResult direct = decide("iso-direct", scaled(profile, 1.0 / rr.outer), per);
  direct.note = "R(K)=" + fmt(rr.outer);
  append_note(direct.note, skipped);
  out.push_back(with_context(direct, kappa, budget.seed, witness));
  CheckResult bridge = decide("iso-bridge", dil, scaled(per, 2.0 * rr.outer));
  out.push_back(with_context(bridge, kappa, budget.seed, witness));
  return out;
}

CheckResult check_coarea(const Measure& m, const QcFunction& f, double p, CoareaSign sign,
                         const EstimationBudget& budget) {
  const CoareaResult c = coarea_integral(m, f, p, sign, budget);
  CheckResult r = decide(sign == CoareaSign::Positive ? "coarea" : "coarea-negative", c.lhs, c.rhs);
  r.note = "t_max=" + fmt(c.t_max);
  return with_context(r, 0.0, budget.seed, "f=" + f.describe() + " mu=" + m.describe() + " p=" + fmt(p));
}

std::vector<double> default_sigma_ladder() {
  std::vector<double> out;
  for (int k = 2; k <= 10; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

Reconstruction reconstruct_dilation(const Measure& m, const Body& body, double kappa,
                                    const std::vector<double>& sigmas, const EstimationBudget& budget,
                                    double tolerance) {
  if (!(kappa > 0)) throw DomainError("reconstruct: kappa must be positive");
  if (sigmas.size() < 3) throw DomainError("reconstruct: need at least three sigma values");
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    if (!(sigmas[i] < sigmas[i - 1])) throw DomainError("reconstruct: sigma sequence must decrease");
  const std::string witness = "K=" + body.describe() + " mu=" + m.describe();
  Reconstruction rec;
  std::vector<double> ents, phis;
  double stat_e = 0.0, stat_p = 0.0;
  bool unsettled = false;
  for (double s : sigmas) {
    const QcFunction fs = QcFunction::f_sigma(body, s);
    const Estimate e = entropy(fs, m, budget);
    auto g = [&](const Vector& x) { return one(*fs.analytic_phi(x)); };
    const Estimate p = scaled(integrate(m, g, 1, budget, hints_for(fs)).component(0), 1.0 / kappa);
    rec.table.push_back({s, e, p});
    ents.push_back(e.value);
    phis.push_back(p.value);
    stat_e = std::max(stat_e, e.std_error);
    stat_p = std::max(stat_p, p.std_error);
    unsettled = unsettled || e.inconclusive || p.inconclusive;
  }
  auto limit = [&](const std::vector<double>& v, double stat, const std::string& tag) {
    const Extrapolation ex = aitken_tail(v);
    Estimate e;
    e.value = ex.value;
    e.std_error = ex.error + 10.0 * stat;
    e.method = tag;
    e.seed = budget.seed;
    e.inconclusive = unsettled || !std::isfinite(ex.value);
    return e;
  };
  const Estimate ent_lim = limit(ents, stat_e, "aitken-sigma-extrapolation");
  const Estimate phi_lim = limit(phis, stat_p, "aitken-sigma-extrapolation");

  // Boundary mass mu(closure K) - mu(K), seen through a thin two-sided shell.
  const double eta = 1e-9;
  const double boundary = mass_of_body(m, Body::scaled(body, 1.0 + eta), budget).value -
                          mass_of_body(m, Body::scaled(body, 1.0 - eta), budget).value;
  const Estimate mu = mass_of_body(m, body, budget);
  const Estimate direct_ent = dilation_lower_side(mu, 1.0);
  const Estimate direct_phi = scaled(dilation_area(m, body, budget), 1.0 / kappa);

  rec.result = decide("reconstruct", scaled(ent_lim, kappa), scaled(phi_lim, kappa));
  rec.result.note = "limits of kappa*Ent(f_sigma) and int Phi_(f_sigma) as sigma -> 0";
  rec.limits.push_back(decide_equal("reconstruct-entropy-limit", ent_lim, direct_ent, tolerance));
  rec.limits.push_back(decide_equal("reconstruct-phi-limit", phi_lim, direct_phi, tolerance));
  for (auto* r : {&rec.result, &rec.limits[0], &rec.limits[1]}) {
    *r = with_context(*r, kappa, budget.seed, witness);
    if (boundary > 1e-6) {
      r->status = Status::Inconclusive;
      append_note(r->note, "mass on the boundary of K");
    }
  }
  return rec;
}

std::vector<CheckResult> check_perturbation(const Measure& base, double bound, double kappa_base, int count,
                                            std::uint64_t seed, const EstimationBudget& budget) {
  if (!(bound >= 1)) throw DomainError("perturbation: bound b must be at least 1");
  if (!(kappa_base > 0)) throw DomainError("perturbation: base kappa must be positive");
  const Measure m = bound == 1.0 ? base : Measure::perturbed(base, bound);
  const double kappa = kappa_base / (bound * bound);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.1, 3.0);
  std::vector<CheckResult> out;
  for (int i = 0; i < count; ++i) {
    const double t = radius(rng);
    CheckResult r = check_dilation(m, Body::ball(base.dim(), t), kappa, budget);
    r.id = "perturbation-" + std::to_string(i);
    r.kappa_provenance = "perturbation rule b^-2 kappa with b=" + fmt(bound);
    out.push_back(r);
  }
  return out;
}

CheckResult check_tensor_harmonic(const Measure& first, double kappa_first, const Measure& second,
                                  double kappa_second, const Body& body, const EstimationBudget& budget) {
  if (!body.unconditional()) throw DomainError("tensor rule needs an unconditional body, got " + body.describe());
  if (first.dim() != 1) throw DomainError("tensor rule needs a 1-d first factor");
  const double kappa = 1.0 / (1.0 / kappa_first + 1.0 / kappa_second);
  CheckResult r = check_dilation(Measure::product(first, second), body, kappa, budget);
  r.id = "tensor-harmonic";
  r.kappa_provenance = "harmonic rule (1/" + fmt(kappa_first) + " + 1/" + fmt(kappa_second) + ")^-1";
  return r;
}

CheckResult check_tensor_min(const Measure& first, double kappa_first, const Measure& second, double kappa_second,
                             const QcFunction& f, const EstimationBudget& budget) {
  if (f.smoothness() != Smoothness::C1) throw DomainError("functional tensor rule needs a C1 function");
  if (!f.unconditional()) throw DomainError("functional tensor rule needs an unconditional function");
  const double kappa = std::min(kappa_first, kappa_second);
  CheckResult r = check_entropy_bounds(Measure::product(first, second), f, kappa, EntropyVariant::Master, budget);
  r.id = "tensor-min";
  r.kappa_provenance = "min rule";
  return r;
}

CheckResult explore_tensor_2x2(const Measure& first, double kappa_first, const Measure& second,
                               double kappa_second, int trials, const EstimationBudget& budget) {
  if (first.dim() != 2 || second.dim() != 2) throw DomainError("exploratory tensor mode needs two 2-d factors");
  const Measure m = Measure::product(first, second);
  const double kappa = 1.0 / (1.0 / kappa_first + 1.0 / kappa_second);
  std::mt19937_64 rng(budget.seed);
  std::uniform_real_distribution<double> width(0.2, 2.0);
  double worst = kInf;
  CheckResult best;
  for (int i = 0; i < trials; ++i) {
    Vector half(4);
    for (Index k = 0; k < 4; ++k) half[k] = width(rng);
    CheckResult r = check_dilation(m, Body::box(half), kappa, budget.with_seed(budget.seed + std::uint64_t(i)));
    const double scale = std::max(1e-12, std::abs(r.rhs.value));
    if (r.margin / scale < worst) {
      worst = r.margin / scale;
      best = r;
    }
  }
  best.id = "tensor-2x2-exploratory";
  best.relation = Relation::Report;
  best.status = Status::Inconclusive;
  best.kappa_provenance = "harmonic rule, unproven for two 2-d factors";
  append_note(best.note, "exploratory: smallest relative margin " + fmt(worst) + " over " + std::to_string(trials) +
                             " boxes; asserts nothing");
  return best;
}

std::vector<CheckResult> sharpness_probes(const EstimationBudget& budget, const SharpnessOptions& options) {
  std::vector<CheckResult> out;
  const Measure g1 = Measure::gaussian(1);
  // (a) Gaussian ratio toward 1 as t -> 0.
  std::vector<double> ratios;
  Estimate last_ratio;
  for (double t : options.gaussian_t) {
    const Body k = Body::interval(t);
    const Estimate mu = mass_of_body(g1, k, budget);
    const Estimate lower = dilation_lower_side(mu, 2.0);
    const Estimate area = dilation_area(g1, k, budget);
    CheckResult r = decide("gaussian-dilation-t=" + fmt(t), lower, area);
    out.push_back(with_context(r, 2.0, budget.seed, "K=(-t,t) mu=gamma_1"));
    Estimate ratio = area;
    ratio.value = area.value / lower.value;
    ratio.std_error = ratio.value * std::hypot(area.std_error / area.value, lower.std_error / lower.value);
    ratios.push_back(ratio.value);
    last_ratio = ratio;
  }
  if (!ratios.empty()) {
    double rise = -kInf;
    for (std::size_t i = 1; i < ratios.size(); ++i) rise = std::max(rise, ratios[i] - ratios[i - 1]);
    if (ratios.size() >= 2) {
      CheckResult mono = decide("gaussian-ratio-monotone", exact(rise, "max successive change"), exact(0.0, "zero"));
      std::string seq;
      for (double r : ratios) seq += (seq.empty() ? "" : ",") + fmt(r);
      mono.note = "ratios " + seq;
      out.push_back(with_context(mono, 2.0, budget.seed, "t grid"));
    }
    const double t_min = options.gaussian_t.back();
    CheckResult upper = decide("gaussian-ratio-upper", last_ratio, exact(options.ratio_upper, "bound"));
    upper.note = "t=" + fmt(t_min);
    out.push_back(with_context(upper, 2.0, budget.seed, "t=" + fmt(t_min)));
    CheckResult lower = decide("gaussian-ratio-lower", exact(1.0, "one"), last_ratio);
    lower.note = "t=" + fmt(t_min);
    out.push_back(with_context(lower, 2.0, budget.seed, "t=" + fmt(t_min)));
  }
  // (b) One-sided exponential equality on (0, x).
  const Measure n1 = Measure::one_sided_exponential();
  for (double x : options.one_sided_x) {
    CheckResult r = check_one_sided_probe(n1, x, 1.0, 1e-6, budget);
    r.id = "one-sided-equality-x=" + fmt(x);
    r.kappa_provenance = "log-concave: kappa = 1";
    out.push_back(r);
  }
  // (c) Symmetric exponential equality with kappa = 2.
  const Measure n2 = Measure::symmetric_exponential();
  for (double t : options.exponential_t) {
    const Body k = Body::interval(t);
    const Estimate mu = mass_of_body(n2, k, budget);
    const Estimate lower = dilation_lower_side(mu, 2.0);
    const Estimate area = dilation_area(n2, k, budget);
    Estimate ratio = area;
    ratio.value = area.value / lower.value;
    ratio.std_error = ratio.value * std::hypot(area.std_error / area.value, lower.std_error / lower.value);
    CheckResult r = decide_equal("exponential-ratio-t=" + fmt(t), ratio, exact(1.0, "one"), 1e-8);
    out.push_back(with_context(r, 2.0, budget.seed, "K=(-t,t) mu=nu_2"));
  }
  // (d) Tail of dilates of K: lemma bound and a log-linear envelope.
  const Body k = Body::interval(options.borell_radius);
  const double mu = g1.cdf_1d(options.borell_radius) - g1.cdf_1d(-options.borell_radius);
  std::vector<double> ts, logs;
  for (double t : options.borell_t) {
    const double tail = 2.0 * g1.cdf_1d(-t * options.borell_radius);
    const double bound = std::pow((1.0 - mu) / mu, 0.5 * (t + 1.0)) * mu;
    CheckResult r = decide("borell-lemma-t=" + fmt(t), exact(tail, "cdf"), exact(bound, "lemma"));
    out.push_back(with_context(r, 0.0, budget.seed, "K=" + k.describe() + " mu(K)=" + fmt(mu)));
    if (tail > 0) {
      ts.push_back(t);
      logs.push_back(std::log(tail));
    }
  }
  if (ts.size() >= 2 && mu >= 2.0 / 3.0) {
    const double nt = double(ts.size());
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      st += ts[i];
      sl += logs[i];
      stt += ts[i] * ts[i];
      stl += ts[i] * logs[i];
    }
    const double slope = (nt * stl - st * sl) / (nt * stt - st * st);
    const double intercept = (sl - slope * st) / nt;
    CheckResult fit = decide("borell-fit-slope", exact(slope, "least-squares"), exact(0.0, "zero"));
    fit.note = "tail ~ c exp(-C t) with c=" + fmt(std::exp(intercept)) + " C=" + fmt(-slope);
    out.push_back(with_context(fit, 0.0, budget.seed, "K=" + k.describe()));
  }
  return out;
}

}  // namespace dilatio
