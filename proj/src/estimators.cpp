#include "dilatio/estimators.hpp"

#include "dilatio/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace dilatio {

namespace {

Vector unit1(double s) { return Vector::Constant(1, s); }

Vector one(double v) { return Vector::Constant(1, v); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void append_note(Estimate& e, const std::string& note) {
  if (note.empty()) return;
  e.note = e.note.empty() ? note : e.note + "; " + note;
}

/// Inner and outer radius of the shell swept by one ladder step along u.
using OuterRadius = std::function<double(double inner, double eps)>;

struct ShellPlan {
  RadiusFunction inner;
  OuterRadius outer;
  std::vector<double> angular_breaks;
};

// Component k: (1/eps_k) int_{inner}^{outer_k} rho(r u) r^{n-1} dr, each shell
// mapped onto tau in [0, 1] so a single adaptive pass serves the whole ladder.
Vector ray_shells(const Measure& m, const Vector& u, const ShellPlan& plan, std::span<const double> ladder,
                  const quad::Options& opt, bool& converged, double& worst) {
  const Index n = u.size();
  const std::size_t count = ladder.size();
  Vector out = Vector::Zero(static_cast<Index>(count));
  const double extent = m.ray_extent(u);
  if (!(extent > 0)) return out;
  const double inner = std::min(plan.inner(u), extent);
  if (!(inner > 0) || !std::isfinite(inner)) return out;
  Vector width(static_cast<Index>(count));
  bool any = false;
  for (std::size_t k = 0; k < count; ++k) {
    const double hi = std::min(plan.outer(inner, ladder[k]), extent);
    width[k] = std::max(0.0, hi - inner);
    any = any || width[k] > 0;
  }
  if (!any) return out;
  auto g = [&](double tau) -> Vector {
    Vector v(static_cast<Index>(count));
    for (std::size_t k = 0; k < count; ++k) {
      const Index i = static_cast<Index>(k);
      if (width[i] == 0.0) {
        v[i] = 0.0;
        continue;
      }
      const double r = inner + width[i] * tau;
      const double ld = m.log_density(Vector(r * u));
      const double jac = n == 1 ? 1.0 : std::pow(r, double(n - 1));
      v[i] = std::isfinite(ld) ? std::exp(ld) * jac * width[i] / ladder[k] : 0.0;
    }
    return v;
  };
  auto res = quad::adaptive(g, 0.0, 1.0, opt);
  converged = converged && res.converged;
  worst = std::max(worst, res.error);
  return res.value;
}

Vector ray_shells_fixed(const Measure& m, const Vector& u, const ShellPlan& plan, std::span<const double> ladder,
                        const quad::Rule& rule) {
  const Index n = u.size();
  const std::size_t count = ladder.size();
  Vector out = Vector::Zero(static_cast<Index>(count));
  const double extent = m.ray_extent(u);
  if (!(extent > 0)) return out;
  const double inner = std::min(plan.inner(u), extent);
  if (!(inner > 0) || !std::isfinite(inner)) return out;
  for (std::size_t k = 0; k < count; ++k) {
    const double hi = std::min(plan.outer(inner, ladder[k]), extent);
    const double width = std::max(0.0, hi - inner);
    if (width == 0.0) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double r = inner + width * rule.nodes[j];
      const double ld = m.log_density(Vector(r * u));
      if (std::isfinite(ld)) acc += rule.weights[j] * std::exp(ld) * std::pow(r, double(n - 1));
    }
    out[static_cast<Index>(k)] = acc * width / ladder[k];
  }
  return out;
}

MultiEstimate shell_ladder(const Measure& m, const ShellPlan& plan, std::span<const double> ladder,
                           const EstimationBudget& budget) {
  const Index n = m.dim();
  const Index count = static_cast<Index>(ladder.size());
  MultiEstimate out;
  out.seed = budget.seed;
  if (budget.use_quadrature(n)) {
    bool converged = true;
    double worst = 0.0;
    quad::Options inner_opt{budget.abs_tol * 0.05, budget.rel_tol * 0.5, budget.max_intervals};
    Vector total;
    double error;
    if (n == 1) {
      total = ray_shells(m, unit1(1.0), plan, ladder, inner_opt, converged, worst) +
              ray_shells(m, unit1(-1.0), plan, ladder, inner_opt, converged, worst);
      error = 2.0 * worst;
      out.method = "coupled-ladder-quadrature";
    } else {
      std::vector<double> breaks = plan.angular_breaks;
      const auto mb = m.angular_breaks();
      breaks.insert(breaks.end(), mb.begin(), mb.end());
      for (int k = 1; k < 8; ++k) breaks.push_back(0.25 * kPi * k);
      quad::Options outer_opt{budget.abs_tol * 0.5, budget.rel_tol * 0.5, budget.max_intervals};
      auto outer = [&](double theta) {
        Vector u(2);
        u << std::cos(theta), std::sin(theta);
        return ray_shells(m, u, plan, ladder, inner_opt, converged, worst);
      };
      auto res = quad::adaptive_piecewise(outer, 0.0, 2.0 * kPi, breaks, outer_opt);
      converged = converged && res.converged;
      total = res.value;
      error = res.error + 2.0 * kPi * worst;
      out.method = "coupled-ladder-polar-quadrature";
    }
    out.mean = total;
    out.cov = Matrix::Zero(count, count);
    for (Index i = 0; i < count; ++i) {
      const double e = error + kQuadratureFloor * std::abs(total[i]) + 1e-300;
      out.cov(i, i) = e * e;
    }
    if (!converged) {
      out.inconclusive = true;
      out.note = "shell quadrature did not reach tolerance";
    }
    return out;
  }
  // Monte Carlo over directions; each direction integrates its shells exactly enough.
  const quad::Rule rule = quad::gauss_legendre(16, 0.0, 1.0);
  std::mt19937_64 rng(budget.seed);
  const double area = sphere_area(n);
  const std::size_t draws = std::max<std::uint64_t>(2, budget.samples);
  std::vector<Vector> values;
  values.reserve(draws);
  Vector mean = Vector::Zero(count);
  for (std::size_t s = 0; s < draws; ++s) {
    const Vector u = random_direction(n, rng);
    values.push_back(area * ray_shells_fixed(m, u, plan, ladder, rule));
  }
  mean = compensated_mean(values);
  Matrix second = Matrix::Zero(count, count);
  for (const auto& v : values) {
    const Vector d = v - mean;
    second.noalias() += d * d.transpose();
  }
  out.mean = mean;
  out.cov = second / (double(draws) * (double(draws) - 1.0));
  out.samples = draws;
  out.method = "coupled-ladder-monte-carlo";
  return out;
}

// Richardson limit of the quotient ladder with the covariance propagated
// through the extrapolation weights.
Estimate extrapolate_ladder(const MultiEstimate& q, std::span<const double> ladder) {
  const std::size_t count = ladder.size();
  std::vector<double> values(q.mean.data(), q.mean.data() + q.mean.size());
  const bool halving = count >= 3 && std::abs(ladder[1] / ladder[0] - 0.5) < 1e-12;
  Estimate e;
  e.method = q.method;
  e.samples = q.samples;
  e.seed = q.seed;
  e.inconclusive = q.inconclusive;
  e.note = q.note;
  if (!halving) {
    const std::size_t tail = std::min<std::size_t>(3, count);
    double lo = kInf, hi = -kInf;
    for (std::size_t k = count - tail; k < count; ++k) {
      lo = std::min(lo, values[k]);
      hi = std::max(hi, values[k]);
    }
    e.value = lo;
    e.std_error = std::sqrt(q.cov(Index(count - 1), Index(count - 1))) + (hi - lo);
    if (hi - lo > 1e-6 * std::max(1.0, std::abs(lo))) {
      e.inconclusive = true;
      append_note(e, "ladder tail not Cauchy; reporting tail minimum");
    }
    return e;
  }
  const Extrapolation ex = richardson_halving(values);
  const auto w = richardson_weights(count, ex.order);
  const Eigen::Map<const Vector> wv(w.data(), Index(count));
  const double stat = std::sqrt(std::max(0.0, wv.dot(q.cov * wv)));
  e.value = ex.value;
  // Rounding in the shell widths survives the tableau at about 1e-12 relative.
  e.std_error = stat + ex.error + 1e-12 * std::abs(ex.value);
  e.method += "+richardson";
  const bool settled = ex.converged || ex.error <= 3.0 * stat;
  if (!settled) {
    // liminf over the tail of the raw quotients.
    double lo = kInf;
    for (std::size_t k = count >= 3 ? count - 3 : 0; k < count; ++k) lo = std::min(lo, values[k]);
    e.value = lo;
    e.std_error = stat + std::abs(ex.value - lo);
    e.inconclusive = true;
    append_note(e, "quotient ladder not Cauchy; reporting tail minimum");
  }
  return e;
}

double sublevel_extent_radius(const QcFunction& f, const Vector& u, double t, bool closed) {
  return f.level_radius(u, t, closed);
}

}  // namespace

std::vector<double> default_dilation_ladder() {
  std::vector<double> out;
  for (int k = 5; k <= 14; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

IntegrationHints hints_for(const QcFunction& f) {
  IntegrationHints h;
  h.ray_breaks = [f](const Vector& u) { return f.ray_breaks(u); };
  h.angular_breaks = f.angular_breaks();
  return h;
}

Estimate expectation(const QcFunction& f, const Measure& m, const EstimationBudget& budget) {
  if (f.dim() != m.dim()) throw DomainError("expectation: dimension mismatch");
  return integrate(m, [&](const Vector& x) { return one(f(x)); }, 1, budget, hints_for(f)).component(0);
}

Estimate entropy(const QcFunction& f, const Measure& m, const EstimationBudget& budget) {
  if (f.dim() != m.dim()) throw DomainError("entropy: dimension mismatch");
  if (f.min_value() < 0) throw DomainError("entropy: f must be nonnegative");
  auto g = [&](const Vector& x) {
    const double v = f(x);
    Vector out(2);
    out << v, v > 0 ? v * std::log(v) : 0.0;
    return out;
  };
  const MultiEstimate me = integrate(m, g, 2, budget, hints_for(f));
  const double a = me.mean[0], b = me.mean[1];
  if (!(a > 0)) throw DegenerateInputError("entropy: int f dmu = 0");
  Vector grad(2);
  grad << -std::log(a) - 1.0, 1.0;
  Estimate e = me.combine(b - a * std::log(a), grad);
  // Cancellation in b - a log a leaves a rounding floor.
  e.std_error += 1e-14 * (std::abs(b) + std::abs(a * std::log(a)));
  return e;
}

Estimate entropy_dual_lower_bound(const QcFunction& f, const Measure& m, std::span<const Certificate> certificates,
                                  const EstimationBudget& budget) {
  if (certificates.empty()) throw DomainError("entropy_dual_lower_bound: empty certificate list");
  const Index c = static_cast<Index>(certificates.size());
  auto g = [&](const Vector& x) {
    Vector out(1 + 2 * c);
    const double v = f(x);
    out[0] = v;
    for (Index i = 0; i < c; ++i) {
      const double phi = certificates[std::size_t(i)](x);
      out[1 + i] = v * phi;
      out[1 + c + i] = std::exp(phi);
    }
    return out;
  };
  const MultiEstimate me = integrate(m, g, 1 + 2 * c, budget, hints_for(f));
  const double a = me.mean[0];
  if (!(a > 0)) throw DegenerateInputError("entropy_dual_lower_bound: int f dmu = 0");
  Estimate best;
  best.value = -kInf;
  for (Index i = 0; i < c; ++i) {
    const double fphi = me.mean[1 + i], z = me.mean[1 + c + i];
    const double v = fphi / a - std::log(z);
    if (v > best.value) {
      Vector grad = Vector::Zero(1 + 2 * c);
      grad[0] = -fphi / (a * a);
      grad[1 + i] = 1.0 / a;
      grad[1 + c + i] = -1.0 / z;
      best = me.combine(v, grad);
      best.note = "certificate " + std::to_string(i);
    }
  }
  return best;
}

Estimate fisher_information(const QcFunction& f, const Measure& m, const EstimationBudget& budget) {
  if (f.dim() != m.dim()) throw DomainError("fisher_information: dimension mismatch");
  bool singular = false;
  auto g = [&](const Vector& x) {
    const GradientEval ge = f.eval_and_grad(x);
    const double g2 = ge.gradient->squaredNorm();
    if (ge.value <= 0) {
      if (g2 > 0) singular = true;
      return one(0.0);
    }
    return one(g2 / ge.value);
  };
  Estimate e = integrate(m, g, 1, budget, hints_for(f)).component(0);
  if (singular) {
    e.inconclusive = true;
    append_note(e, "f vanishes where its gradient does not");
  }
  return e;
}

Estimate lp_norm(const QcFunction& f, const Measure& m, double p, const EstimationBudget& budget) {
  if (p == 0 || !std::isfinite(p)) throw DomainError("lp_norm: p must be a nonzero finite real");
  if (f.dim() != m.dim()) throw DomainError("lp_norm: dimension mismatch");
  if (p < 0 && !(f.min_value() > 0)) throw DomainError("lp_norm: negative exponent needs f > 0");
  if (f.kind() == FunctionKind::Constant) return Estimate::exact(f.parameter(0), "constant");
  auto g = [&](const Vector& x) {
    const double v = f(x);
    return one(v > 0 ? std::pow(v, p) : 0.0);
  };
  const MultiEstimate me = integrate(m, g, 1, budget, hints_for(f));
  const double i = me.mean[0];
  const double v = std::pow(i, 1.0 / p);
  return me.combine(v, one(v / (p * i)));
}

OrliczResult orlicz_norm(const QcFunction& f, const Measure& m, double alpha, const EstimationBudget& budget) {
  if (!(alpha >= 1)) throw DomainError("orlicz_norm: alpha must be at least 1");
  OrliczResult out;
  IntegrationHints hints = hints_for(f);
  hints.log_space = true;
  auto excess = [&](double t) -> Estimate {
    auto g = [&](const Vector& x) { return one(std::pow(std::abs(f(x)) / t, alpha)); };
    Estimate e = integrate(m, g, 1, budget, hints).component(0);
    e.value -= 2.0;
    return e;
  };
  // Directions along which the log-integrand is tested for growth at large radii.
  std::vector<Vector> directions;
  for (Index i = 0; i < m.dim(); ++i) directions.push_back(Vector::Unit(m.dim(), i));
  if (m.dim() >= 2) directions.push_back(Vector::Ones(m.dim()).normalized());
  auto tail_diverges = [&](double t) {
    for (const auto& u : directions) {
      for (const Vector& dir : {u, Vector(-u)}) {
        if (std::isfinite(m.ray_extent(dir))) continue;
        auto tail = [&](double r) {
          const Vector x = r * dir;
          return std::pow(std::abs(f(x)) / t, alpha) + m.log_density(x);
        };
        const double near = tail(80.0), far = tail(160.0);
        if (far > -700.0 && far >= near - 1e-12) return true;
        // A power of f outgrowing the log-density diverges for every t.
        auto rate = [&](double r) {
          const Vector x = r * dir;
          return alpha * std::log(std::abs(f(x))) - std::log(std::max(-m.log_density(x), 1e-300));
        };
        const double r1 = rate(1e6), r2 = rate(1e12);
        if (std::isfinite(r1) && std::isfinite(r2) && r2 - r1 > 1.0) return true;
      }
    }
    return false;
  };
  auto too_small = [&](const Estimate& e) { return e.inconclusive || !std::isfinite(e.value) || e.value > 0; };

  std::vector<double> grid;
  for (double k : {1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0}) grid.push_back(alpha * k);
  out.sup_form.value = -kInf;
  for (double p : grid) {
    Estimate e = lp_norm(f, m, p, budget);
    const double scale = std::pow(p, -1.0 / alpha);
    if (e.value * scale > out.sup_form.value) {
      out.sup_form = e;
      out.sup_form.value *= scale;
      out.sup_form.std_error *= scale;
      out.sup_at = p;
    }
  }
  append_note(out.sup_form, "sup over p-grid alpha*{1..16}; attained at p=" + fmt(out.sup_at));

  const double start = lp_norm(f, m, alpha, budget).value;
  if (!(start > 0)) {
    out.norm = Estimate::exact(0.0, "orlicz-zero");
    return out;
  }
  double hi = start;
  int guard = 0;
  while (tail_diverges(hi) || too_small(excess(hi))) {
    hi *= 2.0;
    if (++guard > 60) {
      out.infinite = true;
      out.norm = Estimate::exact(kInf, "orlicz-divergent");
      out.norm.inconclusive = true;
      out.norm.note = "exponential integral diverges for every tested t";
      return out;
    }
  }
  double lo = hi * 0.5;
  guard = 0;
  while (!tail_diverges(lo) && !too_small(excess(lo))) {
    hi = lo;
    lo *= 0.5;
    if (++guard > 200) break;
  }
  for (int it = 0; it < 200 && hi / lo - 1.0 > 1e-13; ++it) {
    const double mid = std::sqrt(lo * hi);
    (tail_diverges(mid) || too_small(excess(mid)) ? lo : hi) = mid;
  }
  const double t = std::sqrt(lo * hi);
  const Estimate at = excess(t);
  const double h = 1e-4 * t;
  const double slope = std::abs(excess(t + h).value - excess(t - h).value) / (2.0 * h);
  out.norm.value = t;
  out.norm.std_error = (hi - lo) + (slope > 0 ? (at.std_error + std::abs(at.value)) / slope : 0.0);
  out.norm.method = "orlicz-bisection/" + at.method;
  out.norm.samples = at.samples;
  out.norm.seed = at.seed;
  out.norm.inconclusive = at.inconclusive;
  return out;
}

Estimate level_mass(const QcFunction& f, const Measure& m, double t, bool closed, const EstimationBudget& budget) {
  if (f.dim() != m.dim()) throw DomainError("level_mass: dimension mismatch");
  if (m.dim() == 1 && budget.method != Method::MonteCarlo) {
    const double rp = f.level_radius(unit1(1.0), t, closed);
    const double rm = f.level_radius(unit1(-1.0), t, closed);
    const double hi = std::isinf(rp) ? 1.0 : m.cdf_1d(rp);
    const double lo = std::isinf(rm) ? 0.0 : m.cdf_1d(-rm);
    Estimate e = Estimate::exact(std::max(0.0, hi - lo), "cdf");
    e.std_error = std::max(e.std_error, 1e-15);
    return e;
  }
  if (!closed) {
    if (auto body = f.level_body(t)) return mass_of_body(m, *body, budget);
  }
  IntegrationHints hints;
  hints.ray_breaks = [&](const Vector& u) {
    std::vector<double> b = f.ray_breaks(u);
    const double r = f.level_radius(u, t, closed);
    if (std::isfinite(r)) b.push_back(r);
    return b;
  };
  hints.angular_breaks = f.angular_breaks();
  auto indicator = [&](const Vector& x) {
    const double v = f(x);
    return one((closed ? v <= t : v < t) ? 1.0 : 0.0);
  };
  return integrate(m, indicator, 1, budget, hints).component(0);
}

Estimate levy_mean(const QcFunction& f, const Measure& m, const EstimationBudget& budget) {
  if (f.dim() != m.dim()) throw DomainError("levy_mean: dimension mismatch");
  if (f.kind() == FunctionKind::Constant) return Estimate::exact(f.parameter(0), "constant");
  if (m.dim() == 1 || budget.use_quadrature(m.dim())) {
    auto at_least_half = [&](double t) { return level_mass(f, m, t, true, budget).value >= 0.5; };
    const double base = f.min_value();
    if (at_least_half(base)) return Estimate::exact(base, "pushforward-quantile");
    double lo = base, hi = base + 1.0;
    while (!at_least_half(hi)) {
      lo = hi;
      hi = base + 2.0 * (hi - base);
      if (hi > 1e300) throw DomainError("levy_mean: no median found");
    }
    for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (at_least_half(mid) ? hi : lo) = mid;
    }
    Estimate e = Estimate::exact(hi, "pushforward-quantile");
    e.std_error = std::max(hi - lo, 1e-14 * std::abs(hi));
    return e;
  }
  const std::vector<Vector> xs = m.sample(budget.samples, budget.seed);
  std::vector<double> v;
  v.reserve(xs.size());
  for (const auto& x : xs) v.push_back(f(x));
  std::sort(v.begin(), v.end());
  const std::size_t count = v.size();
  const std::size_t mid = (count - 1) / 2;
  // Order-statistic interval of one standard deviation around the median rank.
  const std::size_t spread = static_cast<std::size_t>(std::ceil(0.5 * std::sqrt(double(count))));
  const double lo = v[mid >= spread ? mid - spread : 0];
  const double hi = v[std::min(count - 1, mid + spread)];
  Estimate e;
  e.value = v[mid];
  e.std_error = 0.5 * (hi - lo);
  e.method = "sample-median";
  e.samples = count;
  e.seed = budget.seed;
  return e;
}

Estimate dilation_area_rays(const Measure& m, const RadiusFunction& radius, const std::vector<double>& angular_breaks,
                            std::span<const double> ladder, const EstimationBudget& budget) {
  if (ladder.empty()) throw DomainError("dilation_area: empty ladder");
  for (double e : ladder)
    if (!(e > 0 && e < 1)) throw DomainError("dilation_area: ladder values must lie in (0, 1)");
  ShellPlan plan{radius, [](double r, double eps) { return r * (1.0 + eps) / (1.0 - eps); }, angular_breaks};
  return extrapolate_ladder(shell_ladder(m, plan, ladder, budget), ladder);
}

Estimate dilation_area(const Measure& m, const Body& body, std::span<const double> ladder,
                       const EstimationBudget& budget) {
  if (body.dim() != m.dim()) throw DomainError("dilation_area: dimension mismatch");
  if (!body.convex()) throw DomainError("dilation_area: body must be convex");
  auto radius = [&](const Vector& u) { return ray_radius(body, u); };
  return dilation_area_rays(m, radius, corner_angles(body), ladder, budget);
}

Estimate dilation_area(const Measure& m, const Body& body, const EstimationBudget& budget) {
  const auto ladder = default_dilation_ladder();
  return dilation_area(m, body, ladder, budget);
}

Estimate one_sided_interval_dilation_area(const Measure& m, double x, const EstimationBudget& budget) {
  if (m.dim() != 1 || m.ray_extent(unit1(-1.0)) != 0.0)
    throw UnsupportedError("one-sided dilation: measure must live on (0, inf)");
  if (!(x > 0)) throw DomainError("one-sided dilation: x must be positive");
  const auto ladder = default_dilation_ladder();
  ShellPlan plan{[x](const Vector& u) { return u[0] > 0 ? x : 0.0; },
                 [](double r, double eps) { return r / (1.0 - eps); },
                 {}};
  EstimationBudget b = budget;
  b.method = Method::Quadrature;
  Estimate e = extrapolate_ladder(shell_ladder(m, plan, ladder, b), ladder);
  e.method = "one-sided-" + e.method;
  return e;
}

Estimate perimeter(const Measure& m, const Body& body, std::span<const double> ladder,
                   const EstimationBudget& budget) {
  if (body.dim() != m.dim()) throw DomainError("perimeter: dimension mismatch");
  if (body.dim() == 1 || body.kind() == BodyKind::Ball) {
    ShellPlan plan{[&](const Vector& u) { return ray_radius(body, u); },
                   [](double r, double eps) { return r + eps; },
                   {}};
    Estimate e = extrapolate_ladder(shell_ladder(m, plan, ladder, budget), ladder);
    e.method = "neighbourhood-" + e.method;
    return e;
  }
  if (!body.bounded()) throw UnsupportedError("perimeter: unbounded body");
  const int res = std::max(16, budget.nodes);
  auto sum = [&](int resolution) {
    double acc = 0.0;
    for (const auto& el : boundary_quadrature(body, resolution)) acc += el.weight * m.density(el.point);
    return acc;
  };
  const double fine = sum(res), coarse = sum(res / 2);
  Estimate e;
  e.value = fine;
  e.std_error = std::abs(fine - coarse) + kQuadratureFloor * std::abs(fine);
  e.method = "boundary-quadrature";
  e.samples = static_cast<std::uint64_t>(res);
  e.seed = budget.seed;
  return e;
}

Estimate perimeter(const Measure& m, const Body& body, const EstimationBudget& budget) {
  const auto ladder = default_dilation_ladder();
  return perimeter(m, body, ladder, budget);
}

Estimate surface_moment_integral(const Measure& m, const Body& body, double p_prime, int resolution) {
  if (body.dim() != m.dim()) throw DomainError("surface_moment_integral: dimension mismatch");
  if (!body.bounded()) throw UnsupportedError("surface_moment_integral: unbounded body");
  auto sum = [&](int res) {
    double acc = 0.0;
    for (const auto& el : boundary_quadrature(body, res)) {
      const double r = el.point.norm();
      acc += el.weight * el.point.dot(el.normal) * std::pow(r, p_prime) * m.density(el.point);
    }
    return acc;
  };
  const double fine = sum(resolution);
  Estimate e;
  e.value = fine;
  e.method = "boundary-quadrature";
  e.samples = static_cast<std::uint64_t>(resolution);
  if (body.dim() == 1) {
    e.std_error = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(fine);
    e.method = "endpoint-atoms";
  } else {
    e.std_error = std::abs(fine - sum(std::max(4, resolution / 2))) + kQuadratureFloor * std::abs(fine);
  }
  return e;
}

Estimate w2_distance(const Measure& first, const Measure& second, const EstimationBudget& budget) {
  if (first.dim() != second.dim()) throw DomainError("w2_distance: dimension mismatch");
  if (first.kind() == MeasureKind::Gaussian && second.kind() == MeasureKind::Gaussian) {
    const double v = std::sqrt(double(first.dim())) * std::abs(first.gaussian_sigma() - second.gaussian_sigma());
    return Estimate::exact(v, "gaussian-closed-form");
  }
  if (first.dim() != 1) throw UnsupportedError("w2_distance: non-Gaussian measures in dimension > 1");
  auto g = [&](double u) {
    const double d = first.quantile_1d(u) - second.quantile_1d(u);
    return d * d;
  };
  quad::Options opt{budget.abs_tol, budget.rel_tol, budget.max_intervals};
  const std::vector<double> half{0.5};
  auto res = quad::adaptive_piecewise(g, 0.0, 1.0, half, opt);
  const double w2 = std::max(0.0, res.value);
  const double v = std::sqrt(w2);
  Estimate e;
  e.value = v;
  const double err = res.error + kQuadratureFloor * w2;
  e.std_error = v > 0 ? err / (2.0 * v) : std::sqrt(err);
  e.method = "quantile-coupling";
  e.samples = static_cast<std::uint64_t>(res.evaluations);
  e.seed = budget.seed;
  e.inconclusive = !res.converged;
  if (!res.converged) e.note = "quantile integral did not reach tolerance";
  return e;
}

CoareaResult coarea_integral(const Measure& m, const QcFunction& f, double p, CoareaSign sign,
                             const EstimationBudget& budget) {
  if (f.dim() != m.dim()) throw DomainError("coarea_integral: dimension mismatch");
  if (!(p > 0)) throw DomainError("coarea_integral: p must be positive");
  const double base = f.min_value();
  if (sign == CoareaSign::Negative && !(base > 0)) throw DomainError("coarea_integral: negative sign needs f > 0");
  if (base < 0) throw DomainError("coarea_integral: f must be nonnegative");
  CoareaResult out;

  // Upper level: mu({f < t_max}) > 1 - 1e-12.
  double t_max = base + 1.0;
  for (int it = 0; it < 200 && level_mass(f, m, t_max, false, budget).value <= 1.0 - 1e-12; ++it)
    t_max = base + 2.0 * (t_max - base);
  out.t_max = t_max;

  std::vector<double> pts{base};
  for (double v : f.value_breaks())
    if (v > base && v < t_max) pts.push_back(v);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.push_back(t_max);

  const auto ladder = default_dilation_ladder();
  const auto angular = f.angular_breaks();
  std::size_t flagged = 0;
  auto weight = [&](double t) { return sign == CoareaSign::Positive ? std::pow(t, p - 1.0) : std::pow(t, -p - 1.0); };
  auto level_area = [&](double t) {
    auto radius = [&](const Vector& u) { return sublevel_extent_radius(f, u, t, false); };
    Estimate e = dilation_area_rays(m, radius, angular, ladder, budget);
    if (e.inconclusive) ++flagged;
    return e;
  };
  auto gl_sum = [&](int nodes, double& stat) {
    double acc = 0.0;
    stat = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const quad::Rule rule = quad::gauss_legendre(nodes, pts[i], pts[i + 1]);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double t = rule.nodes[j];
        const Estimate a = level_area(t);
        const double w = rule.weights[j] * weight(t);
        acc += w * a.value;
        stat += std::abs(w) * a.std_error;
      }
    }
    return acc;
  };
  double stat_fine = 0.0, stat_coarse = 0.0;
  const std::size_t before = flagged;
  const double fine = gl_sum(256, stat_fine);
  const std::size_t fine_flags = flagged - before;
  const double coarse = gl_sum(128, stat_coarse);
  out.lhs.value = fine;
  out.lhs.std_error = std::abs(fine - coarse) + stat_fine;
  out.lhs.method = "gauss-legendre-256-levels";
  out.lhs.samples = 256 * (pts.size() - 1);
  out.lhs.seed = budget.seed;
  if (fine_flags > 0) {
    out.lhs.inconclusive = true;
    out.lhs.note = std::to_string(fine_flags) + " levels with unsettled dilation ladders";
  }

  auto g = [&](const Vector& x) {
    const double v = f(x);
    const double phi = phi_value(f, x);
    if (phi == 0.0) return one(0.0);
    return one(phi * weight(v));
  };
  out.rhs = integrate(m, g, 1, budget, hints_for(f)).component(0);
  return out;
}

Estimate sup_phi_ratio(const QcFunction& f, const Measure& m, std::uint64_t seed) {
  if (f.dim() != m.dim()) throw DomainError("sup_phi_ratio: dimension mismatch");
  const Index n = m.dim();
  double best = 0.0;
  Vector arg = Vector::Zero(n);
  auto visit = [&](const Vector& x) {
    const double v = f(x);
    const double phi = phi_value(f, x);
    double ratio;
    if (v > 0) {
      ratio = phi / v;
    } else {
      if (phi <= 0) return;
      ratio = kInf;
    }
    if (ratio > best) {
      best = ratio;
      arg = x;
    }
  };
  for (const auto& x : m.sample(100000, seed)) visit(x);
  std::vector<Vector> dirs;
  for (Index i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (n >= 2) {
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    for (int k = 0; k < 64; ++k) dirs.push_back(random_direction(n, rng));
  }
  const int steps = 400;
  for (const auto& u : dirs) {
    const double extent = m.ray_extent(u);
    if (!(extent > 0)) continue;
    const double top = std::min(1e4, extent * (1.0 - 1e-12));
    const double bottom = std::min(1e-3, 0.5 * top);
    for (int k = 0; k <= steps; ++k) {
      const double r = bottom * std::pow(top / bottom, double(k) / steps);
      visit(Vector(r * u));
    }
  }
  Estimate e;
  e.value = best;
  e.method = "sampled-supremum";
  e.samples = 100000;
  e.seed = seed;
  char buf[160];
  std::snprintf(buf, sizeof buf, "lower bound of the essential sup; attained near |x|=%.4g", arg.norm());
  e.note = buf;
  return e;
}

}  // namespace dilatio
