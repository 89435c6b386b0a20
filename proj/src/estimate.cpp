#include "dilatio/estimate.hpp"

#include <algorithm>
#include <cmath>

namespace dilatio {

std::string to_string(Method m) {
  switch (m) {
    case Method::Auto:
      return "auto";
    case Method::Quadrature:
      return "quadrature";
    case Method::MonteCarlo:
      return "monte-carlo";
  }
  return "auto";
}

Method method_from_string(const std::string& s) {
  if (s == "auto") return Method::Auto;
  if (s == "quadrature") return Method::Quadrature;
  if (s == "monte-carlo" || s == "mc") return Method::MonteCarlo;
  throw DomainError("unknown estimation method '" + s + "'");
}

bool EstimationBudget::use_quadrature(Index dim) const {
  switch (method) {
    case Method::Quadrature:
      if (dim > 2) throw UnsupportedError("quadrature requested for dimension " + std::to_string(dim));
      return true;
    case Method::MonteCarlo:
      if (samples == 0) throw DomainError("Monte Carlo budget with zero samples");
      return false;
    case Method::Auto:
      break;
  }
  if (dim <= 2) return true;
  if (samples == 0) throw DomainError("Monte Carlo budget with zero samples");
  return false;
}

EstimationBudget EstimationBudget::scaled(double factor) const {
  EstimationBudget b = *this;
  b.samples = static_cast<std::uint64_t>(std::llround(double(samples) * factor));
  b.nodes = static_cast<int>(std::lround(nodes * factor));
  b.max_intervals = static_cast<int>(std::lround(max_intervals * factor));
  return b;
}

EstimationBudget EstimationBudget::with_seed(std::uint64_t s) const {
  EstimationBudget b = *this;
  b.seed = s;
  return b;
}

Estimate Estimate::exact(double v, std::string tag) {
  Estimate e;
  e.value = v;
  e.std_error = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(v);
  e.method = std::move(tag);
  return e;
}

double MultiEstimate::error(Index i) const { return std::sqrt(std::max(0.0, cov(i, i))); }

Estimate MultiEstimate::component(Index i) const {
  Estimate e;
  e.value = mean[i];
  e.std_error = error(i);
  e.method = method;
  e.samples = samples;
  e.seed = seed;
  e.inconclusive = inconclusive;
  e.note = note;
  return e;
}

Estimate MultiEstimate::combine(double value, const Vector& gradient) const {
  Estimate e = component(0);
  e.value = value;
  const double var = gradient.dot(cov * gradient);
  e.std_error = std::sqrt(std::max(0.0, var));
  if (!std::isfinite(value)) e.inconclusive = true;
  return e;
}

namespace {

std::vector<std::vector<double>> tableau(std::span<const double> values) {
  const std::size_t m = values.size();
  std::vector<std::vector<double>> t(m);
  for (std::size_t k = 0; k < m; ++k) {
    t[k].resize(k + 1);
    t[k][0] = values[k];
    for (std::size_t j = 1; j <= k; ++j) {
      const double f = std::ldexp(1.0, static_cast<int>(j)) - 1.0;
      t[k][j] = t[k][j - 1] + (t[k][j - 1] - t[k - 1][j - 1]) / f;
    }
  }
  return t;
}

}  // namespace

Vector compensated_mean(const std::vector<Vector>& values) {
  if (values.empty()) throw DomainError("compensated_mean: no values");
  const Index n = values.front().size();
  Vector sum = Vector::Zero(n), carry = Vector::Zero(n);
  for (const auto& v : values) {
    for (Index i = 0; i < n; ++i) {
      const double t = sum[i] + v[i];
      carry[i] += std::abs(sum[i]) >= std::abs(v[i]) ? (sum[i] - t) + v[i] : (v[i] - t) + sum[i];
      sum[i] = t;
    }
  }
  return (sum + carry) / double(values.size());
}

Extrapolation richardson_halving(std::span<const double> values) {
  if (values.empty()) throw DomainError("richardson: empty sequence");
  if (values.size() == 1) return {values[0], kInf, false, 0};
  const auto t = tableau(values);
  const auto& last = t.back();
  const auto& prev = t[t.size() - 2];
  std::size_t best = 1;
  double best_err = kInf;
  for (std::size_t j = 1; j < last.size(); ++j) {
    // Agreement with the previous order in the same row and with the same
    // order one row up.
    double err = std::abs(last[j] - last[j - 1]);
    if (j < prev.size()) err = std::max(err, std::abs(last[j] - prev[j]));
    if (err < best_err) {
      best_err = err;
      best = j;
    }
  }
  const double v = last[best];
  const bool ok = std::isfinite(v) && best_err <= 1e-6 * std::max(1.0, std::abs(v));
  return {v, best_err, ok, best};
}

std::vector<double> richardson_weights(std::size_t count, std::size_t order) {
  std::vector<double> w(count, 0.0);
  std::vector<double> unit(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    std::fill(unit.begin(), unit.end(), 0.0);
    unit[i] = 1.0;
    const auto t = tableau(unit);
    w[i] = t.back()[std::min(order, count - 1)];
  }
  return w;
}

}  // namespace dilatio
