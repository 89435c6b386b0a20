#pragma once

// Adaptive Gauss-Kronrod (7/15) integration with a global error heap, plus
// fixed Gauss-Legendre rules. The value type may be a scalar or an Eigen
// vector; vector integrands are refined on their max-norm error.

#include "dilatio/types.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace dilatio::quad {

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

template <typename T>
struct Result {
  T value;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

template <typename X, typename = void>
struct plain {
  using type = X;
};
template <typename X>
struct plain<X, std::void_t<typename X::PlainObject>> {
  using type = typename X::PlainObject;
};
/// Value type of an integrand, with Eigen expressions evaluated.
template <typename F>
using value_t = typename plain<std::decay_t<std::invoke_result_t<F&, double>>>::type;

inline double magnitude(double v) { return std::abs(v); }

template <typename Derived>
double magnitude(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.template lpNorm<Eigen::Infinity>();
}

inline bool all_finite(double v) { return std::isfinite(v); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

// Gauss-Kronrod 7-15 abscissae and weights on [-1, 1].
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename F>
auto gk15(F& f, double a, double b, int& evals) {
  using T = detail::value_t<F>;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T fc = f(c);
  T kron = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    T f1 = f(c - dx);
    T f2 = f(c + dx);
    kron = kron + (f1 + f2) * kWgk[j];
    if (j % 2 == 1) gauss = gauss + (f1 + f2) * kWg[j / 2];
  }
  evals += 15;
  T k = kron * h;
  T g = gauss * h;
  double err = magnitude(k - g);
  if (!all_finite(k)) err = kInf;
  return std::pair<T, double>{k, err};
}

}  // namespace detail

/// Integrates f over the finite interval [a, b].
template <typename F>
auto adaptive(F&& f, double a, double b, const Options& opt = {}) {
  using T = detail::value_t<F>;
  using detail::Segment;
  Result<T> out{};
  int evals = 0;
  if (a == b) {
    T z = T(f(a)) * 0.0;
    return Result<T>{z, 0.0, 1, true};
  }
  auto [v0, e0] = detail::gk15(f, a, b, evals);
  std::priority_queue<Segment<T>> heap;
  heap.push({a, b, v0, e0});
  T total = v0;
  double total_err = e0;
  int intervals = 1;
  while (true) {
    const double target = std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
    if (total_err <= target || !std::isfinite(total_err)) break;
    if (intervals >= opt.max_intervals) break;
    Segment<T> s = heap.top();
    heap.pop();
    const double m = 0.5 * (s.a + s.b);
    if (m <= s.a || m >= s.b) {  // interval exhausted in floating point
      heap.push({s.a, s.b, s.value, 0.0});
      total_err -= s.error;
      continue;
    }
    auto [vl, el] = detail::gk15(f, s.a, m, evals);
    auto [vr, er] = detail::gk15(f, m, s.b, evals);
    total = total - s.value + vl + vr;
    total_err += el + er - s.error;
    heap.push({s.a, m, vl, el});
    heap.push({m, s.b, vr, er});
    ++intervals;
  }
  // Recompute the total from the leaves to shed accumulated rounding.
  T sum = heap.top().value * 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum = sum + heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.evaluations = evals;
  const double target = std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(sum));
  out.converged = std::isfinite(err) && detail::all_finite(sum) && err <= 10.0 * target;
  return out;
}

/// Integrates f over [a, inf) through x = a + tan(t), t in [0, pi/2).
template <typename F>
auto adaptive_half_line(F&& f, double a, const Options& opt = {}) {
  auto g = [&](double t) {
    const double tn = std::tan(t);
    const double x = a + tn;
    detail::value_t<F> v = f(x);
    return detail::value_t<F>(v * (1.0 + tn * tn));
  };
  return adaptive(g, 0.0, 0.5 * kPi, opt);
}

/// Integrates over [a, b] (b may be +inf) split at the given interior points.
template <typename F>
auto adaptive_piecewise(F&& f, double a, double b, std::span<const double> breaks,
                        const Options& opt = {}) {
  std::vector<double> pts{a};
  for (double p : breaks)
    if (p > a && p < b && std::isfinite(p)) pts.push_back(p);
  std::sort(pts.begin() + 1, pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.push_back(b);
  using T = detail::value_t<F>;
  Result<T> total{};
  bool first = true;
  Options piece = opt;
  piece.abs_tol = opt.abs_tol / static_cast<double>(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Result<T> r = std::isinf(pts[i + 1]) ? adaptive_half_line(f, pts[i], piece)
                                         : adaptive(f, pts[i], pts[i + 1], piece);
    if (first) {
      total = r;
      first = false;
    } else {
      total.value = total.value + r.value;
      total.error += r.error;
      total.evaluations += r.evaluations;
      total.converged = total.converged && r.converged;
    }
  }
  return total;
}

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with n nodes on [a, b] (Newton iteration on P_n).
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

}  // namespace dilatio::quad
