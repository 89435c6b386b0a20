#include "dilatio/functions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace dilatio {

struct QcFunction::Node {
  FunctionKind kind;
  Index n = 1;
  double a = 0.0;  // exponent / level / scale / sigma / value
  double b = 0.0;  // offset / shift
  std::optional<Body> body;
  std::optional<QcFunction> child;
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  Smoothness smooth = Smoothness::Continuous;
  bool is_convex = false;
  std::string name;
};

std::string to_string(Smoothness s) {
  switch (s) {
    case Smoothness::C1:
      return "C1";
    case Smoothness::Lipschitz:
      return "locally-Lipschitz";
    case Smoothness::Continuous:
      return "continuous";
  }
  return "continuous";
}

namespace {

using Node = QcFunction::Node;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Smoothness weaker(Smoothness a, Smoothness b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

bool smooth_body(const Body& k) {
  switch (k.kind()) {
    case BodyKind::Ball:
    case BodyKind::Ellipsoid:
      return true;
    case BodyKind::LpBall:
      return k.exponent() > 1.0;
    case BodyKind::Scaled:
      return smooth_body(k.children().front());
    default:
      return k.dim() == 1;
  }
}

std::shared_ptr<Node> make(FunctionKind kind, Index n) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->n = n;
  return node;
}

}  // namespace

QcFunction QcFunction::constant(Index dim, double value) {
  auto node = make(FunctionKind::Constant, dim);
  node->a = value;
  return QcFunction(node);
}

QcFunction QcFunction::radial(Index dim, double p) {
  if (!(p > 0)) throw ConstructionError("radial: exponent must be positive");
  auto node = make(FunctionKind::Radial, dim);
  node->a = p;
  return QcFunction(node);
}

QcFunction QcFunction::gauge_power(const Body& body, double p) {
  if (!(p > 0)) throw ConstructionError("gauge-power: exponent must be positive");
  auto node = make(FunctionKind::GaugePower, body.dim());
  node->a = p;
  node->body = body;
  return QcFunction(node);
}

QcFunction QcFunction::shifted_radial(Index dim, double offset, double s) {
  if (!(offset > 0)) throw ConstructionError("shifted-radial: offset must be positive");
  if (!(s > 0)) throw ConstructionError("shifted-radial: exponent must be positive");
  auto node = make(FunctionKind::ShiftedRadial, dim);
  node->a = s;
  node->b = offset;
  return QcFunction(node);
}

QcFunction QcFunction::min_cap(const QcFunction& f, double level) {
  auto node = make(FunctionKind::MinCap, f.dim());
  node->a = level;
  node->child = f;
  return QcFunction(node);
}

QcFunction QcFunction::max_floor(const QcFunction& f, double level) {
  auto node = make(FunctionKind::MaxFloor, f.dim());
  node->a = level;
  node->child = f;
  return QcFunction(node);
}

QcFunction QcFunction::f_sigma(const Body& body, double sigma) {
  if (!(sigma > 0 && sigma < 1)) throw ConstructionError("f-sigma: sigma must lie in (0, 1)");
  auto node = make(FunctionKind::FSigma, body.dim());
  node->a = sigma;
  node->body = body;
  return QcFunction(node);
}

QcFunction QcFunction::gaussian_ratio(Index dim, double sigma) {
  if (!(sigma > 0)) throw ConstructionError("gaussian-ratio: sigma must be positive");
  auto node = make(FunctionKind::GaussianRatio, dim);
  node->a = sigma;
  return QcFunction(node);
}

QcFunction QcFunction::affine(const QcFunction& f, double scale, double shift) {
  if (!(scale > 0)) throw ConstructionError("affine: scale must be positive");
  auto node = make(FunctionKind::Affine, f.dim());
  node->a = scale;
  node->b = shift;
  node->child = f;
  return QcFunction(node);
}

QcFunction QcFunction::power(const QcFunction& f, double q) {
  if (!(q > 0)) throw ConstructionError("power: exponent must be positive");
  if (f.min_value() < 0) throw ConstructionError("power: base must be nonnegative");
  auto node = make(FunctionKind::Power, f.dim());
  node->a = q;
  node->child = f;
  return QcFunction(node);
}

QcFunction QcFunction::custom(Index dim, std::function<double(const Vector&)> eval,
                              std::function<Vector(const Vector&)> gradient, Smoothness smoothness, bool is_convex,
                              std::string name) {
  if (!eval) throw ConstructionError("custom: evaluation callback required");
  auto node = make(FunctionKind::Custom, dim);
  node->eval = std::move(eval);
  node->grad = std::move(gradient);
  node->smooth = smoothness;
  node->is_convex = is_convex;
  node->name = std::move(name);
  return QcFunction(node);
}

FunctionKind QcFunction::kind() const { return node_->kind; }
Index QcFunction::dim() const { return node_->n; }
const QcFunction& QcFunction::inner() const {
  if (!node_->child) throw UnsupportedError("inner: function has no inner function");
  return *node_->child;
}
double QcFunction::parameter(int index) const { return index == 0 ? node_->a : node_->b; }
const Body& QcFunction::body() const {
  if (!node_->body) throw UnsupportedError("body: function has no body");
  return *node_->body;
}

std::string QcFunction::describe() const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
      return "constant(" + fmt(d.a) + ")";
    case FunctionKind::Radial:
      return "|x|^" + fmt(d.a);
    case FunctionKind::GaugePower:
      return "gauge[" + d.body->describe() + "]^" + fmt(d.a);
    case FunctionKind::ShiftedRadial:
      return "(|x|^2+" + fmt(d.b) + ")^" + fmt(d.a);
    case FunctionKind::MinCap:
      return "min(" + d.child->describe() + ", " + fmt(d.a) + ")";
    case FunctionKind::MaxFloor:
      return "max(" + d.child->describe() + ", " + fmt(d.a) + ")";
    case FunctionKind::FSigma:
      return "f_sigma[" + d.body->describe() + ", " + fmt(d.a) + "]";
    case FunctionKind::GaussianRatio:
      return "gaussian-ratio(sigma=" + fmt(d.a) + ")";
    case FunctionKind::Affine:
      return fmt(d.a) + "*" + d.child->describe() + "+" + fmt(d.b);
    case FunctionKind::Power:
      return "(" + d.child->describe() + ")^" + fmt(d.a);
    case FunctionKind::Custom:
      return d.name;
  }
  return "function";
}

double QcFunction::operator()(const Vector& x) const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
      return d.a;
    case FunctionKind::Radial:
      return d.a == 2.0 ? x.squaredNorm() : std::pow(x.norm(), d.a);
    case FunctionKind::GaugePower: {
      const double g = gauge(*d.body, x);
      return d.a == 1.0 ? g : std::pow(g, d.a);
    }
    case FunctionKind::ShiftedRadial:
      return std::pow(x.squaredNorm() + d.b, d.a);
    case FunctionKind::MinCap:
      return std::min((*d.child)(x), d.a);
    case FunctionKind::MaxFloor:
      return std::max((*d.child)(x), d.a);
    case FunctionKind::FSigma: {
      const double sigma = d.a;
      const double g = gauge(*d.body, x);
      const double outer = (1.0 + sigma) / (1.0 - sigma);
      const double delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
      if (g < 1.0) return 0.0;
      if (g <= outer) return (g - 1.0) / delta;
      return 1.0 - sigma;
    }
    case FunctionKind::GaussianRatio: {
      const double s = d.a;
      const double a = 1.0 - 1.0 / (s * s);
      return std::exp(0.5 * a * x.squaredNorm() - double(d.n) * std::log(s));
    }
    case FunctionKind::Affine:
      return d.a * (*d.child)(x) + d.b;
    case FunctionKind::Power:
      return std::pow((*d.child)(x), d.a);
    case FunctionKind::Custom:
      return d.eval(x);
  }
  return 0.0;
}

std::optional<Vector> QcFunction::analytic_gradient(const Vector& x) const {
  const Node& d = *node_;
  const Index n = x.size();
  switch (d.kind) {
    case FunctionKind::Constant:
      return Vector::Zero(n);
    case FunctionKind::Radial: {
      const double r = x.norm();
      if (r == 0.0) {
        if (d.a >= 1.0) return Vector::Zero(n);
        return std::nullopt;
      }
      return Vector(d.a * std::pow(r, d.a - 2.0) * x);
    }
    case FunctionKind::GaugePower: {
      const double g = gauge(*d.body, x);
      if (g == 0.0) {
        if (d.a >= 1.0) return Vector::Zero(n);
        return std::nullopt;
      }
      return Vector(d.a * std::pow(g, d.a - 1.0) * gauge_gradient(*d.body, x));
    }
    case FunctionKind::ShiftedRadial:
      return Vector(2.0 * d.a * std::pow(x.squaredNorm() + d.b, d.a - 1.0) * x);
    case FunctionKind::MinCap: {
      if ((*d.child)(x) >= d.a) return Vector::Zero(n);
      return d.child->analytic_gradient(x);
    }
    case FunctionKind::MaxFloor: {
      if ((*d.child)(x) <= d.a) return Vector::Zero(n);
      return d.child->analytic_gradient(x);
    }
    case FunctionKind::FSigma: {
      const double sigma = d.a;
      const double g = gauge(*d.body, x);
      const double outer = (1.0 + sigma) / (1.0 - sigma);
      const double delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
      if (g < 1.0 || g > outer) return Vector::Zero(n);
      return Vector(gauge_gradient(*d.body, x) / delta);
    }
    case FunctionKind::GaussianRatio: {
      const double a = 1.0 - 1.0 / (d.a * d.a);
      return Vector(a * (*this)(x) * x);
    }
    case FunctionKind::Affine: {
      auto g = d.child->analytic_gradient(x);
      if (!g) return std::nullopt;
      return Vector(d.a * *g);
    }
    case FunctionKind::Power: {
      const double v = (*d.child)(x);
      if (v == 0.0) {
        if (d.a > 1.0) return Vector::Zero(n);
        return std::nullopt;
      }
      auto g = d.child->analytic_gradient(x);
      if (!g) return std::nullopt;
      return Vector(d.a * std::pow(v, d.a - 1.0) * *g);
    }
    case FunctionKind::Custom:
      if (d.grad) return d.grad(x);
      return std::nullopt;
  }
  return std::nullopt;
}

GradientEval QcFunction::eval_and_grad(const Vector& x) const {
  GradientEval out{(*this)(x), analytic_gradient(x), false};
  if (out.gradient) return out;
  const Index n = x.size();
  const double h = std::max(1e-6, 1e-6 * x.norm());
  Vector g(n);
  for (Index i = 0; i < n; ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp = (*this)(xp), fm = (*this)(xm), f0 = out.value;
    g[i] = (fp - fm) / (2.0 * h);
    if (smoothness() == Smoothness::C1) {
      const double right = (fp - f0) / h, left = (f0 - fm) / h;
      if (std::abs(right - left) > 1e-3 * (1.0 + std::abs(g[i])))
        throw ConsistencyError(describe() + " claims C1 but has a kink at the evaluation point");
    }
  }
  out.gradient = g;
  out.numeric = true;
  return out;
}

std::optional<double> QcFunction::analytic_phi(const Vector& x) const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
      return 0.0;
    case FunctionKind::Radial:
    case FunctionKind::GaugePower:
      return 2.0 * d.a * (*this)(x);
    case FunctionKind::ShiftedRadial: {
      const double r2 = x.squaredNorm();
      return 4.0 * d.a * r2 * std::pow(r2 + d.b, d.a - 1.0);
    }
    case FunctionKind::MinCap: {
      if ((*d.child)(x) > d.a) return 0.0;
      return d.child->analytic_phi(x);
    }
    case FunctionKind::MaxFloor: {
      if ((*d.child)(x) <= d.a) return 0.0;
      return d.child->analytic_phi(x);
    }
    case FunctionKind::FSigma: {
      const double sigma = d.a;
      const double g = gauge(*d.body, x);
      const double outer = (1.0 + sigma) / (1.0 - sigma);
      const double delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
      return (g > 1.0 && g <= outer) ? 2.0 * g / delta : 0.0;
    }
    case FunctionKind::GaussianRatio: {
      const double a = 1.0 - 1.0 / (d.a * d.a);
      return 2.0 * a * x.squaredNorm() * (*this)(x);
    }
    case FunctionKind::Affine: {
      auto p = d.child->analytic_phi(x);
      if (!p) return std::nullopt;
      return d.a * *p;
    }
    case FunctionKind::Power: {
      const double v = (*d.child)(x);
      if (v == 0.0) return 0.0;
      auto p = d.child->analytic_phi(x);
      if (!p) return std::nullopt;
      return d.a * std::pow(v, d.a - 1.0) * *p;
    }
    case FunctionKind::Custom:
      if (d.grad && d.smooth == Smoothness::C1) return 2.0 * x.dot(d.grad(x));
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> QcFunction::subgradient_pairing(const Vector& x) const {
  if (!convex()) return std::nullopt;
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
      return 0.0;
    case FunctionKind::Radial:
    case FunctionKind::GaugePower:
      // Euler's relation holds for every subgradient of a p-homogeneous convex function.
      return d.a * (*this)(x);
    case FunctionKind::ShiftedRadial:
    case FunctionKind::GaussianRatio:
      return x.dot(*analytic_gradient(x));
    case FunctionKind::MaxFloor: {
      if ((*d.child)(x) <= d.a) return 0.0;
      return d.child->subgradient_pairing(x);
    }
    case FunctionKind::Affine: {
      auto p = d.child->subgradient_pairing(x);
      if (!p) return std::nullopt;
      return d.a * *p;
    }
    case FunctionKind::Power: {
      const double v = (*d.child)(x);
      if (v == 0.0) return 0.0;
      auto p = d.child->subgradient_pairing(x);
      if (!p) return std::nullopt;
      return d.a * std::pow(v, d.a - 1.0) * *p;
    }
    case FunctionKind::Custom:
      if (d.grad) return x.dot(d.grad(x));
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

Smoothness QcFunction::smoothness() const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
    case FunctionKind::ShiftedRadial:
    case FunctionKind::GaussianRatio:
      return Smoothness::C1;
    case FunctionKind::Radial:
      return d.a > 1.0 ? Smoothness::C1 : (d.a == 1.0 ? Smoothness::Lipschitz : Smoothness::Continuous);
    case FunctionKind::GaugePower:
      if (d.a < 1.0) return Smoothness::Continuous;
      if (d.a > 1.0 && smooth_body(*d.body)) return Smoothness::C1;
      return Smoothness::Lipschitz;
    case FunctionKind::MinCap:
    case FunctionKind::MaxFloor:
      return weaker(d.child->smoothness(), Smoothness::Lipschitz);
    case FunctionKind::FSigma:
      return Smoothness::Lipschitz;
    case FunctionKind::Affine:
      return d.child->smoothness();
    case FunctionKind::Power: {
      const Smoothness base = d.child->smoothness();
      if (d.a >= 1.0 || d.child->min_value() > 0.0) return base;
      return Smoothness::Continuous;
    }
    case FunctionKind::Custom:
      return d.smooth;
  }
  return Smoothness::Continuous;
}

bool QcFunction::convex() const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
      return true;
    case FunctionKind::Radial:
      return d.a >= 1.0;
    case FunctionKind::GaugePower:
      return d.a >= 1.0 && d.body->convex();
    case FunctionKind::ShiftedRadial:
      return d.a >= 0.5;
    case FunctionKind::GaussianRatio:
      return d.a >= 1.0;
    case FunctionKind::MaxFloor:
    case FunctionKind::Affine:
      return d.child->convex();
    case FunctionKind::Power:
      return d.a >= 1.0 && d.child->convex();
    case FunctionKind::Custom:
      return d.is_convex;
    default:
      return false;
  }
}

bool QcFunction::claims_quasi_convex() const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::GaugePower:
    case FunctionKind::FSigma:
      return d.body->convex();
    case FunctionKind::GaussianRatio:
      return d.a >= 1.0;
    case FunctionKind::MinCap:
    case FunctionKind::MaxFloor:
    case FunctionKind::Affine:
    case FunctionKind::Power:
      return d.child->claims_quasi_convex();
    default:
      return true;
  }
}

bool QcFunction::unconditional() const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::GaugePower:
    case FunctionKind::FSigma:
      return d.body->unconditional();
    case FunctionKind::MinCap:
    case FunctionKind::MaxFloor:
    case FunctionKind::Affine:
    case FunctionKind::Power:
      return d.child->unconditional();
    case FunctionKind::Custom:
      return false;
    default:
      return true;
  }
}

double QcFunction::min_value() const { return (*this)(Vector::Zero(dim())); }

std::vector<double> QcFunction::ray_breaks(const Vector& u) const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::MinCap:
    case FunctionKind::MaxFloor: {
      std::vector<double> out = d.child->ray_breaks(u);
      const double r = d.child->level_radius(u, d.a, true);
      if (std::isfinite(r) && r > 0) out.push_back(r);
      return out;
    }
    case FunctionKind::FSigma: {
      const double sigma = d.a;
      const double rho = ray_radius(*d.body, u);
      return {rho, rho * (1.0 + sigma) / (1.0 - sigma)};
    }
    case FunctionKind::Affine:
    case FunctionKind::Power:
      return d.child->ray_breaks(u);
    default:
      return {};
  }
}

std::vector<double> QcFunction::angular_breaks() const {
  const Node& d = *node_;
  if (d.body) return corner_angles(*d.body);
  if (d.child) return d.child->angular_breaks();
  return {};
}

std::vector<double> QcFunction::value_breaks() const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Constant:
      return {d.a};
    case FunctionKind::MinCap:
    case FunctionKind::MaxFloor: {
      auto out = d.child->value_breaks();
      out.push_back(d.a);
      return out;
    }
    case FunctionKind::FSigma:
      return {0.0, 1.0 - d.a};
    case FunctionKind::Affine: {
      auto out = d.child->value_breaks();
      for (double& v : out) v = d.a * v + d.b;
      return out;
    }
    case FunctionKind::Power: {
      auto out = d.child->value_breaks();
      for (double& v : out) v = v > 0 ? std::pow(v, d.a) : v;
      return out;
    }
    default:
      return {};
  }
}

double QcFunction::level_radius(const Vector& u, double t, bool closed) const {
  const Node& d = *node_;
  auto below = [&](double v) { return closed ? v <= t : v < t; };
  switch (d.kind) {
    case FunctionKind::Constant:
      return below(d.a) ? kInf : 0.0;
    case FunctionKind::Radial:
      return t > 0 ? std::pow(t, 1.0 / d.a) : (closed && t == 0 ? 0.0 : 0.0);
    case FunctionKind::GaugePower: {
      if (t <= 0) return 0.0;
      const double g = gauge(*d.body, u);
      return g > 0 ? std::pow(t, 1.0 / d.a) / g : kInf;
    }
    case FunctionKind::ShiftedRadial: {
      if (t <= 0) return 0.0;
      const double r2 = std::pow(t, 1.0 / d.a) - d.b;
      return r2 > 0 ? std::sqrt(r2) : 0.0;
    }
    case FunctionKind::MinCap:
      if (below(d.a)) return kInf;
      return d.child->level_radius(u, t, closed);
    case FunctionKind::MaxFloor:
      if (!below(d.a)) return 0.0;
      return d.child->level_radius(u, t, closed);
    case FunctionKind::FSigma: {
      const double sigma = d.a;
      const double delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
      if (!below(0.0)) return 0.0;
      if (below(1.0 - sigma)) return kInf;
      return (1.0 + delta * t) * ray_radius(*d.body, u);
    }
    case FunctionKind::GaussianRatio: {
      const double a = 1.0 - 1.0 / (d.a * d.a);
      if (a > 0) {
        const double rhs = 2.0 * (std::log(t) + double(d.n) * std::log(d.a)) / a;
        if (!(t > 0) || rhs <= 0) return 0.0;
        return std::sqrt(rhs);
      }
      if (a == 0) return below(1.0) ? kInf : 0.0;
      break;
    }
    case FunctionKind::Affine:
      return d.child->level_radius(u, (t - d.b) / d.a, closed);
    case FunctionKind::Power:
      if (t <= 0) return closed && t == 0 ? d.child->level_radius(u, 0.0, true) : 0.0;
      return d.child->level_radius(u, std::pow(t, 1.0 / d.a), closed);
    default:
      break;
  }
  // Bisection along the ray; valid because f(r u) is nondecreasing in r.
  auto at = [&](double r) { return (*this)(Vector(r * u)); };
  if (!below(at(0.0))) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (below(at(hi))) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return kInf;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (below(at(mid)) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<Body> QcFunction::level_body(double t) const {
  const Node& d = *node_;
  switch (d.kind) {
    case FunctionKind::Radial:
      if (t <= 0) return std::nullopt;
      return Body::ball(d.n, std::pow(t, 1.0 / d.a));
    case FunctionKind::GaugePower:
      if (t <= 0) return std::nullopt;
      return Body::scaled(*d.body, std::pow(t, 1.0 / d.a));
    case FunctionKind::ShiftedRadial: {
      const double r2 = t > 0 ? std::pow(t, 1.0 / d.a) - d.b : -1.0;
      if (r2 <= 0) return std::nullopt;
      return Body::ball(d.n, std::sqrt(r2));
    }
    case FunctionKind::FSigma: {
      const double sigma = d.a;
      const double delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
      if (t <= 0 || t > 1.0 - sigma) return std::nullopt;
      return Body::scaled(*d.body, 1.0 + delta * t);
    }
    case FunctionKind::Affine:
      return d.child->level_body((t - d.b) / d.a);
    case FunctionKind::Power:
      if (t <= 0) return std::nullopt;
      return d.child->level_body(std::pow(t, 1.0 / d.a));
    default:
      return std::nullopt;
  }
}

std::vector<double> default_phi_ladder() {
  std::vector<double> out;
  for (int k = 4; k <= 20; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

std::vector<double> phi_quotients(const QcFunction& f, const Vector& x, std::span<const double> ladder) {
  const double fx = f(x);
  std::vector<double> q;
  q.reserve(ladder.size());
  for (double eps : ladder) {
    if (!(eps > 0 && eps < 1)) throw DomainError("phi: ladder values must lie in (0, 1)");
    const double lambda = (1.0 - eps) / (1.0 + eps);
    q.push_back((fx - f(Vector(lambda * x))) / eps);
  }
  return q;
}

Estimate phi_ladder(const QcFunction& f, const Vector& x, std::span<const double> ladder) {
  if (ladder.empty()) throw DomainError("phi: empty ladder");
  const std::vector<double> q = phi_quotients(f, x, ladder);
  const double fx = f(x);
  const double tol = 1e-7 * (1.0 + std::abs(fx));
  for (std::size_t k = 0; k < q.size(); ++k)
    if (q[k] < -tol) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "negative dilation quotient %.3e at eps=%.3e", q[k], ladder[k]);
      throw QuasiConvexityViolation(f.describe() + ": " + buf);
    }
  const std::size_t tail = std::min<std::size_t>(8, q.size());
  double tail_max = -kInf, tail_min = kInf;
  for (std::size_t k = q.size() - tail; k < q.size(); ++k) {
    tail_max = std::max(tail_max, q[k]);
    tail_min = std::min(tail_min, q[k]);
  }
  Estimate e;
  e.method = "phi-ladder";
  e.samples = q.size();
  const bool halving = ladder.size() >= 3 && std::abs(ladder[1] / ladder[0] - 0.5) < 1e-12;
  const double last_step = q.size() >= 2 ? std::abs(q.back() - q[q.size() - 2]) : kInf;
  const bool cauchy = last_step < 1e-6 * (1.0 + std::abs(q.back()));
  const Extrapolation ex = halving ? richardson_halving(q) : Extrapolation{0.0, kInf, false, 0};
  if (ex.converged) {
    e.value = std::max(0.0, ex.value);
    e.std_error = std::max(ex.error, 1e-12 * (1.0 + std::abs(ex.value)));
    e.method = "phi-ladder-richardson";
  } else {
    e.value = std::max(0.0, tail_max);
    e.std_error = tail_max - tail_min;
    e.inconclusive = !cauchy;
    if (!cauchy) e.note = "ladder tail not Cauchy; reporting tail maximum";
  }
  return e;
}

Estimate phi(const QcFunction& f, const Vector& x, std::span<const double> ladder) {
  const Estimate numeric = phi_ladder(f, x, ladder);
  if (auto exact = f.analytic_phi(x)) {
    Estimate e = Estimate::exact(*exact, "analytic");
    char buf[96];
    std::snprintf(buf, sizeof buf, "ladder %.12g", numeric.value);
    e.note = buf;
    e.samples = numeric.samples;
    return e;
  }
  return numeric;
}

Estimate phi(const QcFunction& f, const Vector& x) {
  const auto ladder = default_phi_ladder();
  return phi(f, x, ladder);
}

double phi_value(const QcFunction& f, const Vector& x) {
  if (auto exact = f.analytic_phi(x)) return *exact;
  static const std::vector<double> ladder = default_phi_ladder();
  return phi_ladder(f, x, ladder).value;
}

namespace {

std::string vec_str(const Vector& v) {
  std::string s = "(";
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s + ")";
}

}  // namespace

AuditReport quasiconvexity_audit(const QcFunction& f, const std::optional<Body>& domain, std::size_t trials,
                                 std::uint64_t seed) {
  if (trials < 1) throw DomainError("audit: trials must be at least 1");
  const Index n = f.dim();
  AuditReport rep;
  rep.trials = trials;
  rep.seed = seed;
  std::mt19937_64 rng(seed);
  const double box = domain ? radii(*domain).outer : 3.0;
  std::uniform_real_distribution<double> coord(-box, box), unit(0.0, 1.0);
  auto draw = [&]() {
    while (true) {
      Vector x(n);
      for (Index i = 0; i < n; ++i) x[i] = coord(rng);
      if (!domain || gauge(*domain, x) < 1.0) return x;
    }
  };
  auto record = [&](std::string w) {
    if (rep.witnesses.size() < 8) rep.witnesses.push_back(std::move(w));
  };
  const bool smooth = f.smoothness() == Smoothness::C1;
  for (std::size_t k = 0; k < trials; ++k) {
    const Vector x = draw(), y = draw();
    const double t = unit(rng);
    const double fx = f(x), fy = f(y);
    const Vector z = (1.0 - t) * x + t * y;
    const double fz = f(z);
    if (fz > std::max(fx, fy) + 1e-9) {
      rep.segment_pass = false;
      record("segment x=" + vec_str(x) + " y=" + vec_str(y) + " t=" + fmt(t) + " f(z)=" + fmt(fz) +
             " max=" + fmt(std::max(fx, fy)));
    }
    if (std::abs(fx - f(Vector(-x))) > 1e-12 * (1.0 + std::abs(fx))) {
      rep.symmetry_pass = false;
      record("symmetry x=" + vec_str(x));
    }
    if (smooth) {
      const Vector& hi = fx >= fy ? x : y;
      const Vector& lo = fx >= fy ? y : x;
      const GradientEval ge = f.eval_and_grad(hi);
      const double ip = (hi - lo).dot(*ge.gradient);
      if (ip < -1e-9 * (1.0 + ge.gradient->norm() * (hi - lo).norm())) {
        rep.gradient_pass = false;
        record("gradient x=" + vec_str(hi) + " y=" + vec_str(lo) + " <x-y,grad f(x)>=" + fmt(ip));
      }
    }
  }
  if (n == 1) {
    // Nonincreasing then nondecreasing on a fine grid.
    const int grid = 4001;
    double prev = f(Vector::Constant(1, -box));
    bool rising = false;
    for (int i = 1; i < grid; ++i) {
      const double xi = -box + 2.0 * box * i / (grid - 1);
      const double v = f(Vector::Constant(1, xi));
      if (v > prev + 1e-12 * (1.0 + std::abs(prev))) rising = true;
      if (rising && v < prev - 1e-9) {
        rep.monotone_split_pass = false;
        record("monotone split broken near x=" + fmt(xi));
        break;
      }
      prev = v;
    }
  }
  rep.pass = rep.segment_pass && rep.symmetry_pass && rep.gradient_pass && rep.monotone_split_pass;
  return rep;
}

AuditReport qc_membership_check(const QcFunction& f, const Measure& m, double eps0,
                                const std::function<double(const Vector&)>& bound, std::size_t samples,
                                std::uint64_t seed) {
  if (!(eps0 > 0 && eps0 <= 1)) throw DomainError("qc_membership_check: eps0 must lie in (0, 1]");
  if (f.dim() != m.dim()) throw DomainError("qc_membership_check: dimension mismatch");
  AuditReport rep;
  rep.trials = samples;
  rep.seed = seed;
  std::vector<double> ladder;
  for (int k = 0; k <= 16; ++k) {
    const double e = eps0 * std::ldexp(1.0, -k);
    if (e < 1.0) ladder.push_back(e);
  }
  const std::vector<Vector> xs = m.sample(samples, seed);
  double bound_mean = 0.0;
  const bool lipschitz = f.smoothness() != Smoothness::Continuous;
  for (const auto& x : xs) {
    const double g = bound(x);
    bound_mean += g;
    const auto q = phi_quotients(f, x, ladder);
    const double worst = *std::max_element(q.begin(), q.end());
    const double tol = 1e-9 * (1.0 + std::abs(g));
    if (worst > g + tol) {
      rep.domination_pass = false;
      if (rep.witnesses.size() < 8)
        rep.witnesses.push_back("x=" + vec_str(x) + " quotient=" + fmt(worst) + " > g=" + fmt(g));
    }
    if (lipschitz) {
      auto grad = f.analytic_gradient(x);
      if (grad) {
        const double p = phi_value(f, x);
        if (p > 2.0 * x.norm() * grad->norm() * (1.0 + 1e-9) + 1e-12) {
          rep.gradient_pass = false;
          if (rep.witnesses.size() < 8) rep.witnesses.push_back("Phi > 2|x||grad f| at x=" + vec_str(x));
        }
      }
    }
  }
  bound_mean /= double(xs.size());
  rep.note = "sample mean of g = " + fmt(bound_mean);
  if (!std::isfinite(bound_mean)) rep.domination_pass = false;
  rep.pass = rep.domination_pass && rep.gradient_pass;
  return rep;
}

}  // namespace dilatio
