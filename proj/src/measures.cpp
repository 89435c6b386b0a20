#include "dilatio/measures.hpp"

#include "dilatio/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dilatio {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

Vector unit1(double s) {
  Vector u(1);
  u << s;
  return u;
}

// Safeguarded Newton/bisection for cdf(x) = u.
double invert_cdf(const std::function<double(double)>& cdf, const std::function<double(double)>& pdf,
                  double u, double lo_limit, double hi_limit) {
  double lo = std::max(lo_limit, -1.0);
  double hi = std::min(hi_limit, 1.0);
  if (lo >= hi) lo = lo_limit, hi = hi_limit;
  while (cdf(lo) > u && std::isfinite(lo_limit) == false) lo = 2.0 * lo - 1.0;
  while (cdf(lo) > u && lo > lo_limit) lo = 0.5 * (lo + lo_limit);
  while (cdf(hi) < u && std::isfinite(hi_limit) == false) hi = 2.0 * hi + 1.0;
  while (cdf(hi) < u && hi < hi_limit) hi = 0.5 * (hi + hi_limit);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = cdf(x) - u;
    if (fx == 0.0) return x;
    (fx < 0 ? lo : hi) = x;
    const double d = pdf(x);
    double next = d > 0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

// Cumulative table of a 1-d density for cdf evaluation and fast inversion.
class CdfTable {
 public:
  CdfTable() = default;
  CdfTable(std::function<double(double)> pdf, double lo_limit, double hi_limit)
      : pdf_(std::move(pdf)), lo_limit_(lo_limit), hi_limit_(hi_limit) {
    quad::Options opt{1e-16, 1e-13, 2000};
    auto tail_right = [&](double x) { return quad::adaptive_half_line(pdf_, x, opt).value; };
    auto tail_left = [&](double x) {
      return quad::adaptive_half_line([&](double t) { return pdf_(-t); }, -x, opt).value;
    };
    a_ = lo_limit_;
    b_ = hi_limit_;
    if (!std::isfinite(b_)) {
      b_ = 1.0;
      while (tail_right(b_) > 1e-17 && b_ < 1e6) b_ *= 2.0;
    }
    if (!std::isfinite(a_)) {
      a_ = -1.0;
      while (tail_left(a_) > 1e-17 && a_ > -1e6) a_ *= 2.0;
    }
    left_mass_ = std::isfinite(lo_limit_) ? 0.0 : tail_left(a_);
    const int cells = 1024;
    nodes_.resize(cells + 1);
    cum_.resize(cells + 1);
    cum_[0] = left_mass_;
    for (int i = 0; i <= cells; ++i) nodes_[i] = a_ + (b_ - a_) * double(i) / cells;
    for (int i = 0; i < cells; ++i) cum_[i + 1] = cum_[i] + quad::adaptive(pdf_, nodes_[i], nodes_[i + 1], opt).value;
  }

  double total() const { return cum_.back() + (std::isfinite(hi_limit_) ? 0.0 : right_tail(b_)); }

  double cdf(double x) const {
    if (x <= lo_limit_) return 0.0;
    if (x >= hi_limit_) return 1.0;
    quad::Options opt{1e-16, 1e-13, 2000};
    if (x < a_) return quad::adaptive_half_line([&](double t) { return pdf_(-t); }, -x, opt).value;
    if (x >= b_) return 1.0 - right_tail(x);
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const std::size_t i = std::max<std::ptrdiff_t>(0, (it - nodes_.begin()) - 1);
    return std::min(1.0, cum_[i] + quad::adaptive(pdf_, nodes_[i], x, opt).value);
  }

  // Approximate inverse for sampling: cell lookup then Newton on a 5-point rule.
  double fast_quantile(double u) const {
    if (u <= cum_.front() || u >= cum_.back()) return invert_cdf([&](double x) { return cdf(x); }, pdf_, u,
                                                                  lo_limit_, hi_limit_);
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const std::size_t i = std::max<std::ptrdiff_t>(0, (it - cum_.begin()) - 1);
    const double x0 = nodes_[i];
    const double x1 = nodes_[std::min(i + 1, nodes_.size() - 1)];
    const double target = u - cum_[i];
    const quad::Rule ref = quad::gauss_legendre(5);
    auto partial = [&](double x) {
      double s = 0.0;
      const double h = 0.5 * (x - x0), c = 0.5 * (x + x0);
      for (int k = 0; k < 5; ++k) s += ref.weights[k] * pdf_(c + h * ref.nodes[k]);
      return s * h;
    };
    double lo = x0, hi = x1;
    double x = x0 + (x1 - x0) * target / std::max(cum_[i + 1] - cum_[i], 1e-300);
    for (int k = 0; k < 40; ++k) {
      const double fx = partial(x) - target;
      (fx < 0 ? lo : hi) = x;
      const double d = pdf_(x);
      double next = d > 0 ? x - fx / d : 0.5 * (lo + hi);
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) < 1e-14 * (1.0 + std::abs(x))) return next;
      x = next;
    }
    return x;
  }

 private:
  double right_tail(double x) const {
    quad::Options opt{1e-16, 1e-13, 2000};
    return quad::adaptive_half_line(pdf_, x, opt).value;
  }

  std::function<double(double)> pdf_;
  double lo_limit_ = -kInf, hi_limit_ = kInf;
  double a_ = 0, b_ = 0, left_mass_ = 0;
  std::vector<double> nodes_, cum_;
};

}  // namespace

struct Measure::Impl {
  virtual ~Impl() = default;
  virtual MeasureKind kind() const = 0;
  virtual Index dim() const = 0;
  virtual std::string describe() const = 0;
  virtual double log_density(const Vector& x) const = 0;
  virtual double ray_extent(const Vector& u) const = 0;
  virtual std::vector<double> angular_breaks() const { return {}; }
  virtual const Body* support() const { return nullptr; }
  virtual bool symmetric() const { return true; }
  virtual bool log_concave() const = 0;
  virtual KappaClaim kappa() const = 0;
  virtual void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const = 0;
  virtual double cdf(double x) const {
    (void)x;
    throw UnsupportedError("cdf: measure is not one-dimensional");
  }
  virtual double quantile(double u) const {
    if (dim() != 1) throw UnsupportedError("quantile_1d: measure is not one-dimensional");
    auto pdf = [&](double x) { return std::exp(log_density(unit1(x))); };
    return invert_cdf([&](double x) { return cdf(x); }, pdf, u, -ray_extent(unit1(-1.0)), ray_extent(unit1(1.0)));
  }
  virtual double sigma() const { throw UnsupportedError("gaussian_sigma: not a Gaussian measure"); }
  virtual const Measure& factor(int) const { throw UnsupportedError("factor: not a product measure"); }
  virtual const Measure& base() const { throw UnsupportedError("base: not a perturbed measure"); }
  virtual double perturbation(const Vector&) const { return 1.0; }
  virtual double perturbation_bound() const { return 1.0; }
};

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct GaussianImpl final : Measure::Impl {
  Index n;
  double s;
  GaussianImpl(Index dim, double sigma) : n(dim), s(sigma) {}
  MeasureKind kind() const override { return MeasureKind::Gaussian; }
  Index dim() const override { return n; }
  std::string describe() const override {
    return "gaussian(n=" + std::to_string(n) + (s == 1.0 ? "" : ", sigma=" + fmt(s)) + ")";
  }
  double log_density(const Vector& x) const override {
    return -0.5 * x.squaredNorm() / (s * s) - double(n) * (kLogSqrt2Pi + std::log(s));
  }
  double ray_extent(const Vector&) const override { return kInf; }
  bool log_concave() const override { return true; }
  KappaClaim kappa() const override { return {2.0, "gaussian: kappa = 2 (dilation inequality is scale invariant)"}; }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    std::normal_distribution<double> normal(0.0, s);
    for (std::size_t k = 0; k < count; ++k) {
      Vector x(n);
      for (Index i = 0; i < n; ++i) x[i] = normal(rng);
      out.push_back(std::move(x));
    }
  }
  double cdf(double x) const override {
    if (n != 1) return Impl::cdf(x);
    return 0.5 * std::erfc(-x / (s * std::sqrt(2.0)));
  }
  double sigma() const override { return s; }
};

struct OneSidedImpl final : Measure::Impl {
  MeasureKind kind() const override { return MeasureKind::OneSidedExponential; }
  Index dim() const override { return 1; }
  std::string describe() const override { return "one-sided-exponential"; }
  double log_density(const Vector& x) const override { return x[0] > 0 ? -x[0] : -kInf; }
  double ray_extent(const Vector& u) const override { return u[0] > 0 ? kInf : 0.0; }
  bool symmetric() const override { return false; }
  bool log_concave() const override { return true; }
  KappaClaim kappa() const override { return {1.0, "log-concave: kappa = 1"}; }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    std::exponential_distribution<double> e(1.0);
    for (std::size_t k = 0; k < count; ++k) out.push_back(unit1(e(rng)));
  }
  double cdf(double x) const override { return x <= 0 ? 0.0 : -std::expm1(-x); }
  double quantile(double u) const override {
    if (!(u > 0 && u < 1)) throw DomainError("quantile_1d: u must lie in (0, 1)");
    return -std::log1p(-u);
  }
};

struct SymExpImpl final : Measure::Impl {
  MeasureKind kind() const override { return MeasureKind::SymmetricExponential; }
  Index dim() const override { return 1; }
  std::string describe() const override { return "symmetric-exponential"; }
  double log_density(const Vector& x) const override { return -std::abs(x[0]) - std::log(2.0); }
  double ray_extent(const Vector&) const override { return kInf; }
  bool log_concave() const override { return true; }
  KappaClaim kappa() const override { return {2.0, "symmetric 1-d log-concave: kappa = 2"}; }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    std::exponential_distribution<double> e(1.0);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t k = 0; k < count; ++k) {
      const double v = e(rng);
      out.push_back(unit1(coin(rng) ? v : -v));
    }
  }
  double cdf(double x) const override { return x < 0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x); }
  double quantile(double u) const override {
    if (!(u > 0 && u < 1)) throw DomainError("quantile_1d: u must lie in (0, 1)");
    return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
  }
};

struct UniformImpl final : Measure::Impl {
  Body body;
  double log_vol;
  double outer;
  UniformImpl(const Body& b) : body(b) {
    if (!b.bounded()) throw ConstructionError("uniform: support must be bounded");
    log_vol = std::log(volume(b));
    outer = radii(b).outer;
  }
  MeasureKind kind() const override { return MeasureKind::Uniform; }
  Index dim() const override { return body.dim(); }
  std::string describe() const override { return "uniform(" + body.describe() + ")"; }
  double log_density(const Vector& x) const override { return gauge(body, x) < 1.0 ? -log_vol : -kInf; }
  double ray_extent(const Vector& u) const override { return ray_radius(body, u); }
  std::vector<double> angular_breaks() const override { return corner_angles(body); }
  const Body* support() const override { return &body; }
  bool log_concave() const override { return body.convex(); }
  KappaClaim kappa() const override {
    if (!body.convex()) return {};
    if (body.dim() == 1) return {2.0, "symmetric 1-d log-concave: kappa = 2"};
    return {1.0, "log-concave: kappa = 1"};
  }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    const Index n = body.dim();
    std::uniform_real_distribution<double> unif(-outer, outer);
    std::size_t tries = 0, accepted = 0;
    while (accepted < count) {
      Vector x(n);
      for (Index i = 0; i < n; ++i) x[i] = unif(rng);
      ++tries;
      if (gauge(body, x) < 1.0) {
        out.push_back(std::move(x));
        ++accepted;
      }
      if (tries >= 10000 && double(accepted) < 1e-4 * double(tries))
        throw SamplingError("uniform: rejection acceptance rate below 1e-4");
    }
  }
  double cdf(double x) const override {
    if (body.dim() != 1) return Impl::cdf(x);
    const double r = 1.0 / gauge(body, unit1(1.0));
    return std::clamp((x + r) / (2.0 * r), 0.0, 1.0);
  }
  double quantile(double u) const override {
    if (body.dim() != 1) return Impl::quantile(u);
    if (!(u > 0 && u < 1)) throw DomainError("quantile_1d: u must lie in (0, 1)");
    const double r = 1.0 / gauge(body, unit1(1.0));
    return r * (2.0 * u - 1.0);
  }
};

struct Custom1dImpl final : Measure::Impl {
  std::function<double(double)> potential;
  double half;
  bool sym, lc;
  std::string name;
  double log_norm = 0.0;
  CdfTable table;
  Custom1dImpl(std::function<double(double)> phi, double half_width, bool symmetric, bool log_concave,
               std::string label)
      : potential(std::move(phi)), half(half_width), sym(symmetric), lc(log_concave), name(std::move(label)) {
    if (!(half > 0)) throw ConstructionError("custom: half width must be positive");
    auto raw = [&](double x) { return std::exp(-potential(x)); };
    quad::Options opt{1e-15, 1e-13, 4000};
    const std::vector<double> split{0.0};
    double z = 0.0;
    if (std::isfinite(half)) {
      z = quad::adaptive_piecewise(raw, -half, half, split, opt).value;
    } else {
      z = quad::adaptive_half_line(raw, 0.0, opt).value +
          quad::adaptive_half_line([&](double t) { return raw(-t); }, 0.0, opt).value;
    }
    if (!(z > 0) || !std::isfinite(z)) throw ConstructionError("custom: density is not normalisable");
    log_norm = std::log(z);
    table = CdfTable([this](double x) { return std::exp(log_density(unit1(x))); }, -half, half);
  }
  MeasureKind kind() const override { return MeasureKind::Custom1d; }
  Index dim() const override { return 1; }
  std::string describe() const override { return name; }
  double log_density(const Vector& x) const override {
    return std::abs(x[0]) < half ? -potential(x[0]) - log_norm : -kInf;
  }
  double ray_extent(const Vector&) const override { return half; }
  bool symmetric() const override { return sym; }
  bool log_concave() const override { return lc; }
  KappaClaim kappa() const override {
    if (lc && sym) return {2.0, "symmetric 1-d log-concave: kappa = 2"};
    if (lc) return {1.0, "log-concave: kappa = 1"};
    return {};
  }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t k = 0; k < count; ++k) {
      double u = unif(rng);
      while (u == 0.0) u = unif(rng);
      out.push_back(unit1(table.fast_quantile(u)));
    }
  }
  double cdf(double x) const override { return table.cdf(x); }
};

struct ProductImpl final : Measure::Impl {
  Measure a, b;
  ProductImpl(Measure first, Measure second) : a(std::move(first)), b(std::move(second)) {}
  MeasureKind kind() const override { return MeasureKind::Product; }
  Index dim() const override { return a.dim() + b.dim(); }
  std::string describe() const override { return a.describe() + " x " + b.describe(); }
  double log_density(const Vector& x) const override {
    const double la = a.log_density(x.head(a.dim()));
    if (!std::isfinite(la)) return -kInf;
    return la + b.log_density(x.tail(b.dim()));
  }
  double ray_extent(const Vector& u) const override {
    double ext = kInf;
    for (int side = 0; side < 2; ++side) {
      const Measure& m = side == 0 ? a : b;
      const Vector part = side == 0 ? Vector(u.head(a.dim())) : Vector(u.tail(b.dim()));
      const double len = part.norm();
      if (len == 0.0) {
        if (m.ray_extent(Vector::Unit(m.dim(), 0)) <= 0.0 && m.ray_extent(-Vector::Unit(m.dim(), 0)) <= 0.0)
          return 0.0;
        continue;
      }
      ext = std::min(ext, m.ray_extent(part / len) / len);
    }
    return ext;
  }
  std::vector<double> angular_breaks() const override {
    if (dim() != 2) return {};
    std::vector<double> out{0.0, 0.5 * kPi, kPi, 1.5 * kPi};
    const double ea = a.ray_extent(unit1(1.0)), eb = b.ray_extent(unit1(1.0));
    if (std::isfinite(ea) && std::isfinite(eb))
      for (double sx : {1.0, -1.0})
        for (double sy : {1.0, -1.0}) {
          double t = std::atan2(sy * eb, sx * ea);
          out.push_back(t < 0 ? t + 2.0 * kPi : t);
        }
    std::sort(out.begin(), out.end());
    return out;
  }
  bool symmetric() const override { return a.symmetric() && b.symmetric(); }
  bool log_concave() const override { return a.log_concave() && b.log_concave(); }
  KappaClaim kappa() const override {
    if (a.kind() == MeasureKind::Gaussian && b.kind() == MeasureKind::Gaussian &&
        a.gaussian_sigma() == b.gaussian_sigma())
      return {2.0, "gaussian: kappa = 2 (product of equal Gaussians)"};
    if (log_concave()) return {1.0, "log-concave: kappa = 1"};
    return {};
  }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    const std::vector<Vector> first = a.sample(count, rng());
    const std::vector<Vector> second = b.sample(count, rng());
    for (std::size_t k = 0; k < count; ++k) {
      Vector x(dim());
      x << first[k], second[k];
      out.push_back(std::move(x));
    }
  }
  const Measure& factor(int i) const override { return i == 0 ? a : b; }
};

struct PerturbedImpl final : Measure::Impl {
  Measure inner;
  double bound, freq, amplitude, log_z = 0.0;
  CdfTable table;
  PerturbedImpl(Measure base, double b, double frequency)
      : inner(std::move(base)), bound(b), freq(frequency), amplitude(0.5 * std::log(b)) {
    if (!(b >= 1.0) || !std::isfinite(b)) throw ConstructionError("perturbed: bound must be >= 1");
    EstimationBudget budget;
    budget.abs_tol = 1e-14;
    budget.rel_tol = 1e-13;
    budget.max_intervals = 4000;
    budget.samples = 400000;
    budget.seed = 0x9e3779b97f4a7c15ULL;
    auto raw = [&](const Vector& x) {
      Vector v(1);
      v << std::exp(amplitude * std::cos(freq * x[0]));
      return v;
    };
    const MultiEstimate z = integrate(inner, raw, 1, budget);
    log_z = std::log(z.mean[0]);
    if (inner.dim() == 1) {
      table = CdfTable([this](double x) { return std::exp(log_density(unit1(x))); },
                       -inner.ray_extent(unit1(-1.0)), inner.ray_extent(unit1(1.0)));
    }
  }
  MeasureKind kind() const override { return MeasureKind::Perturbed; }
  Index dim() const override { return inner.dim(); }
  std::string describe() const override {
    return "perturbed(" + inner.describe() + ", b=" + fmt(bound) + ", w=" + fmt(freq) + ")";
  }
  double log_h(const Vector& x) const { return amplitude * std::cos(freq * x[0]) - log_z; }
  double log_density(const Vector& x) const override {
    const double base = inner.log_density(x);
    return std::isfinite(base) ? base + log_h(x) : -kInf;
  }
  double ray_extent(const Vector& u) const override { return inner.ray_extent(u); }
  std::vector<double> angular_breaks() const override { return inner.angular_breaks(); }
  const Body* support() const override { return inner.support(); }
  bool symmetric() const override { return inner.symmetric(); }
  bool log_concave() const override { return false; }
  KappaClaim kappa() const override {
    const KappaClaim k = inner.kappa();
    if (!k.tagged()) return {};
    return {k.value / (bound * bound), "bounded perturbation b^-2 * (" + k.provenance + ")"};
  }
  void draw(std::size_t count, std::mt19937_64& rng, std::vector<Vector>& out) const override {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double log_cap = amplitude - log_z;
    std::size_t tries = 0, accepted = 0;
    while (accepted < count) {
      const std::vector<Vector> batch = inner.sample(std::max<std::size_t>(64, count - accepted), rng());
      for (const auto& x : batch) {
        ++tries;
        if (unif(rng) < std::exp(log_h(x) - log_cap)) {
          out.push_back(x);
          if (++accepted == count) break;
        }
      }
      if (tries >= 10000 && double(accepted) < 1e-4 * double(tries))
        throw SamplingError("perturbed: rejection acceptance rate below 1e-4");
    }
  }
  double cdf(double x) const override {
    if (inner.dim() != 1) return Impl::cdf(x);
    return table.cdf(x);
  }
  const Measure& base() const override { return inner; }
  double perturbation(const Vector& x) const override { return std::exp(log_h(x)); }
  double perturbation_bound() const override { return bound; }
};

}  // namespace

Measure Measure::gaussian(Index dim, double sigma) {
  if (dim < 1) throw ConstructionError("gaussian: dimension must be positive");
  if (!(sigma > 0)) throw ConstructionError("gaussian: sigma must be positive");
  return Measure(std::make_shared<GaussianImpl>(dim, sigma));
}
Measure Measure::one_sided_exponential() { return Measure(std::make_shared<OneSidedImpl>()); }
Measure Measure::symmetric_exponential() { return Measure(std::make_shared<SymExpImpl>()); }
Measure Measure::uniform(const Body& support) { return Measure(std::make_shared<UniformImpl>(support)); }
Measure Measure::custom_1d(std::function<double(double)> potential, double half_width, bool symmetric,
                           bool log_concave, std::string name) {
  return Measure(std::make_shared<Custom1dImpl>(std::move(potential), half_width, symmetric, log_concave,
                                                std::move(name)));
}
Measure Measure::product(const Measure& first, const Measure& second) {
  return Measure(std::make_shared<ProductImpl>(first, second));
}
Measure Measure::perturbed(const Measure& base, double bound, double frequency) {
  return Measure(std::make_shared<PerturbedImpl>(base, bound, frequency));
}

MeasureKind Measure::kind() const { return impl_->kind(); }
Index Measure::dim() const { return impl_->dim(); }
std::string Measure::describe() const { return impl_->describe(); }
double Measure::log_density(const Vector& x) const { return impl_->log_density(x); }
double Measure::density(const Vector& x) const { return std::exp(impl_->log_density(x)); }
double Measure::ray_extent(const Vector& u) const { return impl_->ray_extent(u); }
std::vector<double> Measure::angular_breaks() const { return impl_->angular_breaks(); }
const Body* Measure::support() const { return impl_->support(); }
bool Measure::symmetric() const { return impl_->symmetric(); }
bool Measure::log_concave() const { return impl_->log_concave(); }
KappaClaim Measure::kappa() const { return override_.tagged() ? override_ : impl_->kappa(); }

Measure Measure::with_kappa(double value, std::string provenance) const {
  if (!(value > 0)) throw DomainError("kappa must be positive");
  Measure m = *this;
  m.override_ = {value, std::move(provenance)};
  return m;
}

std::vector<Vector> Measure::sample(std::size_t count, std::uint64_t seed) const {
  if (count == 0) throw DomainError("sample: count must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(count);
  impl_->draw(count, rng, out);
  return out;
}

double Measure::cdf_1d(double x) const {
  if (dim() != 1) throw UnsupportedError("cdf_1d: measure is not one-dimensional");
  return impl_->cdf(x);
}

double Measure::quantile_1d(double u) const {
  if (dim() != 1) throw UnsupportedError("quantile_1d: measure is not one-dimensional");
  if (!(u > 0 && u < 1)) throw DomainError("quantile_1d: u must lie in (0, 1)");
  return impl_->quantile(u);
}

double Measure::gaussian_sigma() const { return impl_->sigma(); }
const Measure& Measure::factor(int index) const { return impl_->factor(index); }
const Measure& Measure::base() const { return impl_->base(); }
double Measure::perturbation(const Vector& x) const { return impl_->perturbation(x); }
double Measure::perturbation_bound() const { return impl_->perturbation_bound(); }

double sphere_area(Index n) { return 2.0 * std::pow(kPi, 0.5 * double(n)) / std::tgamma(0.5 * double(n)); }

MultiEstimate integrate_polar(const Measure& m, const VectorIntegrand& integrand, Index outputs,
                              const EstimationBudget& budget, const IntegrationHints& hints) {
  const Index n = m.dim();
  if (n > 2) throw UnsupportedError("quadrature requested for dimension " + std::to_string(n));
  quad::Options inner_opt{budget.abs_tol * (n == 2 ? 0.05 : 0.5), budget.rel_tol * 0.5, budget.max_intervals};
  bool converged = true;
  double worst_inner = 0.0;
  int evaluations = 0;

  auto ray = [&](const Vector& u) -> Vector {
    const double extent = m.ray_extent(u);
    if (!(extent > 0)) return Vector::Zero(outputs);
    auto along = [&](double r) -> Vector {
      const Vector x = r * u;
      const double ld = m.log_density(x);
      if (!std::isfinite(ld)) return Vector::Zero(outputs);
      if (hints.log_space) {
        const double lw = ld + (n == 2 ? std::log(r) : 0.0);
        return Vector((integrand(x).array() + lw).exp());
      }
      const double w = std::exp(ld) * (n == 2 ? r : 1.0);
      if (w == 0.0) return Vector::Zero(outputs);
      return Vector(integrand(x) * w);
    };
    std::vector<double> breaks;
    if (hints.ray_breaks) breaks = hints.ray_breaks(u);
    auto res = quad::adaptive_piecewise(along, 0.0, extent, breaks, inner_opt);
    converged = converged && res.converged;
    worst_inner = std::max(worst_inner, res.error);
    evaluations += res.evaluations;
    return res.value;
  };

  Vector total;
  double error = 0.0;
  if (n == 1) {
    total = ray(unit1(1.0)) + ray(unit1(-1.0));
    error = 2.0 * worst_inner;
  } else {
    std::vector<double> breaks = hints.angular_breaks;
    const auto mb = m.angular_breaks();
    breaks.insert(breaks.end(), mb.begin(), mb.end());
    for (int k = 1; k < 8; ++k) breaks.push_back(0.25 * kPi * k);
    quad::Options outer_opt{budget.abs_tol * 0.5, budget.rel_tol * 0.5, budget.max_intervals};
    auto outer = [&](double theta) {
      Vector u(2);
      u << std::cos(theta), std::sin(theta);
      return ray(u);
    };
    auto res = quad::adaptive_piecewise(outer, 0.0, 2.0 * kPi, breaks, outer_opt);
    converged = converged && res.converged;
    total = res.value;
    error = res.error + 2.0 * kPi * worst_inner;
  }
  MultiEstimate out;
  out.mean = total;
  out.cov = Matrix::Zero(outputs, outputs);
  for (Index i = 0; i < outputs; ++i) {
    const double e = error + kQuadratureFloor * std::abs(total[i]) + 1e-300;
    out.cov(i, i) = e * e;
  }
  out.method = n == 1 ? "adaptive-gauss-kronrod" : "adaptive-gauss-kronrod-polar";
  out.samples = static_cast<std::uint64_t>(evaluations);
  out.seed = budget.seed;
  if (!converged || !total.allFinite()) {
    out.inconclusive = true;
    out.note = "quadrature did not reach tolerance";
  }
  return out;
}

MultiEstimate integrate(const Measure& m, const VectorIntegrand& integrand, Index outputs,
                        const EstimationBudget& budget, const IntegrationHints& hints) {
  if (budget.use_quadrature(m.dim())) return integrate_polar(m, integrand, outputs, budget, hints);
  const std::vector<Vector> xs = m.sample(budget.samples, budget.seed);
  const double count = double(xs.size());
  Vector mean = Vector::Zero(outputs);
  Matrix second = Matrix::Zero(outputs, outputs);
  // Two passes keep the covariance accurate when the mean is large.
  std::vector<Vector> values;
  values.reserve(xs.size());
  for (const auto& x : xs) {
    values.push_back(hints.log_space ? Vector(integrand(x).array().exp()) : integrand(x));
  }
  mean = compensated_mean(values);
  for (const auto& v : values) {
    const Vector d = v - mean;
    second.noalias() += d * d.transpose();
  }
  MultiEstimate out;
  out.mean = mean;
  out.cov = second / (count * (count - 1.0));
  out.method = "monte-carlo";
  out.samples = xs.size();
  out.seed = budget.seed;
  if (!mean.allFinite()) {
    out.inconclusive = true;
    out.note = "non-finite Monte Carlo average";
  }
  return out;
}

Estimate mass_of_body(const Measure& m, const Body& body, const EstimationBudget& budget) {
  if (body.dim() != m.dim()) throw DomainError("mass_of_body: dimension mismatch");
  if (m.dim() == 1 && budget.method != Method::MonteCarlo) {
    const double r = 1.0 / gauge(body, unit1(1.0));
    const double v = m.cdf_1d(r) - m.cdf_1d(-r);
    Estimate e = Estimate::exact(v, "cdf");
    e.std_error = std::max(e.std_error, 1e-15);
    e.seed = budget.seed;
    return e;
  }
  IntegrationHints hints;
  hints.ray_breaks = [&](const Vector& u) { return std::vector<double>{ray_radius(body, u)}; };
  hints.angular_breaks = corner_angles(body);
  auto indicator = [&](const Vector& x) {
    Vector v(1);
    v << (gauge(body, x) < 1.0 ? 1.0 : 0.0);
    return v;
  };
  return integrate(m, indicator, 1, budget, hints).component(0);
}

Estimate moment(const Measure& m, double p, const EstimationBudget& budget) {
  if (!(p > 0)) throw DomainError("moment: p must be positive");
  const double n = double(m.dim());
  switch (m.kind()) {
    case MeasureKind::Gaussian: {
      const double s = m.gaussian_sigma();
      const double v = std::pow(2.0, 0.5 * p) * std::exp(std::lgamma(0.5 * (n + p)) - std::lgamma(0.5 * n)) *
                       std::pow(s, p);
      return Estimate::exact(v, "closed-form");
    }
    case MeasureKind::OneSidedExponential:
    case MeasureKind::SymmetricExponential:
      return Estimate::exact(std::tgamma(p + 1.0), "closed-form");
    case MeasureKind::Uniform:
      if (m.dim() == 1) {
        const double r = m.ray_extent(unit1(1.0));
        return Estimate::exact(std::pow(r, p) / (p + 1.0), "closed-form");
      }
      break;
    default:
      break;
  }
  auto power = [p](const Vector& x) {
    Vector v(1);
    v << std::pow(x.norm(), p);
    return v;
  };
  Estimate e = integrate(m, power, 1, budget).component(0);
  if (e.inconclusive) e.note = "moment may diverge: budget exhausted";
  return e;
}

}  // namespace dilatio
