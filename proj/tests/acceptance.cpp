// Acceptance criteria: one PASS/FAIL line each, non-zero exit on any FAIL.

#include "dilatio/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace dilatio;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome done() const {
    std::string d;
    for (const auto& n : notes_) d += (d.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + ("FAILED " + f);
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

std::string num(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

EstimationBudget quad() {
  EstimationBudget b;
  b.method = Method::Quadrature;
  return b;
}

const CheckResult* find(const std::vector<CheckResult>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (r.id == id) return &r;
  return nullptr;
}

const std::string kSuite = std::string(DILATIO_SOURCE_DIR) + "/configs/paper-suite.cfg";

const ScenarioConfig& suite() {
  static const ScenarioConfig sc = load_scenario(read_config_file(kSuite));
  return sc;
}

const std::vector<CheckResult>& suite_results() {
  static const std::vector<CheckResult> rs = run_checks(suite());
  return rs;
}

const Measure g1 = Measure::gaussian(1);
const Measure nu1 = Measure::one_sided_exponential();
const Measure nu2 = Measure::symmetric_exponential();

Outcome closed_form_dilation_area() {
  Verdict v;
  EstimationBudget mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 1000000;
  mc.seed = 11;
  double worst_quad = 0.0, worst_mc = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    const double exact = 4 / std::sqrt(2 * kPi) * t * std::exp(-t * t / 2);
    const double q = std::abs(dilation_area(g1, Body::interval(t), quad()).value - exact) / exact;
    const double m = std::abs(dilation_area(g1, Body::interval(t), mc).value - exact) / exact;
    worst_quad = std::max(worst_quad, q);
    worst_mc = std::max(worst_mc, m);
    v.require(q <= 1e-8, "quadrature t=" + num(t));
    v.require(m <= 1e-3, "coupled ladder t=" + num(t));
  }
  v.note("max rel err quadrature " + num(worst_quad, 3) + ", ladder 1e6 " + num(worst_mc, 3));
  return v.done();
}

Outcome kappa_two_sharpness() {
  Verdict v;
  const auto rs = sharpness_probes(quad());
  const CheckResult* r = find(rs, "gaussian-ratio-upper");
  v.require(r != nullptr, "probe present");
  if (r) {
    v.require(r->lhs.value >= 1.0 && r->lhs.value <= 1.01, "ratio in [1, 1.01]");
    v.note("ratio at t=0.01 is " + num(r->lhs.value));
  }
  return v.done();
}

Outcome equality_probes() {
  Verdict v;
  double worst_one = 0.0, worst_sym = 0.0;
  for (double x : {0.5, 1.0, 2.0}) {
    const CheckResult r = check_one_sided_probe(nu1, x, 1.0, 1e-6, quad());
    const double gap = std::abs(r.lhs.value - r.rhs.value);
    worst_one = std::max(worst_one, gap);
    v.require(gap <= 1e-6 && r.passed(), "half-line x=" + num(x));
  }
  const auto rs = sharpness_probes(quad());
  for (const char* t : {"0.5", "1", "2"}) {
    const CheckResult* r = find(rs, std::string("exponential-ratio-t=") + t);
    v.require(r != nullptr, std::string("symmetric probe t=") + t + " present");
    if (!r) continue;
    const double gap = std::abs(r->lhs.value - 1.0);
    worst_sym = std::max(worst_sym, gap);
    v.require(gap <= 1e-8, std::string("symmetric probe t=") + t);
  }
  v.note("half-line max gap " + num(worst_one, 3) + ", symmetric max |ratio-1| " + num(worst_sym, 3));
  return v.done();
}

Outcome phi_identities() {
  Verdict v;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  auto draw = [&](Index n) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = 1.5 * normal(rng);
    return x;
  };
  int gauge_points = 0, gauge_bad = 0;
  for (const auto& [id, body] : suite().bodies) {
    const QcFunction f = QcFunction::gauge_power(body, 1.0);
    for (int k = 0; k < 1000; ++k, ++gauge_points) {
      const Vector x = draw(body.dim());
      if (phi(f, x).value != 2 * gauge(body, x)) ++gauge_bad;
    }
  }
  v.require(gauge_bad == 0, std::to_string(gauge_bad) + " gauge mismatches");

  int c1_points = 0;
  double worst_c1 = 0.0;
  for (const auto& [id, f] : suite().functions) {
    if (f.smoothness() != Smoothness::C1) continue;
    for (int k = 0; k < 1000; ++k, ++c1_points) {
      const Vector x = draw(f.dim());
      const double numeric = phi_ladder(f, x, default_phi_ladder()).value;
      const double target = 2 * x.dot(*f.eval_and_grad(x).gradient);
      worst_c1 = std::max(worst_c1, std::abs(numeric - target) / (1 + std::abs(numeric)));
    }
  }
  v.require(worst_c1 <= 1e-5, "C1 identity");

  double worst_power = 0.0;
  const std::vector<QcFunction> bases{QcFunction::shifted_radial(1, 1.0, 0.5), QcFunction::shifted_radial(2, 0.5, 1.0),
                                      QcFunction::gauge_power(Body::ellipsoid(vec({1.5, 0.75})), 2.0),
                                      QcFunction::affine(QcFunction::radial(2, 2.0), 1.0, 1.0)};
  for (const auto& f : bases) {
    for (double p : {0.5, 2.0, 3.0}) {
      const QcFunction fp = QcFunction::power(f, p);
      for (int k = 0; k < 200; ++k) {
        const Vector x = draw(f.dim());
        const double lhs = phi_ladder(fp, x, default_phi_ladder()).value;
        const double rhs = p * std::pow(f(x), p - 1) * phi_ladder(f, x, default_phi_ladder()).value;
        worst_power = std::max(worst_power, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
      }
    }
  }
  v.require(worst_power <= 1e-5, "power rule");
  v.note(std::to_string(gauge_points) + " gauge points exact, C1 worst " + num(worst_c1, 3) + " over " +
         std::to_string(c1_points) + " points, power rule worst " + num(worst_power, 3));
  return v.done();
}

Outcome main_entropy_bound() {
  Verdict v;
  int checks = 0;
  for (const auto& r : suite_results()) {
    if (r.id.rfind("entropy-", 0) != 0) continue;
    ++checks;
    v.require(r.passed(), r.id + " " + to_string(r.status));
  }
  v.require(checks >= 28, "entropy suite covers the family");
  const CheckResult c = check_entropy_bounds(g1, QcFunction::radial(1, 2.0), 2.0, EntropyVariant::C1, quad());
  v.require(std::abs(c.lhs.value - 0.72963) <= 1e-4, "Ent(x^2) under the standard Gaussian");
  v.require(c.rhs.value == 2.0 || std::abs(c.rhs.value - 2.0) <= 1e-12, "bound is 2");
  v.require(c.passed(), "Ent(x^2) <= 2");
  v.note(std::to_string(checks) + " suite entropy checks, Ent(x^2) = " + num(c.lhs.value) + " <= " + num(c.rhs.value));
  return v.done();
}

Outcome coarea_equality() {
  Verdict v;
  const CoareaResult c = coarea_integral(nu2, QcFunction::radial(1, 1.0), 1.0, CoareaSign::Positive, quad());
  v.require(std::abs(c.lhs.value - 2.0) <= 1e-6, "lhs");
  v.require(std::abs(c.rhs.value - 2.0) <= 1e-6, "rhs");
  v.note("lhs " + num(c.lhs.value, 12) + ", rhs " + num(c.rhs.value, 12));
  return v.done();
}

Outcome gaussian_suite() {
  Verdict v;
  double worst_rev = 0.0;
  for (Index n : {1, 2, 3}) {
    const auto rs = check_gaussian_suite(QcFunction::constant(n, 1.0), quad());
    const CheckResult* r = find(rs, "reverse-shannon");
    v.require(r != nullptr, "reverse Shannon present");
    if (!r) continue;
    const double gap = std::abs(r->lhs.value - r->rhs.value);
    worst_rev = std::max(worst_rev, gap);
    v.require(gap <= 1e-9, "reverse Shannon n=" + std::to_string(n));
  }
  int variance_checks = 0;
  std::vector<std::string> skipped;
  for (const auto& [id, f] : suite().functions) {
    try {
      const auto rs = check_gaussian_suite(f, quad());
      const CheckResult* var = find(rs, "variance");
      v.require(var != nullptr, id + " variance present");
      if (!var) continue;
      ++variance_checks;
      v.require(var->margin >= 0.0, id + " variance margin " + num(var->margin));
    } catch (const DomainError&) {
      skipped.push_back(id);
    }
  }
  double worst_tal = 0.0;
  for (Index n : {1, 2, 3}) {
    for (double sigma : {1.1, 1.3, 1.7}) {
      const auto rs = check_gaussian_suite(QcFunction::gaussian_ratio(n, sigma), quad());
      const CheckResult* tal = find(rs, "talagrand");
      v.require(tal != nullptr && tal->passed(), "Talagrand pair present and passing");
      if (!tal) continue;
      const double s2 = sigma * sigma;
      const double ent = 0.5 * double(n) * (s2 - 1 - std::log(s2));
      const double half_w2 = 0.5 * double(n) * (sigma - 1) * (sigma - 1);
      const double gap = std::max(std::abs(tal->lhs.value - half_w2), std::abs(tal->rhs.value - ent));
      worst_tal = std::max(worst_tal, gap);
      v.require(gap <= 1e-9, "Talagrand closed form n=" + std::to_string(n) + " sigma=" + num(sigma));
    }
  }
  std::string sk;
  for (const auto& s : skipped) sk += (sk.empty() ? "" : ",") + s;
  v.note("reverse Shannon max gap " + num(worst_rev, 3) + ", variance margins >= 0 on " +
         std::to_string(variance_checks) + " shipped functions" + (sk.empty() ? "" : " (outside the suite: " + sk + ")") +
         ", Talagrand max gap " + num(worst_tal, 3));
  return v.done();
}

Outcome moments_and_orlicz() {
  Verdict v;
  std::vector<MomentPair> pairs;
  for (int p = 1; p <= 8; ++p)
    for (int q = p; q <= 8; ++q) pairs.push_back({double(p), double(q)});
  const QcFunction abs1 = QcFunction::radial(1, 1.0);
  const auto rs = check_moment_suite(nu2, abs1, 2.0, pairs, std::nullopt, quad());
  double worst = 0.0;
  int moment_checks = 0;
  for (const auto& pq : pairs) {
    const std::string id = "moment-" + num(pq.p) + "-" + num(pq.q);
    const CheckResult* r = find(rs, id);
    v.require(r != nullptr, id + " present");
    if (!r) continue;
    ++moment_checks;
    const double lq = std::exp(std::lgamma(pq.q + 1) / pq.q);
    const double lp = std::exp(std::lgamma(pq.p + 1) / pq.p);
    const double err = std::max(std::abs(r->lhs.value - lq) / lq, std::abs(r->rhs.value - pq.q / pq.p * lp) / lp);
    worst = std::max(worst, err);
    v.require(err <= 1e-8, id + " oracle");
    v.require(r->passed(), id + " " + to_string(r->status));
  }
  const OrliczResult psi1 = orlicz_norm(abs1, nu2, 1.0, quad());
  v.require(std::abs(psi1.norm.value - 2.0) <= 1e-6, "psi_1 norm of |x| is 2");

  const Measure unif = Measure::uniform(Body::interval(1));
  struct Case {
    QcFunction f;
    const Measure* m;
    double alpha;
  };
  const std::vector<Case> cases{{abs1, &nu2, 1.0},
                                {abs1, &g1, 1.0},
                                {abs1, &g1, 2.0},
                                {QcFunction::radial(1, 2.0), &g1, 1.0},
                                {QcFunction::shifted_radial(1, 1.0, 0.5), &g1, 1.0},
                                {QcFunction::max_floor(abs1, 1.0), &nu2, 1.0},
                                {abs1, &unif, 2.0}};
  double lo = kInf, hi = 0.0;
  for (const auto& c : cases) {
    const OrliczResult r = orlicz_norm(c.f, *c.m, c.alpha, quad());
    const double ratio = r.norm.value / r.sup_form.value;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    v.require(ratio >= 1.0 / 8 && ratio <= 8.0, c.f.describe() + " Orlicz forms within 8");
  }
  v.note(std::to_string(moment_checks) + " moment pairs, worst oracle rel err " + num(worst, 3) + ", psi_1 norm " +
         num(psi1.norm.value, 12) + ", Orlicz form ratios in [" + num(lo, 4) + ", " + num(hi, 4) + "]");
  return v.done();
}

Outcome isoperimetry() {
  Verdict v;
  const auto rs = check_isoperimetry(g1, Body::interval(1), 2.0, 2.0, quad());
  const CheckResult* intro = find(rs, "iso-surface");
  const CheckResult* direct = find(rs, "iso-direct");
  v.require(intro && direct, "iso checks present");
  if (intro && direct) {
    // Closed forms; the four-digit literals 0.27428 and 0.36432 are off in the fourth decimal.
    v.require(std::abs(intro->lhs.value - 0.2741352461) <= 1e-4, "surface-moment rhs");
    v.require(std::abs(direct->lhs.value - 0.3642326293) <= 1e-4, "direct rhs");
    v.require(std::abs(direct->rhs.value - 0.48394) <= 1e-4, "perimeter");
    v.require(intro->passed() && direct->passed(), "both bounds below the perimeter");
    v.note("surface-moment rhs " + num(intro->lhs.value) + " (literal 0.27428), direct rhs " +
           num(direct->lhs.value) + " (literal 0.36432), perimeter " + num(direct->rhs.value));
  }
  int pairs = 0;
  std::vector<std::string> unsupported;
  for (const auto& [mid, m] : suite().measures) {
    for (const auto& [bid, K] : suite().bodies) {
      if (m.dim() != K.dim()) continue;
      try {
        const Estimate dil = dilation_area(m, K, quad()), per = perimeter(m, K, quad());
        const double bound = 2 * radii(K).outer * per.value;
        ++pairs;
        v.require(dil.value <= bound + 3 * (dil.std_error + 2 * radii(K).outer * per.std_error) + 1e-9,
                  "bridge " + mid + "/" + bid);
      } catch (const UnsupportedError&) {
        unsupported.push_back(mid + "/" + bid);
      }
    }
  }
  v.require(unsupported.empty(), std::to_string(unsupported.size()) + " unsupported pairs");
  v.note("bridge holds on " + std::to_string(pairs) + " shipped (measure, body) pairs");
  return v.done();
}

Outcome reconstruction() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const Body K = Body::interval(1);
  const Reconstruction rec = reconstruct_dilation(g1, K, 2.0, default_sigma_ladder(), quad());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double mass = mass_of_body(g1, K, quad()).value;
  const double target = -(1 - mass) * std::log(1 - mass);
  const double half_area = dilation_area(g1, K, quad()).value / 2;
  const CheckResult* ent = find(rec.limits, "reconstruct-entropy-limit");
  const CheckResult* phi_lim = find(rec.limits, "reconstruct-phi-limit");
  v.require(ent && phi_lim, "limits present");
  if (ent && phi_lim) {
    v.require(std::abs(ent->lhs.value - target) <= 5e-3, "entropy limit");
    v.require(std::abs(phi_lim->lhs.value - half_area) <= 5e-3, "Phi-integral limit");
    v.note("entropy limit " + num(ent->lhs.value) + " vs " + num(target) + ", Phi limit " + num(phi_lim->lhs.value) +
           " vs " + num(half_area));
  }
  v.require(rec.result.passed(), "reconstructed inequality");
  v.require(secs <= 300, "runtime");
  v.note("runtime " + num(secs, 3) + " s");
  return v.done();
}

Outcome stability() {
  Verdict v;
  for (double a : {0.5, 1.0, 2.0}) {
    const CheckResult r = check_tensor_harmonic(nu2, 2.0, nu2, 2.0, Body::box(vec({a, a})), quad());
    v.require(r.passed() && r.kappa == 1.0, "square a=" + num(a));
  }
  const auto pert = check_perturbation(g1, 1.5, 2.0, 5, 7, quad());
  v.require(pert.size() == 5, "five intervals");
  for (const auto& r : pert) v.require(r.passed() && std::abs(r.kappa - 8.0 / 9.0) <= 1e-15, r.id);
  v.note("3 product squares with kappa 1, " + std::to_string(pert.size()) + " perturbed intervals with kappa 8/9");
  return v.done();
}

Outcome negative_suite() {
  Verdict v;
  const QcFunction floor1 = QcFunction::max_floor(QcFunction::radial(1, 1.0), 1.0);
  const Estimate med = levy_mean(floor1, nu2, quad());
  v.require(std::abs(med.value - 1.0) <= 1e-9, "Levy mean is 1");
  const auto rs = check_negative_suite(nu2, floor1, 2.0, {0.1, 0.3, 0.5}, 0.5, {}, quad());
  int moments = 0;
  for (const auto& r : rs) {
    ++moments;
    v.require(r.passed(), r.id);
  }
  std::vector<double> ts;
  for (int k = 1; k <= 10; ++k) ts.push_back(0.1 * k);
  const auto ball = check_negative_suite(Measure::uniform(Body::interval(1)), QcFunction::shifted_radial(1, 0.01, 0.5),
                                         2.0, {0.1}, 0.5, ts, quad());
  int small_balls = 0;
  for (const auto& r : ball) {
    if (r.id.rfind("small-ball", 0) == 0) ++small_balls;
    v.require(r.passed(), "bounded example " + r.id);
  }
  v.require(moments == 3 && small_balls == 10, "result counts");
  v.note("median " + num(med.value) + ", " + std::to_string(moments) + " negative moments, " +
         std::to_string(small_balls) + " small-ball levels");
  return v.done();
}

Outcome robustness() {
  Verdict v;
  const ScenarioConfig& base = suite();
  const auto once = suite_results();
  const auto twice = run_checks(base);
  ScenarioConfig heavy = base;
  heavy.budget = base.budget.scaled(4);
  const auto big = run_checks(heavy);
  v.require(report_csv(once) == report_csv(twice), "byte-identical report");
  v.require(once.size() == big.size(), "same result set");
  int flips = 0, seeded = 0;
  for (std::size_t i = 0; i < std::min(once.size(), big.size()); ++i) {
    if (once[i].id != big[i].id) {
      v.require(false, "result order " + once[i].id);
      break;
    }
    if (once[i].status == Status::Pass && big[i].status == Status::Fail) ++flips;
    const std::string cfg_id = once[i].id.substr(0, once[i].id.find('/'));
    if (once[i].seed == check_seed(cfg_id, base.budget.seed) && once[i].seed != 0) ++seeded;
  }
  v.require(flips == 0, std::to_string(flips) + " pass to fail flips");
  v.require(seeded == int(once.size()), "seeds recorded on every result");
  int passes = 0;
  for (const auto& r : once) passes += r.passed();
  v.note(std::to_string(once.size()) + " results, " + std::to_string(passes) + " pass, no flips at 4x budget");
  return v.done();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"dilation area closed form", closed_form_dilation_area},
      {"kappa=2 sharpness ratio", kappa_two_sharpness},
      {"equality probes", equality_probes},
      {"Phi identities", phi_identities},
      {"entropy bound on the shipped family", main_entropy_bound},
      {"co-area equality case", coarea_equality},
      {"Gaussian suite", gaussian_suite},
      {"moments and Orlicz norms", moments_and_orlicz},
      {"isoperimetric bounds", isoperimetry},
      {"reconstruction from entropy", reconstruction},
      {"stability", stability},
      {"negative moments and small balls", negative_suite},
      {"suite robustness at 4x budget", robustness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s %2zu %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
