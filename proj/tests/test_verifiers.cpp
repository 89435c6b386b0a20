#include "doctest.h"

#include "dilatio/verifiers.hpp"

#include <cmath>
#include <random>

using namespace dilatio;

namespace {

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

Estimate noisy(double v, double se, bool flagged = false) {
  Estimate e = Estimate::exact(v);
  e.std_error = se;
  e.inconclusive = flagged;
  return e;
}

const CheckResult& by_id(const std::vector<CheckResult>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (r.id == id) return r;
  FAIL("missing result " << id);
  return rs.front();
}

bool all_pass(const std::vector<CheckResult>& rs) {
  for (const auto& r : rs)
    if (r.status != Status::Pass) return false;
  return true;
}

const Measure g1 = Measure::gaussian(1);
const Measure nu1 = Measure::one_sided_exponential();
const Measure nu2 = Measure::symmetric_exponential();
const Measure unif = Measure::uniform(Body::interval(1));

QcFunction abs1() { return QcFunction::radial(1, 1.0); }
QcFunction sq1() { return QcFunction::radial(1, 2.0); }

}  // namespace

TEST_CASE("decision rule for inequalities") {
  CHECK(decide("a", noisy(1.0, 0.0), noisy(2.0, 0.0)).status == Status::Pass);
  CHECK(decide("a", noisy(1.0, 0.0), noisy(2.0, 0.0)).margin == doctest::Approx(1.0));
  CHECK(decide("b", noisy(1.0, 0.1), noisy(0.8, 0.0)).status == Status::Pass);
  CHECK(decide("c", noisy(1.0, 0.01), noisy(0.8, 0.0)).status == Status::Fail);
  CHECK(decide("d", noisy(1.0 + 5e-7, 0.0), noisy(1.0, 0.0)).status == Status::Inconclusive);
  CHECK(decide("e", noisy(1.0, 0.0), noisy(2.0, 0.0, true)).status == Status::Pass);
  CHECK(decide("f", noisy(1.0, 0.0), noisy(1.0005, 0.0, true)).status == Status::Inconclusive);
  CHECK(decide("g", noisy(1.0, 0.0, true), noisy(0.5, 0.0)).status == Status::Inconclusive);
  CHECK(decide("h", noisy(kNaN, 0.0), noisy(1.0, 0.0)).status == Status::Inconclusive);
  CHECK(decide("i", noisy(3.0, 0.0), noisy(kInf, 0.0)).status == Status::Pass);
}

TEST_CASE("decision rule for equalities") {
  CHECK(decide_equal("a", noisy(1.0, 0.0), noisy(1.0 + 1e-9, 0.0), 1e-8).status == Status::Pass);
  CHECK(decide_equal("b", noisy(1.0, 0.0), noisy(1.0 + 1e-6, 0.0), 1e-8).status == Status::Fail);
  CHECK(decide_equal("c", noisy(1.0, 1e-6), noisy(1.0 + 1e-6, 0.0), 1e-8).status == Status::Pass);
  CHECK(decide_equal("d", noisy(1.0, 0.0, true), noisy(1.0, 0.0), 1e-8).status == Status::Inconclusive);
  CHECK(report("r", noisy(3.0, 0.1), "note").relation == Relation::Report);
}

TEST_CASE("kappa resolution") {
  CHECK(resolve_kappa(g1, std::nullopt).value == 2.0);
  CHECK(resolve_kappa(g1, 0.5).value == 0.5);
  const Measure untagged = Measure::custom_1d([](double x) { return std::cos(3 * x); }, 2.0, true, false);
  CHECK_THROWS_AS(resolve_kappa(untagged, std::nullopt), DomainError);
  CHECK(resolve_kappa(untagged, 0.3).value == 0.3);
}

TEST_CASE("dilation inequality") {
  const EstimationBudget b = quad();
  const CheckResult r = check_dilation(g1, Body::interval(1), 2.0, b);
  CHECK(r.status == Status::Pass);
  CHECK(r.lhs.value == doctest::Approx(0.728465258554567).epsilon(1e-9));
  CHECK(r.rhs.value == doctest::Approx(0.967882898076573).epsilon(1e-9));
  CHECK(r.kappa == 2.0);

  const CheckResult probe = check_one_sided_probe(nu1, 1.0, 1.0, 1e-6, b);
  CHECK(probe.status == Status::Pass);
  CHECK(std::abs(probe.lhs.value - probe.rhs.value) <= 1e-6);

  const CheckResult whole = check_dilation(unif, Body::interval(2), 2.0, b);
  CHECK(whole.status == Status::Pass);
  CHECK_FALSE(whole.note.empty());

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> width(0.2, 2.0);
  const std::vector<Measure> log_concave{Measure::gaussian(2, 0.7), Measure::uniform(Body::ball(2)),
                                         Measure::product(nu2, g1), Measure::gaussian(1, 3.0), nu2};
  for (const auto& m : log_concave) {
    for (int k = 0; k < 4; ++k) {
      const Body K = m.dim() == 1 ? Body::interval(width(rng)) : Body::ellipsoid(vec({width(rng), width(rng)}));
      CAPTURE(m.describe());
      CAPTURE(K.describe());
      CHECK(check_dilation(m, K, 1.0, b).status == Status::Pass);
    }
  }
}

TEST_CASE("raising kappa eventually fails") {
  const EstimationBudget b = quad();
  const Body K = Body::interval(0.3);
  Status last = Status::Pass;
  double flip = 0.0;
  for (double kappa = 1.0; kappa <= 6.0; kappa += 0.25) {
    const CheckResult r = check_dilation(g1, K, kappa, b);
    if (last == Status::Pass && r.status != Status::Pass) flip = kappa;
    if (r.status == Status::Fail) {
      last = r.status;
      break;
    }
    last = r.status;
  }
  CHECK(last == Status::Fail);
  CHECK(flip > 2.0);
  CHECK(check_dilation(g1, Body::interval(0.01), 5.0, b).status == Status::Fail);
}

TEST_CASE("entropy inequality variants") {
  const EstimationBudget b = quad();
  const CheckResult c1 = check_entropy_bounds(g1, sq1(), 2.0, EntropyVariant::C1, b);
  CHECK(c1.status == Status::Pass);
  CHECK(c1.lhs.value == doctest::Approx(0.729637154538522).epsilon(1e-9));
  CHECK(c1.rhs.value == doctest::Approx(2.0).epsilon(1e-9));

  const CheckResult flat = check_entropy_bounds(nu2, QcFunction::constant(1, 2.0), 2.0, EntropyVariant::Master, b);
  CHECK(flat.status == Status::Pass);
  CHECK(flat.lhs.value == doctest::Approx(0.0));
  CHECK(flat.rhs.value == doctest::Approx(0.0));

  const CheckResult master = check_entropy_bounds(nu2, abs1(), 2.0, EntropyVariant::Master, b);
  CHECK(master.status == Status::Pass);
  CHECK(master.lhs.value == doctest::Approx(0.422784335098467).epsilon(1e-9));
  CHECK(master.rhs.value == doctest::Approx(1.0).epsilon(1e-9));

  CHECK(check_entropy_bounds(g1, abs1(), 2.0, EntropyVariant::Convex, b).rhs.value ==
        doctest::Approx(std::sqrt(2 / kPi)).epsilon(1e-9));
  CHECK(check_entropy_bounds(g1, abs1(), 2.0, EntropyVariant::Lipschitz, b).status == Status::Pass);
  CHECK_THROWS_AS(check_entropy_bounds(g1, abs1(), 2.0, EntropyVariant::C1, b), DomainError);
  CHECK_THROWS_AS(check_entropy_bounds(g1, QcFunction::radial(1, 0.5), 2.0, EntropyVariant::Lipschitz, b),
                  DomainError);
  CHECK_THROWS_AS(check_entropy_bounds(g1, QcFunction::min_cap(abs1(), 1.0), 2.0, EntropyVariant::Convex, b),
                  DomainError);
}

TEST_CASE("logarithmic Sobolev forms") {
  const EstimationBudget b = quad();
  const CheckResult cs = check_lsi(g1, sq1(), 2.0, LsiVariant::CauchySchwarz, b);
  CHECK(cs.status == Status::Pass);
  CHECK(cs.rhs.value == doctest::Approx(std::sqrt(12.0)).epsilon(1e-9));
  const CheckResult def = check_lsi(g1, sq1(), 2.0, LsiVariant::Defective, b);
  CHECK(def.status == Status::Pass);
  CHECK(def.rhs.value == doctest::Approx(3.5).epsilon(1e-9));
  const CheckResult od = check_lsi(unif, sq1(), 2.0, LsiVariant::OneDim, b);
  CHECK(od.status == Status::Pass);
  CHECK(od.lhs.value == doctest::Approx(0.143981874000481).epsilon(1e-9));
  CHECK(od.rhs.value == doctest::Approx(2.202642367284676).epsilon(1e-9));
  CHECK_THROWS_AS(check_lsi(g1, sq1(), 2.0, LsiVariant::OneDim, b), DomainError);
  const Measure wavy = Measure::custom_1d([](double x) { return 0.3 * std::cos(4 * x); }, 1.0, true, false);
  CHECK_THROWS_AS(check_lsi(wavy, sq1(), 2.0, LsiVariant::OneDim, b), DomainError);
  CHECK(check_lsi(wavy, sq1(), 2.0, LsiVariant::OneDim, b, 2.0).status == Status::Pass);
}

TEST_CASE("Gaussian suite") {
  const EstimationBudget b = quad();
  for (Index n : {1, 2, 3}) {
    const auto rs = check_gaussian_suite(QcFunction::constant(n, 1.0), b);
    const CheckResult& rev = by_id(rs, "reverse-shannon");
    CHECK(std::abs(rev.lhs.value + 0.5 * double(n) * std::log(2 * kPi * std::exp(1.0))) <= 1e-9);
    CHECK(std::abs(rev.lhs.value - rev.rhs.value) <= 1e-9);
    CHECK(by_id(rs, "entropy-variance").lhs.value == doctest::Approx(0.0));
    CHECK(by_id(rs, "variance").lhs.value == doctest::Approx(double(n)));
    CHECK(all_pass(rs));
  }
  const auto sq = check_gaussian_suite(sq1(), b);
  CHECK(all_pass(sq));
  CHECK(by_id(sq, "entropy-variance").lhs.value == doctest::Approx(0.729637154538522).epsilon(1e-9));
  CHECK(by_id(sq, "entropy-variance").rhs.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(by_id(sq, "transport-variance").lhs.value == doctest::Approx(0.325398955771325).epsilon(1e-7));

  const auto ratio = check_gaussian_suite(QcFunction::gaussian_ratio(2, 1.3), b);
  CHECK(all_pass(ratio));
  const CheckResult& tal = by_id(ratio, "talagrand");
  const double s2 = 1.69;
  const double ent = 0.5 * 2 * (s2 - 1 - std::log(s2));
  const double w22 = 2 * (1.3 - 1) * (1.3 - 1);
  CHECK(std::abs(tal.lhs.value - 0.5 * w22) <= 1e-9);
  CHECK(std::abs(tal.rhs.value - ent) <= 1e-9);
  for (const auto& f : {QcFunction::affine(sq1(), 1.0, 1.0), QcFunction::shifted_radial(1, 1.0, 0.5),
                        QcFunction::shifted_radial(2, 1.0, 0.5)}) {
    const CheckResult& var = by_id(check_gaussian_suite(f, b), "variance");
    CHECK(var.margin >= 0.0);
  }
}

TEST_CASE("moment suite") {
  const EstimationBudget b = quad();
  const auto rs = check_moment_suite(nu2, abs1(), 2.0, {{1, 3}, {2, 8}}, std::nullopt, b);
  const CheckResult& m13 = by_id(rs, "moment-1-3");
  CHECK(m13.lhs.value == doctest::Approx(std::cbrt(6.0)).epsilon(1e-9));
  CHECK(m13.rhs.value == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(all_pass(rs));
  CHECK(by_id(rs, "orlicz-equivalence").status == Status::Pass);

  const auto flat = check_moment_suite(g1, QcFunction::constant(1, 2.0), 2.0, {{1, 2}}, std::nullopt, b);
  CHECK(by_id(flat, "moment-1-2").lhs.value == doctest::Approx(by_id(flat, "moment-1-2").rhs.value));
  CHECK(all_pass(flat));

  const auto root = check_moment_suite(g1, QcFunction::shifted_radial(1, 1.0, 0.5), 2.0, {{1, 2}, {2, 4}}, std::nullopt, b);
  CHECK(all_pass(root));
  const auto skipped = check_moment_suite(g1, QcFunction::shifted_radial(1, 1.0, 0.5), 2.0, {{1, 2}}, 0.5, b);
  CHECK(skipped.front().note.find("skipped") != std::string::npos);
}

TEST_CASE("negative moments and small balls") {
  const EstimationBudget b = quad();
  const auto rs = check_negative_suite(nu2, QcFunction::max_floor(abs1(), 1.0), 2.0, {0.1, 0.3, 0.5}, 0.5, {}, b);
  CHECK(all_pass(rs));
  CHECK(by_id(rs, "negative-moment-0.3").lhs.value == doctest::Approx(1.0));
  const auto flat = check_negative_suite(g1, QcFunction::constant(1, 2.0), 2.0, {0.5}, 0.5, {0.5}, b);
  CHECK(all_pass(flat));
  CHECK(by_id(flat, "negative-moment-0.5").rhs.value == doctest::Approx(2.0));
  std::vector<double> ts;
  for (int k = 1; k <= 10; ++k) ts.push_back(0.1 * k);
  const auto ball = check_negative_suite(unif, QcFunction::shifted_radial(1, 0.01, 0.5), 2.0, {0.1}, 0.5, ts, b);
  CHECK(all_pass(ball));
  CHECK(ball.size() == 11);
  CHECK_THROWS_AS(check_negative_suite(nu2, abs1(), 2.0, {0.1}, 0.5, {}, b), DomainError);
}

TEST_CASE("isoperimetric bounds") {
  const EstimationBudget b = quad();
  const auto rs = check_isoperimetry(g1, Body::interval(1), 2.0, 2.0, b);
  CHECK(all_pass(rs));
  CHECK(by_id(rs, "iso-surface").lhs.value == doctest::Approx(0.274135246100).epsilon(1e-8));
  CHECK(by_id(rs, "iso-direct").lhs.value == doctest::Approx(0.364232629277).epsilon(1e-8));
  CHECK(by_id(rs, "iso-direct").rhs.value == doctest::Approx(0.483941449038287).epsilon(1e-8));
  const auto u = check_isoperimetry(unif, Body::interval(0.5), 2.0, 2.0, b);
  CHECK(all_pass(u));
  CHECK(by_id(u, "iso-direct").rhs.value == doctest::Approx(1.0).epsilon(1e-8));
  EstimationBudget mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 100000;
  const auto part = check_isoperimetry(Measure::gaussian(4), Body::ball(4, 2.0), 2.0, 2.0, mc);
  CHECK(part.size() == 2);
  CHECK(by_id(part, "iso-direct").status == Status::Pass);
  CHECK(by_id(part, "iso-bridge").status == Status::Pass);
}

TEST_CASE("co-area check") {
  const EstimationBudget b = quad();
  const CheckResult eq = check_coarea(nu2, abs1(), 1.0, CoareaSign::Positive, b);
  CHECK(eq.status == Status::Pass);
  CHECK(std::abs(eq.lhs.value - 2.0) <= 1e-6);
  CHECK(check_coarea(g1, QcFunction::constant(1, 1.0), 1.0, CoareaSign::Positive, b).status == Status::Pass);
  CHECK(check_coarea(g1, QcFunction::max_floor(abs1(), 1.0), 1.0, CoareaSign::Negative, b).status == Status::Pass);
}

TEST_CASE("reconstruction from the entropy bound") {
  const EstimationBudget b = quad();
  const Reconstruction g = reconstruct_dilation(g1, Body::interval(1), 2.0, default_sigma_ladder(), b);
  CHECK(g.result.status == Status::Pass);
  CHECK(g.table.size() == default_sigma_ladder().size());
  CHECK(std::abs(by_id(g.limits, "reconstruct-entropy-limit").lhs.value - 0.364232629277) <= 5e-3);
  CHECK(std::abs(by_id(g.limits, "reconstruct-phi-limit").lhs.value - 0.483941449038287) <= 5e-3);
  for (std::size_t i = 1; i < g.table.size(); ++i) CHECK(g.table[i].entropy.value >= g.table[i - 1].entropy.value - 1e-12);

  const Reconstruction e = reconstruct_dilation(nu2, Body::interval(1), 2.0, default_sigma_ladder(), b);
  CHECK(e.result.status == Status::Pass);
  CHECK(std::abs(e.result.margin) <= 5e-3);
  const Reconstruction big = reconstruct_dilation(g1, Body::interval(9), 2.0, default_sigma_ladder(), b);
  CHECK(big.result.status == Status::Pass);
  CHECK(std::abs(by_id(big.limits, "reconstruct-entropy-limit").lhs.value) <= 1e-6);
}

TEST_CASE("stability under perturbation and products") {
  const EstimationBudget b = quad();
  for (double a : {0.5, 1.0, 2.0}) {
    const CheckResult r = check_tensor_harmonic(nu2, 2.0, nu2, 2.0, Body::box(vec({a, a})), b);
    CHECK(r.status == Status::Pass);
    CHECK(r.kappa == doctest::Approx(1.0));
    CHECK(r.rhs.value == doctest::Approx(4 * a * std::exp(-a) * (1 - std::exp(-a))).epsilon(1e-7));
  }
  Matrix skew(2, 2);
  skew << 1, 0.3, 0, 1;
  CHECK_THROWS_AS(check_tensor_harmonic(nu2, 2.0, nu2, 2.0, Body::polytope(skew, vec({1, 1})), b), DomainError);

  const auto pert = check_perturbation(g1, 1.5, 2.0, 5, 7, b);
  CHECK(pert.size() == 5);
  CHECK(all_pass(pert));
  CHECK(pert.front().kappa == doctest::Approx(8.0 / 9.0));
  const auto same = check_perturbation(g1, 1.0, 2.0, 3, 7, b);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> radius(0.1, 3.0);
  for (const auto& r : same) {
    const CheckResult base = check_dilation(g1, Body::interval(radius(rng)), 2.0, b);
    CHECK(r.kappa == 2.0);
    CHECK(r.lhs.value == base.lhs.value);
    CHECK(r.rhs.value == base.rhs.value);
  }
  CHECK(check_tensor_min(nu2, 2.0, g1, 2.0, QcFunction::radial(2, 2.0), b).status == Status::Pass);
  EstimationBudget mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 20000;
  CHECK_THROWS_AS(explore_tensor_2x2(Measure::gaussian(2), 2.0, Measure::gaussian(2), 2.0, 4, b), UnsupportedError);
  const CheckResult explore = explore_tensor_2x2(Measure::gaussian(2), 2.0, Measure::gaussian(2), 2.0, 4, mc);
  CHECK(explore.relation == Relation::Report);
  CHECK(explore.status == Status::Inconclusive);
}

TEST_CASE("sharpness probes") {
  const auto rs = sharpness_probes(quad());
  CHECK(all_pass(rs));
  const CheckResult& upper = by_id(rs, "gaussian-ratio-upper");
  CHECK(upper.lhs.value >= 1.0);
  CHECK(upper.lhs.value <= 1.01);
  CHECK(upper.lhs.value == doctest::Approx(1.003982606393001).epsilon(1e-8));
  CHECK(by_id(rs, "exponential-ratio-t=1").lhs.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(by_id(rs, "borell-fit-slope").lhs.value < 0.0);
}

TEST_CASE("checks are deterministic in the seed") {
  EstimationBudget mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 20000;
  mc.seed = 99;
  const Measure g3 = Measure::gaussian(3);
  const CheckResult a = check_dilation(g3, Body::box(vec({1, 0.5, 2})), 2.0, mc);
  const CheckResult c = check_dilation(g3, Body::box(vec({1, 0.5, 2})), 2.0, mc);
  CHECK(a.lhs.value == c.lhs.value);
  CHECK(a.rhs.value == c.rhs.value);
  CHECK(a.rhs.std_error == c.rhs.std_error);
  CHECK(a.seed == c.seed);
  const CheckResult d = check_dilation(g3, Body::box(vec({1, 0.5, 2})), 2.0, mc.with_seed(100));
  CHECK(d.rhs.value != a.rhs.value);
}
