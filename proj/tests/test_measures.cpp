#include "doctest.h"

#include "dilatio/measures.hpp"

#include <algorithm>
#include <cmath>

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

double ks_distance(const Measure& m, std::size_t count, std::uint64_t seed) {
  std::vector<double> xs;
  for (const auto& x : m.sample(count, seed)) xs.push_back(x[0]);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = double(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = m.cdf_1d(xs[i]);
    d = std::max({d, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST_CASE("log densities") {
  CHECK(Measure::gaussian(1).log_density(vec({0})) == doctest::Approx(-0.5 * std::log(2 * kPi)).epsilon(1e-14));
  CHECK(Measure::symmetric_exponential().log_density(vec({1})) == doctest::Approx(std::log(0.5) - 1).epsilon(1e-14));
  CHECK(Measure::uniform(Body::interval(1)).log_density(vec({2})) == -kInf);
  CHECK(Measure::uniform(Body::interval(1)).log_density(vec({0.3})) == doctest::Approx(std::log(0.5)));
  CHECK(Measure::one_sided_exponential().log_density(vec({-0.1})) == -kInf);
  CHECK(Measure::gaussian(2, 2.0).log_density(vec({0, 0})) == doctest::Approx(-std::log(8 * kPi)));
}

TEST_CASE("masses of bodies") {
  const EstimationBudget b = quad();
  CHECK(mass_of_body(Measure::gaussian(1), Body::interval(1), b).value ==
        doctest::Approx(0.682689492137086).epsilon(1e-10));
  CHECK(mass_of_body(Measure::gaussian(2), Body::ball(2), b).value ==
        doctest::Approx(1 - std::exp(-0.5)).epsilon(1e-10));
  CHECK(mass_of_body(Measure::uniform(Body::interval(1)), Body::interval(3), b).value == doctest::Approx(1.0));
  CHECK(mass_of_body(Measure::uniform(Body::box(vec({1, 1}))), Body::box(vec({2, 2})), b).value ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(mass_of_body(Measure::gaussian(2), Body::interval(1), b), DomainError);

  EstimationBudget mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 100000;
  const Estimate g3 = mass_of_body(Measure::gaussian(3), Body::ball(3, 1.5), mc);
  CHECK(g3.std_error > 0);
  CHECK(std::abs(g3.value - 0.47783281046460857) <= 4 * g3.std_error);
  CHECK_THROWS_AS(integrate(Measure::gaussian(3), [](const Vector&) { return Vector::Ones(1); }, 1, b),
                  UnsupportedError);
  CHECK_THROWS_AS(Measure::gaussian(1).sample(0, 1), DomainError);
}

TEST_CASE("quantiles") {
  CHECK(Measure::gaussian(1).quantile_1d(0.5) == doctest::Approx(0.0));
  CHECK(Measure::one_sided_exponential().quantile_1d(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(Measure::symmetric_exponential().quantile_1d(0.75) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(Measure::gaussian(1).quantile_1d(0.75) == doctest::Approx(0.6744897501960817).epsilon(1e-10));
  CHECK_THROWS_AS(Measure::gaussian(2).quantile_1d(0.5), UnsupportedError);
  CHECK_THROWS_AS(Measure::gaussian(1).quantile_1d(1.0), DomainError);
}

TEST_CASE("moments") {
  const EstimationBudget b = quad();
  CHECK(moment(Measure::gaussian(1), 2, b).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(moment(Measure::gaussian(2), 2, b).value == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(moment(Measure::gaussian(3), 2, b).value == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(moment(Measure::symmetric_exponential(), 1, b).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(moment(Measure::symmetric_exponential(), 3, b).value == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(moment(Measure::uniform(Body::interval(1)), 2, b).value == doctest::Approx(1.0 / 3).epsilon(1e-10));
  CHECK_THROWS_AS(moment(Measure::gaussian(1), 0.0, b), DomainError);
}

TEST_CASE("densities integrate to one") {
  const EstimationBudget b = quad();
  const std::vector<Measure> measures{
      Measure::gaussian(1),
      Measure::gaussian(1, 0.4),
      Measure::gaussian(2),
      Measure::one_sided_exponential(),
      Measure::symmetric_exponential(),
      Measure::uniform(Body::interval(1)),
      Measure::uniform(Body::ellipsoid(vec({1.5, 0.75}))),
      Measure::product(Measure::symmetric_exponential(), Measure::symmetric_exponential()),
      Measure::perturbed(Measure::gaussian(1), 1.5),
      Measure::custom_1d([](double x) { return x * x * x * x; }, kInf, true, true, "quartic")};
  for (const auto& m : measures) {
    CAPTURE(m.describe());
    const MultiEstimate total = integrate(m, [](const Vector&) { return Vector::Ones(1); }, 1, b);
    CHECK(std::abs(total.mean[0] - 1.0) <= 1e-8);
  }
}

TEST_CASE("samplers against exact laws") {
  const auto g = Measure::gaussian(1).sample(1000000, 17);
  double mean = 0.0;
  for (const auto& x : g) mean += x[0];
  mean /= double(g.size());
  CHECK(std::abs(mean) <= 4e-3);

  const auto e = Measure::symmetric_exponential().sample(1000000, 18);
  double abs_mean = 0.0;
  for (const auto& x : e) abs_mean += std::abs(x[0]);
  abs_mean /= double(e.size());
  CHECK(std::abs(abs_mean - 1.0) <= 5e-3);

  const auto u = Measure::uniform(Body::interval(1)).sample(1000000, 19);
  double var = 0.0;
  for (const auto& x : u) var += x[0] * x[0];
  var /= double(u.size());
  CHECK(std::abs(var - 1.0 / 3) <= 2e-3);

  for (const auto& m : {Measure::gaussian(1), Measure::symmetric_exponential(), Measure::one_sided_exponential(),
                        Measure::uniform(Body::interval(1)), Measure::perturbed(Measure::gaussian(1), 1.5)}) {
    CAPTURE(m.describe());
    CHECK(ks_distance(m, 1000000, 23) <= 0.002);
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const Measure m = Measure::gaussian(2);
  const auto a = m.sample(100, 9), b = m.sample(100, 9), c = m.sample(100, 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("product measures factor on boxes") {
  const EstimationBudget b = quad();
  const Measure nu = Measure::symmetric_exponential();
  const Measure g = Measure::gaussian(1);
  const Measure prod = Measure::product(nu, g);
  CHECK(prod.dim() == 2);
  const double expected = mass_of_body(nu, Body::interval(0.7), b).value * mass_of_body(g, Body::interval(1.3), b).value;
  CHECK(mass_of_body(prod, Body::box(vec({0.7, 1.3})), b).value == doctest::Approx(expected).epsilon(1e-9));
  CHECK(prod.factor(0).kind() == MeasureKind::SymmetricExponential);
  CHECK(prod.log_concave());
}

TEST_CASE("perturbed measures stay within their bound") {
  const double bound = 1.5;
  const Measure m = Measure::perturbed(Measure::gaussian(1), bound, 2.0);
  for (const auto& x : m.sample(20000, 4)) {
    CHECK(m.perturbation(x) >= 1 / bound - 1e-12);
    CHECK(m.perturbation(x) <= bound + 1e-12);
  }
  const MultiEstimate h = integrate(m.base(), [&](const Vector& x) { return Vector::Constant(1, m.perturbation(x)); },
                                    1, quad());
  CHECK(h.mean[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.kappa().value == doctest::Approx(2.0 / 2.25));
  CHECK_THROWS_AS(Measure::perturbed(Measure::gaussian(1), 0.5), ConstructionError);
}

TEST_CASE("kappa provenance") {
  CHECK(Measure::gaussian(3).kappa().value == 2.0);
  CHECK(Measure::symmetric_exponential().kappa().value == 2.0);
  CHECK(Measure::one_sided_exponential().kappa().value == 1.0);
  CHECK(Measure::uniform(Body::interval(1)).kappa().value == 2.0);
  CHECK(Measure::uniform(Body::ball(2)).kappa().value == 1.0);
  CHECK_FALSE(Measure::gaussian(1).kappa().provenance.empty());
  const Measure m = Measure::gaussian(1).with_kappa(0.5, "user");
  CHECK(m.kappa().value == 0.5);
  CHECK(m.kappa().provenance == "user");
  CHECK_THROWS_AS(Measure::gaussian(1).with_kappa(0.0, "bad"), DomainError);
  CHECK(sphere_area(2) == doctest::Approx(2 * kPi));
  CHECK(sphere_area(3) == doctest::Approx(4 * kPi));
}
