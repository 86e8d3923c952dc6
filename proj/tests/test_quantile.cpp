#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "siplab/quantile.hpp"
#include "siplab/rng.hpp"

using namespace siplab;

TEST_CASE("empirical quantile step function") {
  auto q0 = quantile_from_sample(EmpiricalDist::from_samples(std::vector<double>{0, 0, 0}));
  for (double u : {0.1, 0.5, 0.99, 1.0}) CHECK(q0(u) == 0.0);

  auto q1 = quantile_from_sample(EmpiricalDist::from_samples(std::vector<double>{2.5}));
  CHECK(q1(0.3) == 2.5);
  CHECK(q1(0.999) == 2.5);
  CHECK(q1(1.0) == 0.0);

  auto q = quantile_from_sample(EmpiricalDist::from_samples(std::vector<double>{1, 2, 3}));
  CHECK(q(0.2) == 3.0);
  CHECK(q(1.0 / 3.0) == 2.0);  // right-continuous at the break
  CHECK(q(0.5) == 2.0);
  CHECK(q(2.0 / 3.0) == 1.0);
  CHECK(q(0.9) == 1.0);
}

TEST_CASE("quantile functions are nonincreasing on a fine grid") {
  Rng rng(SeedStream{9, 0});
  std::vector<double> xs(257);
  for (auto& x : xs) x = rng.student_t(5);
  for (auto q : {quantile_from_sample(EmpiricalDist::from_samples(xs)),
                 pareto_quantile(4.0), constant_quantile(2.0)}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 1000; ++i) {
      double u = static_cast<double>(i) / 1000.0;
      double v = q(u);
      CHECK(v <= prev + 1e-14);
      prev = v;
    }
  }
}

TEST_CASE("H and G closed forms") {
  auto hg1 = build_HG(constant_quantile(1.0));
  CHECK(hg1.H(0.4) == doctest::Approx(0.4));
  CHECK(hg1.G(0.4) == doctest::Approx(0.4));

  auto hg = build_HG(pareto_quantile(4.0));
  CHECK(hg.H(0.5) == doctest::Approx(4.0 / 3.0 * std::pow(0.5, 0.75)));
  CHECK(hg.G(0.5) == doctest::Approx(std::pow(3.0 * 0.5 / 4.0, 4.0 / 3.0)));
  CHECK(hg.total_mass == doctest::Approx(4.0 / 3.0));

  auto emp = build_HG(quantile_from_sample(
      EmpiricalDist::from_samples(std::vector<double>{1, 2, 3})));
  CHECK(emp.H(1.0 / 3.0) == doctest::Approx(1.0));
  CHECK(emp.H(2.0 / 3.0) == doctest::Approx(5.0 / 3.0));
  CHECK(emp.total_mass == doctest::Approx(2.0));
}

TEST_CASE("pareto with r <= 1 is not integrable") {
  CHECK_THROWS_WITH(build_HG(pareto_quantile(1.0)), "Q not integrable");
}

TEST_CASE("round trip H(G(u)) = u") {
  auto check_roundtrip = [](const HGPair& hg, double tol) {
    for (int i = 1; i < 1000; ++i) {
      double v = hg.total_mass * i / 1000.0;
      CHECK(std::fabs(hg.H(hg.G(v)) - v) < tol);
    }
  };
  check_roundtrip(build_HG(pareto_quantile(4.0)), 1e-10);
  Rng rng(SeedStream{13, 2});
  std::vector<double> xs(10000);
  for (auto& x : xs) x = rng.student_t(6);
  check_roundtrip(build_HG(quantile_from_sample(EmpiricalDist::from_samples(xs))),
                  1e-10);
}

TEST_CASE("condition integral examples") {
  auto q1 = constant_quantile(1.0);
  auto hg1 = build_HG(q1);
  CHECK(condition_integral(q1, hg1, 0.0, 3.0, IntegralMode::Qp_of_u).value == 0.0);
  CHECK(condition_integral(q1, hg1, 0.3, 3.0, IntegralMode::Qp_of_u).value ==
        doctest::Approx(0.3));
  CHECK(condition_integral(q1, hg1, 0.3, 3.0, IntegralMode::Qpm1_circ_G).value ==
        doctest::Approx(0.3));

  auto qp = pareto_quantile(4.0);
  auto hgp = build_HG(qp);
  // int_0^{0.5} u^{-3/4} du = 4 * 0.5^{1/4}
  CHECK(condition_integral(qp, hgp, 0.5, 3.0, IntegralMode::Qp_of_u).value ==
        doctest::Approx(4.0 * std::pow(0.5, 0.25)));
}

TEST_CASE("clamping in circ-G mode is flagged") {
  auto qp = pareto_quantile(4.0);
  auto hgp = build_HG(qp);
  auto r = condition_integral(qp, hgp, 10.0, 3.0, IntegralMode::Qpm1_circ_G);
  CHECK(r.clamped);
  auto r2 = condition_integral(qp, hgp, 0.5, 3.0, IntegralMode::Qpm1_circ_G);
  CHECK_FALSE(r2.clamped);
}

TEST_CASE("change of variables ties the two integral modes together") {
  // int_0^{G(a)} Q^p du = int_0^a Q^{p-1}(G(v)) dv
  auto check_identity = [](const QuantileFunction& q, double p, double tol) {
    auto hg = build_HG(q);
    for (int i = 1; i <= 100; ++i) {
      double aa = hg.total_mass * i / 101.0;
      double lhs = condition_integral(q, hg, hg.G(aa), p, IntegralMode::Qp_of_u).value;
      double rhs = condition_integral(q, hg, aa, p, IntegralMode::Qpm1_circ_G).value;
      CHECK(std::fabs(lhs - rhs) < tol);
    }
  };
  check_identity(pareto_quantile(4.0), 3.0, 1e-8);
  Rng rng(SeedStream{17, 4});
  std::vector<double> xs(5000);
  for (auto& x : xs) x = rng.normal();
  check_identity(quantile_from_sample(EmpiricalDist::from_samples(xs)), 3.0, 1e-8);
}

TEST_CASE("condition integral is nondecreasing in lambda") {
  Rng rng(SeedStream{19, 5});
  std::vector<double> xs(500);
  for (auto& x : xs) x = rng.sym_pareto(6.0);
  auto q = quantile_from_sample(EmpiricalDist::from_samples(xs));
  auto hg = build_HG(q);
  double prev = -1.0;
  for (int i = 0; i <= 50; ++i) {
    double lam = static_cast<double>(i) / 50.0;
    double v = condition_integral(q, hg, lam, 3.0, IntegralMode::Qp_of_u).value;
    CHECK(v >= prev);
    prev = v;
  }
}
