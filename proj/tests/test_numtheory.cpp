#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "siplab/numtheory.hpp"

using namespace siplab;

TEST_CASE("rational inputs terminate") {
  auto cf = continued_fraction("half", 10);
  CHECK(cf.terminated);
  REQUIRE(cf.quotients.size() >= 2);
  CHECK(cf.quotients[0] == 0);
  CHECK(cf.quotients[1] == 2);
}

TEST_CASE("golden ratio: all quotients 1, Fibonacci convergents") {
  auto cf = continued_fraction("golden", 30);
  REQUIRE(cf.quotients.size() == 31);
  for (std::size_t j = 1; j < cf.quotients.size(); ++j) CHECK(cf.quotients[j] == 1);
  // q: 1, 1, 2, 3, 5, 8, ...
  std::int64_t f0 = 1, f1 = 1;
  for (std::size_t j = 1; j < cf.q.size(); ++j) {
    CHECK(cf.q[j] == f0);
    std::int64_t next = f0 + f1;
    f1 = f0;
    f0 = next;
  }
}

TEST_CASE("exact convergent identity p_j q_{j-1} - p_{j-1} q_j = (-1)^{j-1}") {
  for (const char* id : {"golden", "sqrt2", "cbrt2"}) {
    auto cf = continued_fraction(id, 25);
    for (std::size_t j = 1; j < cf.p.size(); ++j) {
      std::int64_t det = cf.p[j] * cf.q[j - 1] - cf.p[j - 1] * cf.q[j];
      CHECK(std::llabs(det) == 1);
    }
  }
}

TEST_CASE("|p_j - q_j a| < 1/q_j for computed convergents") {
  // evaluated through the extended-precision lattice distance: for a
  // convergent denominator, d(q_j a, Z) = |q_j a - p_j|
  for (const char* id : {"golden", "sqrt2", "cbrt2"}) {
    auto cf = continued_fraction(id, 20);
    for (std::size_t j = 2; j < cf.p.size(); ++j)
      CHECK(dist_to_lattice(cf.q[j], id) < 1.0 / cf.q[j]);
  }
}

TEST_CASE("dist_to_lattice basics") {
  CHECK(dist_to_lattice(2, "half") == doctest::Approx(0.0));
  CHECK(dist_to_lattice(3, "third") == doctest::Approx(0.0));
  // two evaluation routes agree: direct mod vs nearest convergent (double
  // arithmetic is adequate up to q ~ 1e6)
  auto cf = continued_fraction("golden", 20);
  double a = irrational_value("golden");
  for (std::size_t j = 3; j < cf.q.size() && cf.q[j] < 1000000; ++j) {
    double d = dist_to_lattice(cf.q[j], "golden");
    double via_conv = std::fabs(cf.q[j] * a - cf.p[j]);
    CHECK(d == doctest::Approx(via_conv).epsilon(1e-6));
    CHECK(d < 1.0 / cf.q[j]);
  }
}

TEST_CASE("badly approximable profile of quadratic irrationals") {
  auto rep = badly_approximable_report("golden", 100000);
  CHECK(rep.c_hat > 0.2);
  auto rep2 = badly_approximable_report("sqrt2", 100000);
  CHECK(rep2.c_hat > 0.2);
  // rational: k d(ka,Z) collapses at the denominator
  auto rep3 = badly_approximable_report("third", 10);
  CHECK(rep3.c_hat == doctest::Approx(0.0));
}

TEST_CASE("paroux series: summable coefficients vs borderline ones") {
  // fhat(k) = k^{-1.5}: converges for the golden rotation
  std::vector<double> decaying(4096), borderline(4096);
  for (int k = 1; k <= 4096; ++k) {
    decaying[k - 1] = std::pow(k, -1.5);
    borderline[k - 1] = 1.0 / k;
  }
  auto good = paroux_series(decaying, "golden", 4096);
  CHECK(good.verdict == "converges");
  // fhat(k) = 1/k: terms along convergent denominators stay order one
  auto bad = paroux_series(borderline, "golden", 4096);
  CHECK(bad.verdict != "converges");
  // block maxima do not tend to zero
  double last_max = bad.block_max_term.back();
  CHECK(last_max > 0.1);
}

TEST_CASE("paroux two-term example") {
  std::vector<double> fh{0.5};  // only k = +-1
  auto s = paroux_series(fh, "golden", 1);
  double d = dist_to_lattice(1, "golden");
  CHECK(s.total == doctest::Approx(2.0 * 0.25 / (d * d)));
}

TEST_CASE("precision guard triggers before convergents overflow") {
  CHECK_THROWS(continued_fraction("golden", 200));
}
