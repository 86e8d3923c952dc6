#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "siplab/dependence.hpp"
#include "siplab/numtheory.hpp"

using namespace siplab;

namespace {
std::vector<long> dyadic(long lo, long hi) {
  std::vector<long> v;
  for (long n = lo; n <= hi; n *= 2) v.push_back(n);
  return v;
}
}  // namespace

TEST_CASE("gamma: dmr decays like n^{-(a+1/2)}") {
  auto curve = gamma_coefficient_exact(DmrSpec{1.0, "sqrt_sign"}, dyadic(8, 4096));
  RateFit f = curve.rate_fit();
  CHECK(std::fabs(f.slope + 1.5) < 0.1);
}

TEST_CASE("gamma: iid filter gives zero for positive lags") {
  LinearSpec iid;
  iid.u_seq = "iid";
  auto curve = gamma_coefficient_exact(iid, dyadic(1, 64));
  for (std::size_t i = 0; i < curve.lags.size(); ++i)
    CHECK(curve.values[i] == (curve.lags[i] >= 1 ? 0.0 : 1.0));
}

TEST_CASE("gamma: circle single mode is |cos(2 pi a)|^n E|f|") {
  CircleSpec s;
  s.fourier = FourierSpec::single_mode(1, 0.5);
  auto curve = gamma_coefficient_exact(s, {1, 2, 4, 8});
  double lam = std::cos(2.0 * std::numbers::pi * irrational_value("golden"));
  double e_abs_f = 2.0 * 0.5 * 2.0 / std::numbers::pi;  // E|2 c cos| = 4c/pi
  for (std::size_t i = 0; i < curve.lags.size(); ++i) {
    double pred = std::pow(std::fabs(lam), (double)curve.lags[i]) * e_abs_f;
    CHECK(curve.values[i] == doctest::Approx(pred).epsilon(1e-3));
  }
}

TEST_CASE("gamma: exact kernel and binned MC agree within 3 stderr") {
  DmrSpec spec{1.0, "sqrt_sign"};
  std::vector<long> lags{1, 2};
  auto exact = gamma_coefficient_exact(spec, lags);
  auto mc = gamma_coefficient_mc(spec, lags, 1 << 18, 16, 2718);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    CAPTURE(lags[i]);
    CHECK(std::fabs(mc.values[i] - exact.values[i]) < 3.0 * mc.stderrs[i]);
  }
}

TEST_CASE("gamma: arl has no kernel oracle") {
  CHECK_THROWS(gamma_coefficient_exact(ArlSpec{}, {1, 2}));
}

TEST_CASE("alpha: iid is 0 for n >= 1 and 1 at n = 0") {
  LinearSpec iid;
  iid.u_seq = "iid";
  auto curve = alpha_k_coefficient(iid, 2, {0, 1, 2, 4});
  CHECK(curve.values[0] == 1.0);
  for (std::size_t i = 1; i < curve.values.size(); ++i) CHECK(curve.values[i] == 0.0);
}

TEST_CASE("alpha: alpha_1 <= alpha_2 and both nonnegative") {
  PmSpec s{0.4, "bv_indicator", 256, 1000};
  AlphaOptions opts;
  opts.x_grid = 32;
  opts.gaps = {0, 1, 4};
  auto lags = dyadic(1, 64);
  auto a1 = alpha_k_coefficient(s, 1, lags, opts);
  auto a2 = alpha_k_coefficient(s, 2, lags, opts);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    CHECK(a1.values[i] >= 0.0);
    CHECK(a1.values[i] <= a2.values[i] + 1e-12);
  }
}

TEST_CASE("alpha: pm mixing exponent near (gamma-1)/gamma") {
  PmSpec s{0.5, "bv_indicator", 1024, 1000};
  AlphaOptions opts;
  opts.gaps = {0, 1, 4};
  auto curve = alpha_k_coefficient(s, 2, dyadic(2, 256), opts);
  RateFit f = curve.rate_fit();
  CHECK(std::fabs(f.slope + 1.0) < 0.2);
}

TEST_CASE("alpha: dmr exponent near -a") {
  // the curve approaches the n^{-a} law from above; fit past the transient
  DmrSpec s{1.0, "sqrt_sign"};
  AlphaOptions opts;
  opts.dmr_cells = 512;
  opts.gaps = {0, 1, 4};
  auto curve = alpha_k_coefficient(s, 2, dyadic(32, 1024), opts);
  RateFit f = curve.rate_fit();
  CHECK(std::fabs(f.slope + 1.0) < 0.2);
}

TEST_CASE("alpha: grid-resolution sensitivity is mild") {
  PmSpec s{0.5, "bv_indicator", 512, 1000};
  AlphaOptions a32, a64;
  a32.x_grid = 32;
  a64.x_grid = 64;
  a32.gaps = a64.gaps = {0, 1};
  auto c32 = alpha_k_coefficient(s, 1, {4, 16, 64}, a32);
  auto c64 = alpha_k_coefficient(s, 1, {4, 16, 64}, a64);
  for (std::size_t i = 0; i < c32.values.size(); ++i) {
    CHECK(c64.values[i] >= c32.values[i] - 1e-12);  // sup over a finer grid
    CHECK(c64.values[i] <= c32.values[i] * 1.5 + 1e-6);
  }
}

TEST_CASE("tau: strict one-step coalescence at C = 1, delta = 0") {
  ArlSpec s;
  s.C = 1.0;
  s.delta = 0.0;
  s.burn_in = 64;
  auto taus = tau_coupling(s, {1, 2, 4}, 512, 33);
  for (double v : taus.tau1.values) CHECK(v == 0.0);
}

TEST_CASE("tau: AR(1) coupling decays at the exact geometric rate") {
  ArlSpec s;
  s.C = 0.5;
  s.delta = 0.0;
  s.burn_in = 256;
  auto taus = tau_coupling(s, {1, 2, 4, 8, 16}, 4096, 44);
  // |Y_n - Ybar_n| = 0.5^n |Y_0 - Ybar_0| pathwise: consecutive ratios exact
  for (std::size_t i = 1; i < taus.tau1.values.size(); ++i) {
    double steps = static_cast<double>(taus.tau1.lags[i] - taus.tau1.lags[i - 1]);
    double ratio = taus.tau1.values[i] / taus.tau1.values[i - 1];
    CHECK(ratio == doctest::Approx(std::pow(0.5, steps)).epsilon(1e-9));
  }
  // tau_2 dominates tau_1
  for (std::size_t i = 0; i < taus.tau1.values.size(); ++i)
    CHECK(taus.tau2.values[i] >= taus.tau1.values[i] - 1e-15);
}

TEST_CASE("tau: isotonic projection moves the curve by less than 2 stderr") {
  ArlSpec s;
  s.C = 0.5;
  s.delta = 0.5;
  s.S = 4.0;
  s.innovation = "student_t";
  s.t_dof = 5;
  s.burn_in = 512;
  std::vector<long> lags{1, 2, 3, 4, 6, 8, 12, 16};
  auto taus = tau_coupling(s, lags, 8192, 55);
  auto proj = isotonic_nonincreasing(taus.tau1.values);
  for (std::size_t i = 0; i < lags.size(); ++i)
    CHECK(std::fabs(proj[i] - taus.tau1.values[i]) <=
          2.0 * taus.tau1.stderrs[i] + 1e-12);
}

TEST_CASE("theta: iid vanishes, lambda_2 = max(theta_2, gamma)") {
  LinearSpec iid;
  iid.u_seq = "iid";
  auto th = theta2_lambda2(iid, {1, 2, 4});
  for (double v : th.theta2.values) CHECK(v == 0.0);
  for (double v : th.lambda2.values) CHECK(v == 0.0);
}

TEST_CASE("theta: dmr lambda_2 decays near -a and dominates gamma") {
  DmrSpec s{1.0, "sqrt_sign"};
  ThetaOptions opts;
  opts.cells = 512;
  opts.gaps = {0, 1};
  auto lags = dyadic(2, 64);
  auto th = theta2_lambda2(s, lags, opts);
  for (std::size_t i = 0; i < lags.size(); ++i)
    CHECK(th.lambda2.values[i] >= th.gamma.values[i] - 1e-12);
  RateFit f = th.lambda2.rate_fit();
  CHECK(std::fabs(f.slope + 1.0) < 0.25);
}
