#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "siplab/dmr_oracle.hpp"
#include "siplab/numtheory.hpp"
#include "siplab/process.hpp"
#include "siplab/stats.hpp"
#include "siplab/transfer.hpp"

using namespace siplab;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

// ---------- shared ----------

TEST_CASE("parallel batches match the serial reference bit for bit") {
  std::vector<ProcessSpec> specs{DmrSpec{1.5, "sqrt_sign"}, CircleSpec{},
                                 ArlSpec{}, PmSpec{0.4, "bv_indicator", 128, 500},
                                 LinearSpec{}};
  for (const auto& spec : specs) {
    auto a = simulate_batch(spec, 256, 16, 99);
    auto b = simulate_batch_serial(spec, 256, 16, 99);
    CHECK(a.values == b.values);
    CHECK(a.states == b.states);
    CHECK(a.innovations == b.innovations);
  }
}

TEST_CASE("stationarity: marginals at time 0 and n/2 agree (two-sample KS)") {
  std::vector<ProcessSpec> specs{DmrSpec{1.0, "sqrt_sign"}, CircleSpec{},
                                 ArlSpec{}, PmSpec{0.3, "bv_indicator", 256, 2000}};
  const long n = 64;
  const std::size_t R = 4000;
  for (const auto& spec : specs) {
    auto batch = simulate_batch(spec, n, R, 2024);
    std::vector<double> start(R), mid(R);
    for (std::size_t r = 0; r < R; ++r) {
      start[r] = batch.state(r, 0);
      mid[r] = batch.state(r, n / 2);
    }
    double ks = ks_distance_two_sample(EmpiricalDist::from_samples(start),
                                       EmpiricalDist::from_samples(mid));
    double crit = 1.628 * std::sqrt(2.0 / R);  // 1% two-sample critical value
    CHECK(ks < crit);
  }
}

// ---------- dmr ----------

TEST_CASE("dmr: a = 1 makes the invariant law Uniform[-1,1]") {
  auto batch = simulate_batch(DmrSpec{1.0, "sqrt_sign"}, 1, 20000, 5);
  std::vector<double> xs(batch.replicas);
  for (std::size_t r = 0; r < xs.size(); ++r) xs[r] = batch.state(r, 0);
  double ks = ks_distance(EmpiricalDist::from_samples(xs), [](double x) {
    return std::clamp(0.5 * (x + 1.0), 0.0, 1.0);
  });
  CHECK(ks < kolmogorov_critical(0.01, xs.size()));
}

TEST_CASE("dmr: conditional mean matches (1-|x|)^n f(x) per state bin") {
  DmrSpec spec{1.0, "sqrt_sign"};
  DmrOracle oracle(spec);
  const std::size_t R = 1 << 17;
  for (long n : {1L, 5L, 25L}) {
    auto batch = simulate_batch(spec, n, R, 31 + n);
    const int bins = 16;
    std::vector<std::size_t> order(R);
    for (std::size_t r = 0; r < R; ++r) order[r] = r;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return batch.state(a, 0) < batch.state(b, 0);
    });
    int violations = 0;
    for (int b = 0; b < bins; ++b) {
      std::size_t b0 = b * R / bins, b1 = (b + 1) * R / bins;
      double m = 0.0, m2 = 0.0, pred = 0.0;
      for (std::size_t i = b0; i < b1; ++i) {
        double x = batch.value(order[i], n);
        m += x;
        m2 += x * x;
        pred += oracle.cond_mean(batch.state(order[i], 0), n);
      }
      double cnt = static_cast<double>(b1 - b0);
      m /= cnt;
      pred /= cnt;
      double se = std::sqrt(std::max(1e-30, m2 / cnt - m * m) / cnt);
      if (std::fabs(m - pred) > 3.0 * se) ++violations;
    }
    CHECK(violations <= 2);  // 16 bins at 3 sigma
  }
}

TEST_CASE("dmr: conditional-moment norm decays like n^{-(a+p/2)}") {
  DmrOracle oracle(DmrSpec{1.0, "sqrt_sign"});
  std::vector<double> ns, ys;
  for (long n = 8; n <= 4096; n *= 2) {
    ns.push_back(static_cast<double>(n));
    ys.push_back(oracle.E0Xn_norm_pow(n, 3.0));
  }
  RateFit f = loglog_rate_fit(ns, ys);
  CHECK(std::fabs(f.slope + 2.5) < 0.1);
  // quadrature agrees with the Beta-function closed form
  for (long n : {4L, 64L, 1024L})
    CHECK(oracle.E0Xn_norm_pow(n, 3.0) ==
          doctest::Approx(oracle.E0Xn_norm_pow_beta(n, 3.0)).epsilon(1e-6));
}

TEST_CASE("dmr: parameter validation") {
  CHECK_THROWS(validate(ProcessSpec{DmrSpec{-0.5, "sqrt_sign"}}));
  DmrOracle oracle(DmrSpec{1.0, "sqrt_sign"});
  CHECK_THROWS_WITH(oracle.cond_mean(0.0, 3), "state at atom zero");
}

// ---------- circle ----------

TEST_CASE("circle: kernel acts diagonally on Fourier modes") {
  double a = irrational_value("golden");
  for (int k = 1; k <= 20; ++k) {
    double lam = std::cos(kTwoPi * frac_k_times_a(k, "golden"));
    // (f(x+a)+f(x-a))/2 = lam f(x) for f = cos(2 pi k .), on a grid
    for (int i = 0; i < 64; ++i) {
      double x = (i + 0.37) / 64.0;
      double lhs = 0.5 * (std::cos(kTwoPi * k * (x + a)) +
                          std::cos(kTwoPi * k * (x - a)));
      CHECK(lhs == doctest::Approx(lam * std::cos(kTwoPi * k * x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("circle: sigma^2 closed forms") {
  // single mode, cos(2 pi a) = 0 in the math check: sigma^2 = 2 c^2 * 1
  CHECK(circle_sigma2_from_eigenvalues({1.0}, {0.0}) == doctest::Approx(2.0));
  // golden rotation, single mode
  CircleSpec s;
  s.fourier = FourierSpec::single_mode(1, 1.0);
  double c = std::cos(kTwoPi * irrational_value("golden"));
  CHECK(circle_sigma2_exact(s) == doctest::Approx(2.0 * (1.0 + c) / (1.0 - c)));
  CHECK_THROWS_WITH(circle_sigma2_from_eigenvalues({1.0}, {1.0}),
                    "resonant frequency");
}

TEST_CASE("circle: covariances diagonalize") {
  CircleSpec s;
  s.fourier = FourierSpec::power_law(2.5, 0.5, 8);
  auto batch = simulate_batch(s, 64, 20000, 77);
  auto lamv = [&](int k) { return std::cos(kTwoPi * frac_k_times_a(k, s.a_id)); };
  for (long m : {1L, 2L, 5L}) {
    double pred = 0.0;
    for (int k = 1; k <= 8; ++k)
      pred += 2.0 * s.fourier.coeffs[k - 1] * s.fourier.coeffs[k - 1] *
              std::pow(lamv(k), static_cast<double>(m));
    std::vector<double> prods(batch.replicas);
    for (std::size_t r = 0; r < batch.replicas; ++r)
      prods[r] = batch.value(r, 1) * batch.value(r, 1 + m);
    double est = mean(prods), se = stderr_of_mean(prods);
    CHECK(std::fabs(est - pred) < 3.0 * se);
  }
}

TEST_CASE("circle: same seed reproduces the path bitwise") {
  CircleSpec s;
  auto b1 = simulate_batch(s, 512, 4, 123);
  auto b2 = simulate_batch(s, 512, 4, 123);
  CHECK(b1.values == b2.values);
}

TEST_CASE("circle: fourier evaluation matches direct summation") {
  auto f = FourierSpec::power_law(2.2, 0.5, 32);
  for (double x : {0.017, 0.25, 0.619, 0.93}) {
    double direct = 0.0;
    for (int k = 1; k <= 32; ++k)
      direct += 2.0 * f.coeffs[k - 1] * std::cos(kTwoPi * k * x);
    CHECK(f.eval(x) == doctest::Approx(direct).epsilon(1e-11));
  }
}

// ---------- arl ----------

TEST_CASE("arl: regression function basics") {
  ArlSpec s;
  s.C = 0.6;
  s.delta = 0.4;
  CHECK(arl_h(s, 0.0) == 0.0);
  Rng rng(SeedStream{21, 0});
  for (int i = 0; i < 1000; ++i) {
    double t1 = rng.normal() * 3.0, t2 = rng.normal() * 3.0;
    CHECK(std::fabs(arl_h(s, t2) - arl_h(s, t1)) <= std::fabs(t2 - t1) + 1e-12);
  }
  // |h'(t)| = 1 - C (1+|t|)^{-delta} by central differences
  for (int i = 0; i < 1000; ++i) {
    double t = rng.uniform(-10.0, 10.0);
    if (std::fabs(t) < 1e-3) continue;
    double h = 1e-6;
    double fd = (arl_h(s, t + h) - arl_h(s, t - h)) / (2.0 * h);
    double pred = 1.0 - s.C * std::pow(1.0 + std::fabs(t), -s.delta);
    CHECK(std::fabs(std::fabs(fd) - pred) < 1e-5);
  }
  // contraction toward the origin
  for (double t = 0.25; t < 50.0; t *= 1.7) {
    CHECK(std::fabs(arl_h(s, t)) < t);
    CHECK(std::fabs(arl_h(s, -t)) < t);
  }
}

TEST_CASE("arl: delta = 0 is AR(1) with variance 1/(1-C^2... )") {
  // h(t) = (1-C) t with C = 0.5: stationary variance = 1/(1-0.25) = 4/3
  ArlSpec s;
  s.C = 0.5;
  s.delta = 0.0;
  s.burn_in = 256;
  auto batch = simulate_batch(s, 4, 50000, 8);
  std::vector<double> ys(batch.replicas);
  for (std::size_t r = 0; r < batch.replicas; ++r) ys[r] = batch.state(r, 1);
  double v = variance(ys);
  CHECK(std::fabs(v - 4.0 / 3.0) < 0.03);
}

TEST_CASE("arl: parameter validation") {
  ArlSpec bad;
  bad.delta = 1.0;
  CHECK_THROWS(validate(ProcessSpec{bad}));
  ArlSpec bad2;
  bad2.C = 1.5;
  CHECK_THROWS(validate(ProcessSpec{bad2}));
  ArlSpec t;
  t.innovation = "student_t";
  t.S = 6.0;
  t.t_dof = 5;  // needs dof > S
  CHECK_THROWS(validate(ProcessSpec{t}));
}

// ---------- pm ----------

TEST_CASE("pm: map branch values and the neutral fixed point") {
  CHECK(pm_map(0.5, 0.5) == doctest::Approx(0.0));
  CHECK(pm_map(0.5, 0.75) == doctest::Approx(0.5));
  double left_limit = pm_map(0.5, 0.5 - 1e-12);
  CHECK(left_limit == doctest::Approx(1.0).epsilon(1e-9));
  // T'(0) = 1
  double h = 1e-8;
  CHECK((pm_map(0.5, h) - pm_map(0.5, 0.0)) / h == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("pm: left-branch inverse solves T(z) = y") {
  for (double g : {0.25, 0.5, 0.75}) {
    for (double y : {1e-6, 0.01, 0.3, 0.7, 0.999}) {
      double z = pm_map_left_inverse(g, y);
      CHECK(pm_map(g, z) == doctest::Approx(y).epsilon(1e-10));
      CHECK(z <= 0.5);
    }
  }
}

TEST_CASE("pm: transfer matrix is row-stochastic with leading eigenvalue 1") {
  PmSpec s{0.5, "bv_indicator", 256, 1000};
  ChainModel model = pm_chain_model(s);
  for (int i = 0; i < model.cells(); ++i)
    CHECK(model.K.row(i).sum() == doctest::Approx(1.0).epsilon(1e-10));
  // power iteration: Rayleigh quotient tends to the leading eigenvalue
  // (the spectral gap of the intermittent chain is small, iterate patiently)
  Eigen::VectorXd v = Eigen::VectorXd::Random(model.cells()).cwiseAbs();
  v /= v.norm();
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd w = model.K * v;
    lambda = v.dot(w);
    double delta = (w / w.norm() - v).norm();
    v = w / w.norm();
    if (delta < 1e-14) break;
  }
  CHECK(std::fabs(lambda - 1.0) < 1e-8);
}

TEST_CASE("pm: Ulam invariant density behaves like x^{-gamma} near zero") {
  PmSpec s{0.5, "bv_indicator", 2048, 1000};
  auto d = pm_ulam_density(s);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < d.centers.size(); ++i) {
    if (d.centers[i] > 1e-3 && d.centers[i] < 1e-1) {
      xs.push_back(d.centers[i]);
      ys.push_back(d.density[i]);
    }
  }
  RateFit f = loglog_rate_fit(xs, ys);
  CHECK(std::fabs(f.slope + 0.5) < 0.15);
}

TEST_CASE("pm: reversed-chain marginals equal forward-orbit marginals exactly") {
  PmSpec s{0.4, "bv_indicator", 128, 2000};
  auto batch = simulate_batch(s, 100, 4, 55);
  for (std::size_t r = 0; r < 4; ++r) {
    // regenerate the forward orbit from the same stream
    Rng rng(batch.seeds[r]);
    double x = rng.uniform();
    for (long b = 0; b < s.burn_in; ++b) x = pm_map(s.gamma, x);
    std::vector<double> orbit(101);
    orbit[0] = x;
    for (int k = 1; k <= 100; ++k) orbit[k] = pm_map(s.gamma, orbit[k - 1]);
    std::vector<double> chain(batch.state_row(r), batch.state_row(r) + 101);
    std::sort(orbit.begin(), orbit.end());
    std::sort(chain.begin(), chain.end());
    CHECK(orbit == chain);
  }
}

TEST_CASE("pm: matrix conditional expectations match orbit correlations") {
  PmSpec s{0.35, "bv_indicator", 1024, 2000};
  ChainModel model = pm_chain_model(s);
  // ten observables
  std::vector<std::function<double(double)>> fs;
  fs.push_back([](double x) { return x; });
  fs.push_back([](double x) { return x * x; });
  fs.push_back([](double x) { return std::cos(kTwoPi * x); });
  fs.push_back([](double x) { return std::sin(kTwoPi * x); });
  fs.push_back([](double x) { return x <= 0.25 ? 1.0 : 0.0; });
  fs.push_back([](double x) { return x <= 0.5 ? 1.0 : 0.0; });
  fs.push_back([](double x) { return x <= 0.75 ? 1.0 : 0.0; });
  fs.push_back([](double x) { return std::sqrt(x); });
  fs.push_back([](double x) { return x * x * x; });
  fs.push_back([](double x) { return std::fabs(x - 0.5); });

  const long d = 3;
  const std::size_t R = 64;
  const long n = 4096;
  auto batch = simulate_batch(s, n, R, 404);
  int fails = 0;
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    auto g1 = model.cell_average(fs[fi]);
    auto g2 = model.cell_average(fs[(fi + 3) % fs.size()]);
    std::vector<double> kg2 = g2, tmp;
    for (long i = 0; i < d; ++i) {
      model.apply(kg2, tmp);
      kg2.swap(tmp);
    }
    double pred = 0.0;
    for (int c = 0; c < model.cells(); ++c)
      pred += model.pi[c] * g1[c] * kg2[c];
    // orbit estimate per replica: mean of g1(Y_k) g2(Y_{k+d})
    std::vector<double> est(R);
    for (std::size_t r = 0; r < R; ++r) {
      const double* st = batch.state_row(r);
      double acc = 0.0;
      long cnt = 0;
      for (long k = 0; k + d <= n; ++k, ++cnt)
        acc += fs[fi](st[k]) * fs[(fi + 3) % fs.size()](st[k + d]);
      est[r] = acc / cnt;
    }
    double m = mean(est), se = stderr_of_mean(est);
    if (std::fabs(m - pred) > 3.0 * se + 2e-3) ++fails;
  }
  CHECK(fails <= 1);
}

// ---------- linear ----------

TEST_CASE("linear: variance equals the filter's l2 mass") {
  LinearSpec s;
  s.alpha = 1.0;
  auto a = linear_filter(s);
  double pred = 0.0;
  for (double v : a) pred += v * v;
  auto batch = simulate_batch(s, 2, 40000, 3);
  std::vector<double> xs(batch.replicas);
  for (std::size_t r = 0; r < batch.replicas; ++r) xs[r] = batch.value(r, 1);
  CHECK(std::fabs(variance(xs) - pred) < 0.03 * pred);
}

TEST_CASE("linear: alpha = 10 kills autocovariances beyond the first lag") {
  // a_1 = 1^{-(alpha+1)} = 1 for every alpha, so the lag-1 autocorrelation
  // stays near 1/2; the filter is delta-like from lag 2 on
  LinearSpec s;
  s.alpha = 10.0;
  auto a = linear_filter(s);
  double den = 0.0;
  for (double v : a) den += v * v;
  auto autocov = [&](std::size_t lag) {
    double num = 0.0;
    for (std::size_t j = 0; j + lag < a.size(); ++j) num += a[j] * a[j + lag];
    return num / den;
  };
  CHECK(autocov(1) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(std::fabs(autocov(2)) < 0.01);
  CHECK(std::fabs(autocov(3)) < 1e-4);
  // the genuinely iid filter
  LinearSpec iid;
  iid.u_seq = "iid";
  auto b = linear_filter(iid);
  CHECK(b.size() == 1);
}

TEST_CASE("linear: conditional expectation from retained innovations") {
  LinearSpec s;
  s.alpha = 1.0;
  auto a = linear_filter(s);
  const long J = static_cast<long>(a.size()) - 1;
  const long n = 32;
  auto batch = simulate_batch(s, n, 20000, 6);
  REQUIRE(batch.lag_trunc == J);
  // E(S_n | F_0) = sum_j (sum_{k=j+1}^{n+j} a_k) eps_{-j}
  std::vector<double> resid(batch.replicas), cond(batch.replicas);
  for (std::size_t r = 0; r < batch.replicas; ++r) {
    const double* innov = batch.innovation_row(r);
    double e = 0.0;
    for (long j = 0; j <= J; ++j) {
      double A = 0.0;
      for (long k = j + 1; k <= std::min(n + j, J); ++k) A += a[k];
      e += A * innov[J - j];
    }
    double S = 0.0;
    for (long k = 1; k <= n; ++k) S += batch.value(r, k);
    cond[r] = e;
    resid[r] = S - e;
  }
  // the residual is orthogonal to F_0: its correlation with the conditional
  // part vanishes
  double c = 0.0, v1 = 0.0, v2 = 0.0;
  double m1 = mean(cond), m2 = mean(resid);
  for (std::size_t r = 0; r < batch.replicas; ++r) {
    c += (cond[r] - m1) * (resid[r] - m2);
    v1 += (cond[r] - m1) * (cond[r] - m1);
    v2 += (resid[r] - m2) * (resid[r] - m2);
  }
  double corr = c / std::sqrt(v1 * v2);
  CHECK(std::fabs(corr) < 0.03);
  // and its variance matches sum_j A_{n,j}^2
  double pred = 0.0;
  for (long j = 0; j <= J; ++j) {
    double A = 0.0;
    for (long k = j + 1; k <= std::min(n + j, J); ++k) A += a[k];
    pred += A * A;
  }
  CHECK(std::fabs(variance(cond) - pred) < 0.05 * pred + 1e-4);
}

TEST_CASE("linear: slow u sequences refuse silent truncation") {
  LinearSpec s;
  s.u_seq = "alt06";
  CHECK_THROWS(linear_filter(s));
  s.lag_trunc = 1000;  // explicit override works
  auto a = linear_filter(s);
  CHECK(a.size() == 1001);
}
