#include "siplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace siplab {

EmpiricalDist EmpiricalDist::from_samples(std::span<const double> xs) {
  EmpiricalDist d;
  d.sorted_values.assign(xs.begin(), xs.end());
  std::sort(d.sorted_values.begin(), d.sorted_values.end());
  return d;
}

double EmpiricalDist::cdf(double x) const {
  auto it = std::upper_bound(sorted_values.begin(), sorted_values.end(), x);
  return static_cast<double>(it - sorted_values.begin()) / sorted_values.size();
}

double empirical_lp_norm(std::span<const double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("empty sample");
  if (p < 1.0) throw std::invalid_argument("p must be >= 1");
  double acc = 0.0;
  for (double x : samples) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
    acc += std::pow(std::fabs(x), p);
  }
  return std::pow(acc / samples.size(), 1.0 / p);
}

double ks_distance(const EmpiricalDist& a, const std::function<double(double)>& ref_cdf) {
  if (a.size() == 0) throw std::invalid_argument("empty sample");
  const auto& xs = a.sorted_values;
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // skip to the last index of a tie block so F_emp is evaluated right-continuously
    if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
    double fe = static_cast<double>(i + 1) / xs.size();
    d = std::max(d, std::fabs(fe - ref_cdf(xs[i])));
  }
  return d;
}

double ks_distance_two_sample(const EmpiricalDist& a, const EmpiricalDist& b) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("empty sample");
  const auto& xa = a.sorted_values;
  const auto& xb = b.sorted_values;
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() || j < xb.size()) {
    double x = (i < xa.size() && (j == xb.size() || xa[i] <= xb[j])) ? xa[i] : xb[j];
    while (i < xa.size() && xa[i] == x) ++i;
    while (j < xb.size() && xb[j] == x) ++j;
    double fa = static_cast<double>(i) / xa.size();
    double fb = static_cast<double>(j) / xb.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

double kolmogorov_critical(double alpha, std::size_t n) {
  // c(alpha) = sqrt(-log(alpha/2)/2); c(0.05) = 1.358, c(0.01) = 1.628
  double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c / std::sqrt(static_cast<double>(n));
}

RateFit loglog_rate_fit(std::span<const double> ns, std::span<const double> ys) {
  if (ns.size() != ys.size() || ns.size() < 3)
    throw std::invalid_argument("rate fit needs >= 3 matching points");
  const std::size_t m = ns.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(ys[i] > 0.0)) throw std::invalid_argument("nonpositive value in rate fit");
    if (!(ns[i] > 0.0)) throw std::invalid_argument("nonpositive n in rate fit");
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = mean(lx), my = mean(ly);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double e = ly[i] - (f.intercept + f.slope * lx[i]);
    ss_res += e * e;
  }
  f.r2 = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
  f.slope_stderr = (m > 2) ? std::sqrt(ss_res / (m - 2) / sxx) : 0.0;
  return f;
}

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / xs.size();
}

double variance(std::span<const double> xs) {
  double m = mean(xs), s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / (xs.size() - 1);
}

double stderr_of_mean(std::span<const double> xs) {
  return std::sqrt(variance(xs) / xs.size());
}

std::vector<double> isotonic_nonincreasing(std::span<const double> ys,
                                           const std::vector<double>* w) {
  // PAVA on the negated sequence (nondecreasing fit of -y).
  const std::size_t n = ys.size();
  std::vector<double> level(n), weight(n);
  std::vector<std::size_t> count(n);
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    level[blocks] = -ys[i];
    weight[blocks] = w ? (*w)[i] : 1.0;
    count[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
      double tw = weight[blocks - 2] + weight[blocks - 1];
      level[blocks - 2] = (level[blocks - 2] * weight[blocks - 2] +
                           level[blocks - 1] * weight[blocks - 1]) / tw;
      weight[blocks - 2] = tw;
      count[blocks - 2] += count[blocks - 1];
      --blocks;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t k = 0; k < count[b]; ++k) out.push_back(-level[b]);
  return out;
}

}  // namespace siplab
