#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace siplab {

// Sorted sample with equal weights; defines the right-continuous
// empirical CDF  F(x) = #{i : x_i <= x} / n.
struct EmpiricalDist {
  std::vector<double> sorted_values;

  static EmpiricalDist from_samples(std::span<const double> xs);
  double cdf(double x) const;
  std::size_t size() const { return sorted_values.size(); }
};

// (mean |x|^p)^{1/p}. Throws on empty input, non-finite entries or p < 1.
double empirical_lp_norm(std::span<const double> samples, double p);

// sup over the sample points of |F_emp - F_ref|, both right-continuous.
double ks_distance(const EmpiricalDist& a, const std::function<double(double)>& ref_cdf);

// Two-sample KS statistic (sup over pooled points of |F_a - F_b|).
double ks_distance_two_sample(const EmpiricalDist& a, const EmpiricalDist& b);

// Asymptotic Kolmogorov critical value c(alpha)/sqrt(n).
double kolmogorov_critical(double alpha, std::size_t n);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
};

// OLS of log ys on log ns. Requires len >= 3 and all ys > 0.
RateFit loglog_rate_fit(std::span<const double> ns, std::span<const double> ys);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);         // unbiased
double stderr_of_mean(std::span<const double> xs);

// Pool-adjacent-violators projection onto nonincreasing sequences,
// weighted by w (nullptr = equal weights).
std::vector<double> isotonic_nonincreasing(std::span<const double> ys,
                                           const std::vector<double>* w = nullptr);

}  // namespace siplab
