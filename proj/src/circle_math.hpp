#pragma once

// Internal helpers for the circle-walk Fourier computations.

#include <cmath>
#include <numbers>
#include <vector>

#include "siplab/numtheory.hpp"
#include "siplab/process.hpp"

namespace siplab::circle_math {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// lambda_k = cos(2 pi k a) for k = 1..K, with k a reduced in extended precision
inline std::vector<double> eigenvalues(const CircleSpec& s, int k_max = 0) {
  int K = k_max > 0 ? k_max : s.fourier.k_trunc();
  std::vector<double> lam(K);
  for (int k = 1; k <= K; ++k)
    lam[k - 1] = std::cos(kTwoPi * frac_k_times_a(k, s.a_id));
  return lam;
}

// || sum_{m>=1} 2 w_m cos(2 pi m x) ||_p over the uniform law, by midpoint
// quadrature (the integrand is a trigonometric polynomial)
inline double torus_lp_norm(const std::vector<double>& w, double p, int min_grid = 512) {
  int grid = std::max<int>(min_grid, 8 * static_cast<int>(w.size()));
  double s = 0.0;
  for (int i = 0; i < grid; ++i) {
    double x = (i + 0.5) / grid;
    double v = 0.0;
    double theta = kTwoPi * x;
    double c1 = std::cos(theta), ckm1 = 1.0, ck = c1;
    for (std::size_t m = 1; m <= w.size(); ++m) {
      v += 2.0 * w[m - 1] * ck;
      double next = 2.0 * c1 * ck - ckm1;
      ckm1 = ck;
      ck = next;
    }
    s += std::pow(std::fabs(v), p);
  }
  return std::pow(s / grid, 1.0 / p);
}

inline bool is_iid_linear(const ProcessSpec& spec) {
  const auto* lin = std::get_if<LinearSpec>(&spec);
  return lin && lin->u_seq == "iid";
}

}  // namespace siplab::circle_math
