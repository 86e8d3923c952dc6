#include "siplab/dmr_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace siplab {

namespace {

// 1 - (1-x)^n without cancellation for small n*x
inline double one_minus_wpow(double xbar, long n) {
  if (xbar >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(n) * std::log1p(-xbar));
}
inline double wpow(double xbar, long n) {
  if (xbar >= 1.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(n) * std::log1p(-xbar));
}

}  // namespace

DmrOracle::DmrOracle(const DmrSpec& spec, int panels) : a_(spec.a) {
  if (!(a_ > 0.0)) throw std::invalid_argument("dmr: a must be > 0");
  base_ = log_panel_quadrature(1e-9, 1.0, panels);
  pi_q_ = weighted(base_, [this](double x) { return a_ * std::pow(x, a_ - 1.0); });
  ups_q_ = weighted(base_, [this](double x) { return (a_ + 1.0) * std::pow(x, a_); });
}

double DmrOracle::cond_mean(double x, long n) const {
  double ax = std::fabs(x);
  if (ax == 0.0) throw std::invalid_argument("state at atom zero");
  return wpow(ax, n) * f(x);
}

double DmrOracle::knf(double x, long i) const { return cond_mean(x, i); }

double DmrOracle::P0_eval(double y_prev, double y_now, long i) const {
  return cond_mean(y_now, i) - cond_mean(y_prev, i + 1);
}

double DmrOracle::d_closed(double y_prev, double y_now) const {
  double a0 = std::fabs(y_prev), a1 = std::fabs(y_now);
  if (a0 == 0.0 || a1 == 0.0) throw std::invalid_argument("state at atom zero");
  return f(y_now) / a1 - f(y_prev) / a0 + f(y_prev);
}

double DmrOracle::d_truncated(double y_prev, double y_now, long N) const {
  double a0 = std::fabs(y_prev), a1 = std::fabs(y_now);
  if (a0 == 0.0 || a1 == 0.0) throw std::invalid_argument("state at atom zero");
  // sum_{i=0}^{N} K^i f(y_now) - sum_{i=0}^{N} K^{i+1} f(y_prev)
  double s_now = one_minus_wpow(a1, N + 1) / a1;
  double s_prev = (one_minus_wpow(a0, N + 2) / a0) - 1.0;
  return f(y_now) * s_now - f(y_prev) * s_prev;
}

double DmrOracle::d_truncation_error(double y_prev, double y_now, long N) const {
  double a0 = std::fabs(y_prev), a1 = std::fabs(y_now);
  return std::fabs(wpow(a1, N + 1) * f(y_now) / a1 -
                   wpow(a0, N + 2) * f(y_prev) / a0);
}

double DmrOracle::g_R(double x) const {
  double ax = std::fabs(x);
  if (ax == 0.0) throw std::invalid_argument("state at atom zero");
  return f(x) * (1.0 - ax) / ax;
}

double DmrOracle::R_closed(double z0, double zn) const {
  return g_R(z0) - g_R(zn);
}

double DmrOracle::tail_P0_sum(double y_prev, double y_now, long J) const {
  double a0 = std::fabs(y_prev), a1 = std::fabs(y_now);
  if (a0 == 0.0 || a1 == 0.0) throw std::invalid_argument("state at atom zero");
  return wpow(a1, J) * f(y_now) / a1 - wpow(a0, J + 1) * f(y_prev) / a0;
}

double DmrOracle::E0Xn_norm_pow(long n, double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < pi_q_.size(); ++i) {
    double x = pi_q_.nodes[i];
    s += pi_q_.weights[i] * wpow(x, n * static_cast<long>(p)) *
         std::pow(x, p / 2.0);
  }
  return s;
}

double DmrOracle::E0Xn_norm_pow_beta(long n, double p) const {
  // a * B(a + p/2, np + 1)
  double al = a_ + p / 2.0, be = n * p + 1.0;
  return a_ * std::exp(std::lgamma(al) + std::lgamma(be) - std::lgamma(al + be));
}

double DmrOracle::ESn_norm_pow(long n, double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < pi_q_.size(); ++i) {
    double x = pi_q_.nodes[i];
    double v = (1.0 - x) * one_minus_wpow(x, n) * std::pow(x, 0.5 - 1.0);
    // |f(x)| (1-x)(1-(1-x)^n)/x = x^{-1/2} (1-x)(1-(1-x)^n)
    s += pi_q_.weights[i] * std::pow(std::fabs(v), p);
  }
  return s;
}

double DmrOracle::X0EXn_norm_pow(long n, double p) const {
  double al = p / 2.0 + a_, be = n * p / 2.0 + 1.0;
  return a_ * std::exp(std::lgamma(al) + std::lgamma(be) - std::lgamma(al + be));
}

double DmrOracle::P0_norm_pow(long k, double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < pi_q_.size(); ++i) {
    double x = pi_q_.nodes[i];
    double stay = wpow(x, 1 + k * static_cast<long>(p)) * std::pow(x, 1.5 * p);
    double B = wpow(x, k + 1) * std::sqrt(x);
    double jump = 0.0;
    for (std::size_t j = 0; j < ups_q_.size(); ++j) {
      double y = ups_q_.nodes[j];
      double A = wpow(y, k) * std::sqrt(y);
      jump += ups_q_.weights[j] * 0.5 *
              (std::pow(std::fabs(A - B), p) + std::pow(A + B, p));
    }
    s += pi_q_.weights[i] * (stay + x * jump);
  }
  return s;
}

double DmrOracle::tail_P0_norm_pow(long J, double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < pi_q_.size(); ++i) {
    double x = pi_q_.nodes[i];
    double stay = wpow(x, 1 + J * static_cast<long>(p)) * std::pow(x, 0.5 * p);
    double B = wpow(x, J + 1) / std::sqrt(x);
    double jump = 0.0;
    for (std::size_t j = 0; j < ups_q_.size(); ++j) {
      double y = ups_q_.nodes[j];
      double A = wpow(y, J) / std::sqrt(y);
      jump += ups_q_.weights[j] * 0.5 *
              (std::pow(std::fabs(A - B), p) + std::pow(A + B, p));
    }
    s += pi_q_.weights[i] * (stay + x * jump);
  }
  return s;
}

double DmrOracle::e_d_squared() const {
  // E(d^2) = E[(1-|x|) x] + E[|x| (E(W^2) + h(x)^2)], E(W^2) = (a+1)/a
  double ew2 = (a_ + 1.0) / a_;
  double s = 0.0;
  for (std::size_t i = 0; i < pi_q_.size(); ++i) {
    double x = pi_q_.nodes[i];
    double h2 = (1.0 - x) * (1.0 - x) / x;
    s += pi_q_.weights[i] * ((1.0 - x) * x + x * (ew2 + h2));
  }
  return s;
}

// ---------- r_m tables ----------

void DmrOracle::ensure_tables(long n_max) {
  if (tables_n_ >= n_max) return;
  if (n_max > 2048)
    throw std::invalid_argument(
        "second-moment tables capped at n_max = 2048 (quadratic memory)");
  const std::size_t nn = base_.size();
  const long M = n_max;           // r_m for m = 0..M-1
  const long Q = n_max + 1;       // (1-y)^q for q = 0..Q
  r_.assign(M, std::vector<double>(nn));
  Jm_.assign(M, 0.0);
  Ih2_.assign(M, 0.0);
  C1_.assign(Q + 1, std::vector<double>(M));
  C2_.assign(Q + 1, std::vector<double>(M));
  std::vector<double> u(nn);
  for (std::size_t i = 0; i < nn; ++i)
    u[i] = (a_ + 1.0) * std::pow(base_.nodes[i], a_);
  for (long m = 0; m < M; ++m) {
    auto& rm = r_[m];
    if (m == 0) {
      rm = u;
    } else {
      const auto& prev = r_[m - 1];
      for (std::size_t i = 0; i < nn; ++i)
        rm[i] = (1.0 - base_.nodes[i]) * prev[i] + Jm_[m - 1] * u[i];
    }
    double jm = 0.0, ih2 = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      double y = base_.nodes[i], w = base_.weights[i] * rm[i];
      jm += w * y;
      ih2 += w * (1.0 - y) * (1.0 - y) / y;
    }
    Jm_[m] = jm;
    Ih2_[m] = ih2;
    // C1(q,m), C2(q,m) by running powers of (1-y)
    std::vector<double> pw(nn, 1.0);
    for (long q = 0; q <= Q; ++q) {
      double c1 = 0.0, c2 = 0.0;
      for (std::size_t i = 0; i < nn; ++i) {
        double w = base_.weights[i] * rm[i] * pw[i];
        c1 += w;
        c2 += w * base_.nodes[i];
        pw[i] *= 1.0 - base_.nodes[i];
      }
      C1_[q][m] = c1;
      C2_[q][m] = c2;
    }
  }
  tables_n_ = n_max;
}

std::vector<double> DmrOracle::build_sl(long n, bool for_cross) const {
  std::vector<double> s(n, 0.0);
  for (long l = 0; l < n; ++l) {
    double acc = 0.0;
    for (long i = l + 1; i <= n; ++i) {
      long m = i - 1 - l;
      if (for_cross) {
        acc += C1_[n - i + 1][m];
      } else {
        acc += 2.0 - Jm_[m] - 2.0 * C1_[n - i + 1][m];
      }
    }
    s[l] = acc;
  }
  return s;
}

double DmrOracle::E0Sn2_at(double x, long n, const std::vector<double>& s_l) const {
  double w = 1.0 - x;
  double womn = one_minus_wpow(x, n);
  double A = (x + 2.0 * w) * w * womn / x - 2.0 * n * wpow(x, n + 1);
  double D = 0.0, wl = 1.0;
  for (long l = 0; l < n; ++l) {
    D += wl * s_l[l];
    wl *= w;
  }
  return A + x * D;
}

double DmrOracle::ESn2_centered_norm_pow(long n, double p) {
  ensure_tables(n);
  auto s_l = build_sl(n, false);
  const std::size_t nn = pi_q_.size();
  std::vector<double> vals(nn);
  double meanv = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    vals[i] = E0Sn2_at(pi_q_.nodes[i], n, s_l);
    meanv += pi_q_.weights[i] * vals[i];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < nn; ++i)
    s += pi_q_.weights[i] * std::pow(std::fabs(vals[i] - meanv), p / 2.0);
  return s;
}

// E(M_n^2 | Z_0 = x) assembled from the S_n^2 part, the cross term with
// h(Z_n) - h(Z_0), and the squared difference, with the individually
// divergent pieces cancelled analytically before quadrature.
double DmrOracle::E0Mn2_at(double x, long n, const std::vector<double>& s_l,
                           const std::vector<double>& s2_l) const {
  double w = 1.0 - x;
  double sn2 = E0Sn2_at(x, n, s_l);
  double d2 = 0.0, wl = 1.0;
  for (long l = 0; l < n; ++l) {
    d2 += wl * s2_l[l];
    wl *= w;
  }
  double cross = 2.0 * (n * wpow(x, n + 1) + x * d2);
  double delta_sing = -w * w * one_minus_wpow(x, n) / x;
  double ih = 0.0;
  for (long m = 0; m < n; ++m) ih += wpow(x, n - 1 - m) * Ih2_[m];
  return sn2 + cross + delta_sing + x * ih;
}

double DmrOracle::E_Mn2(long n) {
  ensure_tables(n);
  auto s_l = build_sl(n, false);
  auto s2_l = build_sl(n, true);
  double m = 0.0;
  for (std::size_t i = 0; i < pi_q_.size(); ++i)
    m += pi_q_.weights[i] * E0Mn2_at(pi_q_.nodes[i], n, s_l, s2_l);
  return m;
}

double DmrOracle::EMn2_centered_norm_pow(long n, double p) {
  ensure_tables(n);
  auto s_l = build_sl(n, false);
  auto s2_l = build_sl(n, true);
  const std::size_t nn = pi_q_.size();
  std::vector<double> vals(nn);
  double meanv = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    vals[i] = E0Mn2_at(pi_q_.nodes[i], n, s_l, s2_l);
    meanv += pi_q_.weights[i] * vals[i];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < nn; ++i)
    s += pi_q_.weights[i] * std::pow(std::fabs(vals[i] - meanv), p / 2.0);
  return s;
}

double DmrOracle::pair_centered_norm_pow(long j, long d, double p) {
  ensure_tables(j + 1);
  if (d > tables_n_) ensure_tables(d + 1);
  const std::size_t nn = pi_q_.size();
  std::vector<double> vals(nn);
  double meanv = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    double x = pi_q_.nodes[i];
    double v = wpow(x, j) * x * wpow(x, d);  // stay part of g_d at x
    double acc = 0.0;
    for (long m = 0; m < j; ++m) acc += wpow(x, j - 1 - m) * C2_[d][m];
    vals[i] = v + x * acc;
    meanv += pi_q_.weights[i] * vals[i];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < nn; ++i)
    s += pi_q_.weights[i] * std::pow(std::fabs(vals[i] - meanv), p / 2.0);
  return s;
}

double DmrOracle::pair_sup_norm_pow(long n, double p, const std::vector<long>& gaps) {
  double best = 0.0;
  for (long j : {n, n + std::max<long>(1, n / 2), 2 * n}) {
    for (long d : gaps) {
      if (d > n) continue;
      best = std::max(best, pair_centered_norm_pow(j, d, p));
    }
  }
  return best;
}

// ---------- conditional step law ----------

double DmrOracle::w_cdf(double w) const {
  double b = 2.0 * (a_ + 1.0);
  if (w <= -1.0) return 0.5 * std::pow(-w, -b);
  if (w < 1.0) return 0.5;
  return 1.0 - 0.5 * std::pow(w, -b);
}

double DmrOracle::w_quantile(double u) const {
  double b = 2.0 * (a_ + 1.0);
  if (u <= 0.0 || u >= 1.0) throw std::invalid_argument("w_quantile: u in (0,1)");
  if (u < 0.5) return -std::pow(2.0 * u, -1.0 / b);
  if (u == 0.5) return -1.0;
  return std::pow(2.0 * (1.0 - u), -1.0 / b);
}

double DmrOracle::d_atom_mass(double x_prev) const { return 1.0 - std::fabs(x_prev); }

double DmrOracle::d_cond_cdf(double x_prev, double t) const {
  double ax = std::fabs(x_prev);
  if (ax == 0.0) throw std::invalid_argument("state at atom zero");
  double c = -g_R(x_prev);
  double s0 = f(x_prev);
  return (1.0 - ax) * (t >= s0 ? 1.0 : 0.0) + ax * w_cdf(t - c);
}

double DmrOracle::d_cond_cdf_left(double x_prev, double t) const {
  double ax = std::fabs(x_prev);
  if (ax == 0.0) throw std::invalid_argument("state at atom zero");
  double c = -g_R(x_prev);
  double s0 = f(x_prev);
  return (1.0 - ax) * (t > s0 ? 1.0 : 0.0) + ax * w_cdf(t - c);
}

double DmrOracle::d_cond_quantile(double x_prev, double level) const {
  double ax = std::fabs(x_prev);
  if (ax == 0.0) throw std::invalid_argument("state at atom zero");
  double c = -g_R(x_prev);
  double s0 = f(x_prev);
  double w0 = 1.0 - ax;
  double l1 = ax * w_cdf(s0 - c);
  if (level <= l1) return c + w_quantile(std::max(1e-300, level / ax));
  if (level <= l1 + w0) return s0;
  double lv = (level - w0) / ax;
  return c + w_quantile(std::min(1.0 - 1e-16, lv));
}

}  // namespace siplab
