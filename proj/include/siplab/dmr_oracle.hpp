#pragma once

#include <vector>

#include "siplab/process.hpp"
#include "siplab/quadrature.hpp"

namespace siplab {

// Closed-form conditional-expectation machinery for the sticky-diagonal
// chain. Everything follows from two facts: odd observables satisfy
// E(g(Z_n) | Z_0) = (1-|Z_0|)^n g(Z_0), and after the first jump the state
// law is the jump-propagated family r_m (law of Z_m started from upsilon),
// which obeys the one-step density recursion
//   r_m(y) = (1-y) r_{m-1}(y) + J_{m-1} u(y),   J_m = int y r_m(y) dy,
// on the folded half-line (all laws here are symmetric).
class DmrOracle {
 public:
  explicit DmrOracle(const DmrSpec& spec, int panels = 28);

  double a() const { return a_; }

  // --- pointwise closed forms ---
  double cond_mean(double x, long n) const;            // E(X_n | Z_0 = x)
  double knf(double x, long i) const;                  // K^i f
  double P0_eval(double y_prev, double y_now, long i) const;
  double d_closed(double y_prev, double y_now) const;  // the martingale step
  double d_truncated(double y_prev, double y_now, long N) const;
  double d_truncation_error(double y_prev, double y_now, long N) const;
  double g_R(double x) const;                          // f(x)(1-|x|)/|x|
  double R_closed(double z0, double zn) const;         // S_n - M_n
  double tail_P0_sum(double y_prev, double y_now, long J) const;  // sum_{j>=J} P0(X_j)

  // --- exact norms (quadrature against the invariant law) ---
  double E0Xn_norm_pow(long n, double p) const;      // ||E_0(X_n)||_p^p
  double E0Xn_norm_pow_beta(long n, double p) const; // Beta-function route
  double ESn_norm_pow(long n, double p) const;       // ||E_0(S_n)||_p^p
  double X0EXn_norm_pow(long n, double p) const;     // ||X_0 E_0(X_n)||_{p/2}^{p/2}
  double P0_norm_pow(long k, double p) const;        // ||P_0(X_k)||_p^p
  double tail_P0_norm_pow(long J, double p) const;   // ||sum_{j>=J} P0(X_j)||_p^p
  double e_d_squared() const;                        // E(d^2)

  // --- second-moment conditional curves (r_m machinery) ---
  void ensure_tables(long n_max);
  // ||E(S_n^2|F_0) - E(S_n^2)||_{p/2}^{p/2}
  double ESn2_centered_norm_pow(long n, double p);
  // same for the approximating martingale M_n
  double EMn2_centered_norm_pow(long n, double p);
  double E_Mn2(long n);  // E(M_n^2), cross-check against n E(d^2)
  // ||E(X_j X_{j+d}|F_0) - E(X_j X_{j+d})||_{p/2}^{p/2}
  double pair_centered_norm_pow(long j, long d, double p);
  // sup over a probe set {j >= n} x {d in gaps}
  double pair_sup_norm_pow(long n, double p, const std::vector<long>& gaps);

  // --- conditional law of the martingale step given the previous state ---
  // mixture: atom at f(x) with mass 1-|x|, plus c(x) + W where W = f(Y)/|Y|,
  // Y ~ upsilon: P(|W| > w) = w^{-2(a+1)} on w >= 1, sign fair.
  double d_cond_cdf(double x_prev, double t) const;
  double d_cond_cdf_left(double x_prev, double t) const;
  double d_atom_value(double x_prev) const { return f(x_prev); }
  double d_atom_mass(double x_prev) const;
  double w_quantile(double u) const;    // quantile of W
  double w_cdf(double w) const;
  double d_cond_quantile(double x_prev, double level) const;

  const Quadrature& pi_quadrature() const { return pi_q_; }
  const Quadrature& ups_quadrature() const { return ups_q_; }

  static double f(double x) { return dmr_f(x); }

 private:
  double a_;
  Quadrature base_;   // log-panel nodes on (0,1]
  Quadrature pi_q_;   // weights include a x^{a-1}
  Quadrature ups_q_;  // weights include (a+1) x^a
  // r_m tables on the base nodes
  long tables_n_ = -1;
  std::vector<std::vector<double>> r_;  // r_[m][node]
  std::vector<double> Jm_;              // int y r_m
  std::vector<double> Ih2_;             // int (1-y)^2 / y r_m
  std::vector<std::vector<double>> C1_; // C1_[q][m] = int (1-y)^q r_m, q = 0..n
  std::vector<std::vector<double>> C2_; // C2_[q][m] = int y (1-y)^q r_m
  double E0Sn2_at(double x, long n, const std::vector<double>& s_l) const;
  double E0Mn2_at(double x, long n, const std::vector<double>& s_l,
                  const std::vector<double>& s2_l) const;
  std::vector<double> build_sl(long n, bool for_cross) const;
};

}  // namespace siplab
