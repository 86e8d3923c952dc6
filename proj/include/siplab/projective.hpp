#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "siplab/dependence.hpp"
#include "siplab/process.hpp"
#include "siplab/quantile.hpp"

namespace siplab {

// ---- martingale decomposition S = M + R along a path ----

struct MartingaleDecomposition {
  std::vector<double> d;          // martingale steps, d[k-1] at time k
  std::vector<double> M;          // partial sums of d
  std::vector<double> R;          // S - M
  std::vector<double> S;
  long truncation_N = 0;
  double truncation_error_bound = 0.0;
};

// d at step k truncates the projection series at N: sum_{i<=N} of
// K^i f(y_k) - K^{i+1} f(y_{k-1}). The per-family tail bound is evaluated
// along the actual path and must stay below tol.
MartingaleDecomposition build_decomposition(const ProcessSpec& spec,
                                            const TrajectoryBatch& batch,
                                            std::size_t replica, long N_trunc,
                                            double tol = 1e-6);

// P_0(X_i) as a function of (state at -1, state at 0).
std::function<double(double, double)> projection_P0(const ProcessSpec& spec, long i);

// ---- projective norm curves ----

// || E(S_n | F_0) ||_p for each n (exact route per family).
std::vector<double> projective_norm_ESn(const ProcessSpec& spec,
                                        const std::vector<long>& ns, double p);
// Monte Carlo fallback (nested conditional means); returns values and stderrs.
struct McCurve {
  std::vector<double> values;
  std::vector<double> stderrs;
};
McCurve projective_norm_ESn_mc(const ProcessSpec& spec, const std::vector<long>& ns,
                               double p, std::size_t outer, std::size_t inner,
                               std::uint64_t seed);

// || E(S_n^2 | F_0) - E(S_n^2) ||_{p/2} for each n.
std::vector<double> projective_norm_ESn2(const ProcessSpec& spec,
                                         const std::vector<long>& ns, double p);

// ---- condition series ----

enum class Verdict { converges, diverges, inconclusive };
std::string verdict_name(Verdict v);

struct SeriesDiagnostic {
  std::string condition_id;
  std::map<std::string, double> params;
  long n_max = 0;
  std::vector<long> grid;                // dyadic
  std::vector<double> terms;             // term at each grid point
  std::vector<double> partial_sums;      // cumulative over all n <= grid point
  double term_exponent = 0.0;
  double term_exponent_stderr = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string notes;

  std::string to_json() const;
};

// Generic driver: dyadic grid 2,4,...,n_max; partial sums accumulate every
// integer term when `dense` (cheap closed forms), otherwise by log-log
// interpolation of the dyadic skeleton. Verdict: fitted term exponent e on
// the upper half of the grid; converges iff e <= -1.05 and the octave
// increments of the partial sums are nonincreasing, diverges iff e >= -0.95.
SeriesDiagnostic diagnose_series(const std::string& id,
                                 const std::function<double(long)>& term,
                                 long n_max, bool dense,
                                 const std::map<std::string, double>& params = {});

// Condition evaluators. Log-weight convention throughout:
// beta_n = n^2 (log n)^{(t-1)p/2}.
struct ConditionInputs {
  double p = 3.0;
  double t = 1.0;
  long n_max = 1024;
  std::optional<ProcessSpec> process;
  // ingredient curves / quantile machinery for coefficient-based conditions
  std::optional<CoefficientCurve> coefficient;   // lambda_2 or alpha_2 curve
  std::optional<QuantileFunction> quantile;
  double gamma_exponent = 0.5;   // the free gamma of the phi/alpha corollaries
  double mixing_r = 5.0;         // r of condalphafort
};

SeriesDiagnostic evaluate_condition(const std::string& condition_id,
                                    const ConditionInputs& in);

// ---- predicates and closed-form exponent identities ----

struct CondfapResult {
  bool holds = false;
  double lhs = 0.0, rhs = 0.0;
  bool moment_side = false;  // S > 1 + delta
};
CondfapResult condfap_predicate(double S, double delta, double gamma, double p);

double lilcond_delta(double p);                // p + 1 - 2/p
double lilcond_bv_gamma_threshold(double p);   // 1/(p+1-2/p)
bool lilcond_bv_admissible(double gamma, double p);
// numeric check of the tail-function integral for H(x) = min(1, x^{-r})
SeriesDiagnostic lilcond_integral_power_tail(double r, double gamma, double p);

double circle_exponent_s(double p);
double circle_gamma_exponent(double p);
bool circle_gamma_identity_holds(double p, double tol = 1e-12);

// weights v_n of the martingale approximation criterion with
// psi(n) = n^{2/p} (log n)^t
double condcarremart_vn(long n, double p, double t, long tail_cutoff = 1 << 22);

// ---- identity checks ----

// max |residual| of the four-term decomposition of R_n over simulated paths
double verify_prop21(const DmrSpec& spec, long n, long N, std::size_t paths,
                     std::uint64_t seed);

struct Lemma51Result {
  std::vector<long> ns;
  std::vector<double> lhs, rhs, ratio;
  RateFit trend;  // log ratio vs log n
  double max_ratio = 0.0;
};
// lhs(n) = sum_{k>=2n} ||P_0(X_k)||_p^q, rhs(n) = sum_{k>=n} ||E_0(X_k)||_p^q k^{-q/p},
// both truncated at k_max with fitted power tails appended.
Lemma51Result verify_lemma51(const DmrSpec& spec, const std::vector<long>& ns,
                             double p, double q, long k_max = 1 << 15);

}  // namespace siplab
