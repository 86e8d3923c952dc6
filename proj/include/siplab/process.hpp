#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "siplab/batch.hpp"
#include "siplab/rng.hpp"

namespace siplab {

// ---- reversible Markov chain on [-1,1] with a sticky diagonal ----
// Kernel Q(x,.) = (1-|x|) delta_x + |x| upsilon, with upsilon the symmetric
// law upsilon([0,t]) = t^{a+1}/2 (the extremal representative of the tail
// bound, density (a+1)|t|^a / 2). Invariant law has density (a/2)|x|^{a-1}.
// Observable f(x) = sign(x) sqrt(|x|).
struct DmrSpec {
  double a = 1.0;
  std::string f_id = "sqrt_sign";
};

// Cosine series with real coefficients: f(x) = sum_{k=1..K} 2 c_k cos(2 pi k x).
// No constant term, so m(f) = 0 and path values are already centered.
struct FourierSpec {
  std::vector<double> coeffs;  // coeffs[k-1] = c_k

  double eval(double x) const;
  int k_trunc() const { return static_cast<int>(coeffs.size()); }
  static FourierSpec single_mode(int k, double c);
  // c_k = k^{-s} (log(1+k))^{-(1+eps)}
  static FourierSpec power_law(double s, double eps, int k_trunc);
};

// ---- symmetric random walk on the circle: xi_{k+1} = xi_k +- a mod 1 ----
struct CircleSpec {
  std::string a_id = "golden";
  FourierSpec fourier = FourierSpec::power_law(2.2018504251546631, 0.5, 64);
};

// ---- autoregressive Lipschitz model Y_n = h(Y_{n-1}) + eps_n ----
// h(t) = t - sign(t) C ((1+|t|)^{1-delta} - 1)/(1-delta), h(t) = (1-C) t for
// delta = 0. Observable sign(y) min(|y|,cap)^{holder_gamma}, odd, so the path
// is centered by symmetry.
struct ArlSpec {
  double C = 0.5;
  double delta = 0.0;
  double S = 4.0;                    // moment exponent the innovation must carry
  std::string innovation = "gaussian";  // gaussian | student_t | sym_pareto
  int t_dof = 5;
  double pareto_r = 5.0;
  double holder_gamma = 1.0;
  double cap = std::numeric_limits<double>::infinity();
  long burn_in = 4096;
};

// ---- Markov chain dual to the intermittent interval map ----
// T(x) = x(1+2^g x^g) on [0,1/2), 2x-1 on [1/2,1]; the stationary chain with
// the Perron-Frobenius kernel is the time reversal of the orbit, so a path is
// a reversed orbit started (approximately) from the invariant law.
struct PmSpec {
  double gamma = 0.25;
  std::string f_id = "bv_indicator";  // 1_{x <= 1/2} minus its mean
  int ulam_cells = 2048;
  long burn_in = 10000;
};

// ---- linear filter of iid innovations ----
// a_0 = 1 + u_0, a_k = k^{-(alpha+1)} + (-1)^k u_k.
struct LinearSpec {
  double alpha = 1.0;
  std::string u_seq = "zero";  // zero | alt06 (u_k = (k+1)^{-0.6}) | iid (a = delta_0)
  std::string innovation = "gaussian";
  int t_dof = 5;
  long lag_trunc = 0;  // 0 = choose from the filter tail, error if unattainable
};

using ProcessSpec = std::variant<DmrSpec, CircleSpec, ArlSpec, PmSpec, LinearSpec>;

std::string family_name(const ProcessSpec& spec);
std::string params_json(const ProcessSpec& spec);
void validate(const ProcessSpec& spec);

// Observables / model functions shared with the analytic oracles.
double dmr_f(double x);                       // sign(x) sqrt(|x|)
double arl_h(const ArlSpec& s, double t);
double arl_observable(const ArlSpec& s, double y);
double arl_innovation(const ArlSpec& s, Rng& rng);
double pm_map(double gamma, double x);
double pm_map_left_inverse(double gamma, double y);  // bracketed Newton
double circle_rotation(const CircleSpec& s);         // the value of a

// sigma^2 = sum_{k != 0} |fhat(k)|^2 (1+cos(2 pi k a))/(1-cos(2 pi k a)),
// summed over the truncation. Throws "resonant frequency" if some
// cos(2 pi k a) is numerically 1 (float pathology guard; cannot happen for
// irrational a in exact arithmetic).
double circle_sigma2_exact(const CircleSpec& s);
double circle_sigma2_from_eigenvalues(const std::vector<double>& coeffs,
                                      const std::vector<double>& lambdas);

// Filter coefficients a_0..a_J; throws if the requested relative l2 tail
// target cannot be met below the cap.
std::vector<double> linear_filter(const LinearSpec& s, double tail_rel_target = 1e-6,
                                  long cap = 1 << 20);

// Single stationary rows. `states` has n+1 slots (time 0..n), `xs` has n.
void dmr_sample_path(const DmrSpec&, long n, Rng&, double* states, double* xs);
void circle_sample_path(const CircleSpec&, long n, Rng&, double* states, double* xs);
void arl_sample_path(const ArlSpec&, long n, Rng&, double* states, double* xs);
void pm_sample_path(const PmSpec&, long n, Rng&, double* states, double* xs,
                    double f_mean);
void linear_sample_path(const LinearSpec&, long n, long lag_trunc,
                        const std::vector<double>& filter, Rng&, double* innov,
                        double* xs);

// Replica batch; the parallel version runs replicas under OpenMP with one
// SeedStream per replica and is bit-identical to the serial reference at any
// worker count.
TrajectoryBatch simulate_batch(const ProcessSpec&, long n, std::size_t replicas,
                               std::uint64_t root_seed);
TrajectoryBatch simulate_batch_serial(const ProcessSpec&, long n, std::size_t replicas,
                                      std::uint64_t root_seed);

// Stream-index domains, so different subsystems never reuse a replica stream.
namespace stream_domain {
constexpr std::uint64_t kSimulate = 0;
constexpr std::uint64_t kCoupling = 1'000'000'000ULL;
constexpr std::uint64_t kTau = 2'000'000'000ULL;
constexpr std::uint64_t kMisc = 3'000'000'000ULL;
}  // namespace stream_domain

}  // namespace siplab
