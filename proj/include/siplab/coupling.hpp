#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "siplab/process.hpp"
#include "siplab/rng.hpp"
#include "siplab/stats.hpp"

namespace siplab {

// A centered step law, enough structure for both coupling constructions:
// full CDF (with left limits for the randomized probability integral
// transform) and quantiles (for boundary sampling in the exit embedding).
class CenteredLaw {
 public:
  virtual ~CenteredLaw() = default;
  virtual double cdf(double t) const = 0;
  virtual double cdf_left(double t) const = 0;
  virtual double quantile(double level) const = 0;
  virtual double prob_neg() const { return cdf_left(0.0); }
  virtual double prob_pos() const { return 1.0 - cdf(0.0); }
  virtual double atom_at_zero() const { return cdf(0.0) - cdf_left(0.0); }
};

std::unique_ptr<CenteredLaw> two_point_law(double lo, double hi);  // centered pair
std::unique_ptr<CenteredLaw> uniform_centered_law(double half_width);
std::unique_ptr<CenteredLaw> gaussian_law(double sigma);

// A martingale-difference process presented one step at a time: the law of
// the next step given the current state, and the state update given the
// realized step. Stateless walks ignore the state.
class StepLawProcess {
 public:
  virtual ~StepLawProcess() = default;
  virtual std::unique_ptr<CenteredLaw> law(double state) const = 0;
  virtual double next_state(double state, double step) const { return state; }
  virtual double initial_state(Rng& rng) const { return 0.0; }
  virtual double step_variance() const = 0;  // E(d^2) under stationarity
};

std::unique_ptr<StepLawProcess> rademacher_process();
std::unique_ptr<StepLawProcess> iid_uniform_process();   // Uniform(-sqrt3, sqrt3)
std::unique_ptr<StepLawProcess> iid_gaussian_process();
std::unique_ptr<StepLawProcess> dmr_step_process(const DmrSpec& spec);

// ---- quantile coupling ----
// U_i = randomized conditional PIT of d_i (exactly uniform, atoms handled by
// the distributional transform), Z_i = sigma * Phi^{-1}(U_i).
struct QuantileCoupleResult {
  std::vector<double> z;        // coupled gaussian steps
  std::vector<double> u;        // the PIT values (for uniformity checks)
};
QuantileCoupleResult quantile_couple(const ProcessSpec& spec,
                                     const TrajectoryBatch& batch,
                                     std::size_t replica, double sigma2, Rng& rng);
QuantileCoupleResult quantile_couple_iid(const StepLawProcess& proc,
                                         const std::vector<double>& d_path,
                                         double sigma2, Rng& rng);

// ---- Skorokhod exit-time embedding ----
struct SkorokhodOptions {
  double sigma2 = 1.0;
  int dt_divisor = 256;        // base step sigma^2 / dt_divisor
  int refine_levels = 10;      // bridge bisection down to dt / 2^levels
  double tail_eps = 1e-6;      // boundary proposals truncated at this tail
  long max_rejections = 10000;
};

struct SkorokhodPath {
  std::vector<double> d;       // embedded martingale steps (law-equal copy)
  std::vector<double> m;       // partial sums: M_k = B(T_k) exactly
  std::vector<double> taus;    // per-step exit durations
  std::vector<double> z;       // slot increments B(k sigma^2) - B((k-1) sigma^2)
  double truncated_mass = 0.0; // total proposal mass cut by tail_eps
};

// Regenerates the martingale inside a Brownian path: per step draws the exit
// pair from the (v-u)-biased product law by rejection, runs the Brownian
// grid to the first exit (bridge crossing test plus bisection refinement
// near the boundary) and snaps to the hit boundary.
SkorokhodPath skorokhod_embed(const StepLawProcess& proc, long n_steps,
                              const SkorokhodOptions& opts, Rng& rng);

// ---- sup deviation measurement ----
struct CouplingResult {
  std::string method;                  // quantile-per-step | skorokhod-exit
  std::vector<long> horizons;
  std::vector<double> mean_sup;
  std::vector<double> median_sup;
  std::vector<double> stderr_sup;
  std::vector<std::vector<double>> raw;  // per replica, per horizon
  double sigma2_used = 0.0;
  RateFit rate;

  void write_csv(const std::filesystem::path& path) const;
  std::string to_json() const;
};

// per horizon h: max_{k<=h} |S_k - sum_{i<=k} Z_i|
std::vector<double> measure_sup_deviation(const std::vector<double>& s_steps,
                                          const std::vector<double>& z_steps,
                                          const std::vector<long>& horizons);

struct CoupleExperimentOptions {
  std::string family = "rademacher";  // rademacher | iid_gauss | iid_uniform | dmr
  DmrSpec dmr;
  std::string method = "skorokhod";   // skorokhod | quantile
  std::vector<long> horizons;
  std::size_t replicas = 16;
  std::uint64_t seed = 1;
  SkorokhodOptions sk;
};

CouplingResult couple_experiment(const CoupleExperimentOptions& opts);

}  // namespace siplab
