#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "siplab/process.hpp"
#include "siplab/stats.hpp"
#include "siplab/transfer.hpp"

namespace siplab {

struct CoefficientCurve {
  std::vector<long> lags;
  std::vector<double> values;
  std::string estimator;              // exact-kernel | binned-mc | coupling
  std::vector<double> stderrs;        // optional, parallel to values

  void write_csv(const std::filesystem::path& path) const;
  RateFit rate_fit() const;
};

// gamma(n) = || E(X_n | F_0) ||_1.
// exact: dmr closed form, circle Fourier, pm transfer matrix, linear
// (gaussian innovations) filter algebra; degenerate iid filters give zeros.
CoefficientCurve gamma_coefficient_exact(const ProcessSpec& spec,
                                         const std::vector<long>& lags);
// binned conditional means over replicated (state_0, X_n) pairs
CoefficientCurve gamma_coefficient_mc(const ProcessSpec& spec,
                                      const std::vector<long>& lags,
                                      std::size_t replicas, int bins,
                                      std::uint64_t seed);

struct AlphaOptions {
  int x_grid = 64;                 // threshold grid (invariant-law quantiles)
  std::vector<long> gaps = {0, 1, 2, 4, 8};
  int dmr_cells = 1024;            // cell count for the sticky-chain matrix
};

// alpha_{k,Y}(n) for k in {1,2} via transfer-matrix powers: sup over the
// threshold grid (and over pair gaps for k = 2) of the L1 norm of the
// centered conditional expectation of products of centered indicators.
// alpha(0) = 1 by definition.
CoefficientCurve alpha_k_coefficient(const ProcessSpec& spec, int k,
                                     const std::vector<long>& lags,
                                     const AlphaOptions& opts = {});

// Coupling estimate of tau_1 / tau_2 for the autoregressive Lipschitz model:
// two chains share innovations, one restarts from an independent stationary
// draw. tau_2 maximizes the pair functional over sampled index pairs.
struct TauCurves {
  CoefficientCurve tau1;
  CoefficientCurve tau2;
};
TauCurves tau_coupling(const ArlSpec& spec, const std::vector<long>& lags,
                       std::size_t replicas, std::uint64_t seed);

struct ThetaOptions {
  int cells = 512;
  int value_grid = 192;            // t-grid for the CDF distance
  std::vector<long> gaps = {0, 1, 4};
};

struct ThetaCurves {
  CoefficientCurve theta2;
  CoefficientCurve gamma;
  CoefficientCurve lambda2;        // max(theta2, gamma)
};

// theta_2 via the 1-d Wasserstein identity: the sup over 1-Lipschitz f of
// the centered conditional expectation equals the integral of the absolute
// CDF difference between the conditional and unconditional laws of
// X_i +- X_j. Markov families with a cell model only.
ThetaCurves theta2_lambda2(const ProcessSpec& spec, const std::vector<long>& lags,
                           const ThetaOptions& opts = {});

}  // namespace siplab
