#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "siplab/process.hpp"

namespace siplab {

// Partition of an interval into cells. Meshes are graded toward the sticky
// part of the state space (x = 0) so polynomial escape rates survive the
// discretization out to the lags probed by the rate fits.
struct CellMesh {
  std::vector<double> edges;  // size m+1, increasing

  int size() const { return static_cast<int>(edges.size()) - 1; }
  double lo(int i) const { return edges[i]; }
  double hi(int i) const { return edges[i + 1]; }
  double width(int i) const { return edges[i + 1] - edges[i]; }
  double center(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  int locate(double x) const;  // cell containing x (clamped)
};

CellMesh graded_mesh_unit(int m, double grading);       // [0,1], edges (j/m)^grading
CellMesh graded_mesh_symmetric(int m, double grading);  // [-1,1], graded toward 0

// Discretized stationary Markov chain: row-stochastic transition matrix K
// acting on functions, (K g)(i) = sum_j K(i,j) g(j) = E(g(Y_1) | Y_0 in C_i),
// plus the stationary cell masses.
struct ChainModel {
  CellMesh mesh;
  std::vector<double> pi;                  // stationary cell masses, sums to 1
  Eigen::MatrixXd K;                       // m x m, rows sum to 1

  int cells() const { return mesh.size(); }
  // out = K * g (conditional expectation one step ahead)
  void apply(const std::vector<double>& g, std::vector<double>& out) const;
  std::vector<double> cell_average(const std::function<double(double)>& f) const;
  std::vector<double> centered(const std::vector<double>& g) const;  // g - pi.g
  double pi_dot(const std::vector<double>& g) const;
  double lp_norm_pi(const std::vector<double>& g, double p) const;
};

// Ulam matrix of the map itself: P(i,j) = m(C_i cap T^{-1} C_j) / m(C_i).
Eigen::MatrixXd pm_ulam_map_matrix(const PmSpec& s, const CellMesh& mesh);

// Stationary chain model for the intermittent-map chain: Ulam matrix of T,
// its stationary vector, then the time reversal (the chain kernel is the
// Perron-Frobenius operator, and the chain is the reversed orbit).
ChainModel pm_chain_model(const PmSpec& s);

// Exact-kernel cell chain for the sticky-diagonal chain on [-1,1]:
// K(i,.) = (1-|c_i|) delta_i + |c_i| * upsilon-cell-masses, with exact cell
// masses for both the invariant law and upsilon.
ChainModel dmr_chain_model(const DmrSpec& s, int cells);

// nu(1_{x<=1/2}) from the Ulam stationary vector (used to center pm paths).
double pm_invariant_mean_indicator(const PmSpec& s);

// Ulam invariant density estimate per cell: pi_i / width_i at cell centers.
struct DensityEstimate {
  std::vector<double> centers;
  std::vector<double> density;
};
DensityEstimate pm_ulam_density(const PmSpec& s);

// Deterministic parallel matrix product: OpenMP over row blocks, each block a
// single-threaded product, so results are identical at any worker count.
Eigen::MatrixXd par_matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Eigen::MatrixXd serial_matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// K^(2^j) for j = 0..levels-1 by repeated squaring.
struct PowerChain {
  std::vector<Eigen::MatrixXd> pw;
  const Eigen::MatrixXd& power_of_two(int j) const { return pw.at(j); }
  // K^n for n with a short binary expansion along the chain
  Eigen::MatrixXd power(long n) const;
};
PowerChain make_power_chain(const ChainModel& model, int levels);

}  // namespace siplab
