#include "siplab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <omp.h>

#include "siplab/quadrature.hpp"

namespace siplab {

int CellMesh::locate(double x) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  int i = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(i, 0, size() - 1);
}

CellMesh graded_mesh_unit(int m, double grading) {
  CellMesh mesh;
  mesh.edges.resize(m + 1);
  for (int j = 0; j <= m; ++j)
    mesh.edges[j] = std::pow(static_cast<double>(j) / m, grading);
  mesh.edges[0] = 0.0;
  mesh.edges[m] = 1.0;
  return mesh;
}

CellMesh graded_mesh_symmetric(int m, double grading) {
  if (m % 2 != 0) throw std::invalid_argument("symmetric mesh needs even cell count");
  CellMesh half = graded_mesh_unit(m / 2, grading);
  CellMesh mesh;
  mesh.edges.resize(m + 1);
  for (int j = 0; j <= m / 2; ++j) {
    mesh.edges[m / 2 + j] = half.edges[j];
    mesh.edges[m / 2 - j] = -half.edges[j];
  }
  return mesh;
}

void ChainModel::apply(const std::vector<double>& g, std::vector<double>& out) const {
  Eigen::Map<const Eigen::VectorXd> gv(g.data(), g.size());
  out.resize(g.size());
  Eigen::Map<Eigen::VectorXd> ov(out.data(), out.size());
  ov.noalias() = K * gv;
}

std::vector<double> ChainModel::cell_average(
    const std::function<double(double)>& f) const {
  // 4-point Gauss-Legendre per cell; the within-cell law is approximated as
  // uniform, consistent with the Ulam construction itself
  std::vector<double> v(cells());
  static const double xs[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
  static const double ws[4] = {0.3478548451374538, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374538};
  for (int i = 0; i < cells(); ++i) {
    double c = mesh.center(i), h = 0.5 * mesh.width(i), acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += ws[k] * f(c + h * xs[k]);
    v[i] = 0.5 * acc;
  }
  return v;
}

std::vector<double> ChainModel::centered(const std::vector<double>& g) const {
  double m = pi_dot(g);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] - m;
  return out;
}

double ChainModel::pi_dot(const std::vector<double>& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += pi[i] * g[i];
  return s;
}

double ChainModel::lp_norm_pi(const std::vector<double>& g, double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += pi[i] * std::pow(std::fabs(g[i]), p);
  return std::pow(s, 1.0 / p);
}

// ---------- intermittent map Ulam ----------

Eigen::MatrixXd pm_ulam_map_matrix(const PmSpec& s, const CellMesh& mesh) {
  const int m = mesh.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, m);
  // Left branch inverse L: [0,1] -> [0,1/2]; right branch inverse R(y)=(y+1)/2.
  auto left_inv = [&](double y) { return pm_map_left_inverse(s.gamma, y); };
  for (int j = 0; j < m; ++j) {
    // preimage of target cell C_j under each branch
    double y0 = mesh.lo(j), y1 = mesh.hi(j);
    double l0 = left_inv(y0), l1 = left_inv(y1);
    double r0 = 0.5 * (y0 + 1.0), r1 = 0.5 * (y1 + 1.0);
    for (auto [p0, p1] : {std::pair{l0, l1}, std::pair{r0, r1}}) {
      if (p1 <= p0) continue;
      int i0 = mesh.locate(p0), i1 = mesh.locate(std::nextafter(p1, p0));
      for (int i = i0; i <= i1; ++i) {
        double overlap =
            std::min(p1, mesh.hi(i)) - std::max(p0, mesh.lo(i));
        if (overlap > 0.0) P(i, j) += overlap / mesh.width(i);
      }
    }
  }
  // rows sum to 1 up to the inverse tolerance; renormalize
  for (int i = 0; i < m; ++i) {
    double rs = P.row(i).sum();
    if (rs <= 0.0) throw std::runtime_error("empty Ulam row " + std::to_string(i));
    P.row(i) /= rs;
  }
  return P;
}

namespace {

std::vector<double> stationary_of(const Eigen::MatrixXd& P) {
  // mu P = mu, sum mu = 1, by direct solve (power iteration converges far
  // too slowly near a neutral fixed point). One balance equation is replaced
  // by the normalization.
  const int m = static_cast<int>(P.rows());
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(m, m);
  A.row(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(0) = 1.0;
  Eigen::VectorXd mu = A.partialPivLu().solve(b);
  // clip tiny negative round-off and renormalize
  for (int i = 0; i < m; ++i) mu(i) = std::max(mu(i), 0.0);
  mu /= mu.sum();
  double residual = ((P.transpose() * mu) - mu).cwiseAbs().sum();
  if (!(residual < 1e-8))
    throw std::runtime_error("stationary solve failed, residual " +
                             std::to_string(residual));
  return {mu.data(), mu.data() + m};
}

struct PmCacheKey {
  double gamma;
  int cells;
  bool operator<(const PmCacheKey& o) const {
    return std::tie(gamma, cells) < std::tie(o.gamma, o.cells);
  }
};

std::map<PmCacheKey, ChainModel> g_pm_cache;
std::mutex g_pm_mutex;

}  // namespace

ChainModel pm_chain_model(const PmSpec& s) {
  {
    std::lock_guard<std::mutex> lk(g_pm_mutex);
    auto it = g_pm_cache.find({s.gamma, s.ulam_cells});
    if (it != g_pm_cache.end()) return it->second;
  }
  ChainModel model;
  model.mesh = graded_mesh_unit(s.ulam_cells, 2.0);
  Eigen::MatrixXd P = pm_ulam_map_matrix(s, model.mesh);
  model.pi = stationary_of(P);
  const int m = model.mesh.size();
  // time reversal: K(i,j) = pi_j P(j,i) / pi_i
  model.K.resize(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) model.K(i, j) = model.pi[j] * P(j, i);
    double rs = model.K.row(i).sum();
    model.K.row(i) /= rs;
  }
  {
    std::lock_guard<std::mutex> lk(g_pm_mutex);
    g_pm_cache.emplace(PmCacheKey{s.gamma, s.ulam_cells}, model);
  }
  return model;
}

double pm_invariant_mean_indicator(const PmSpec& s) {
  ChainModel model = pm_chain_model(s);
  double mass = 0.0;
  for (int i = 0; i < model.cells(); ++i)
    if (model.mesh.hi(i) <= 0.5 + 1e-15) mass += model.pi[i];
  return mass;
}

DensityEstimate pm_ulam_density(const PmSpec& s) {
  ChainModel model = pm_chain_model(s);
  DensityEstimate d;
  for (int i = 0; i < model.cells(); ++i) {
    d.centers.push_back(model.mesh.center(i));
    d.density.push_back(model.pi[i] / model.mesh.width(i));
  }
  return d;
}

// ---------- sticky-diagonal chain cells ----------

ChainModel dmr_chain_model(const DmrSpec& s, int cells) {
  ChainModel model;
  model.mesh = graded_mesh_symmetric(cells, 2.0);
  const int m = cells;
  const double a = s.a;
  model.pi.resize(m);
  std::vector<double> ups(m), rep(m);
  for (int i = 0; i < m; ++i) {
    double lo = model.mesh.lo(i), hi = model.mesh.hi(i);
    double alo = std::min(std::fabs(lo), std::fabs(hi));
    double ahi = std::max(std::fabs(lo), std::fabs(hi));
    model.pi[i] = 0.5 * (std::pow(ahi, a) - std::pow(alo, a));
    ups[i] = 0.5 * (std::pow(ahi, a + 1.0) - std::pow(alo, a + 1.0));
    // invariant-law centroid of |x| within the cell, sign restored
    double num = a / (a + 1.0) * (std::pow(ahi, a + 1.0) - std::pow(alo, a + 1.0));
    double den = std::pow(ahi, a) - std::pow(alo, a);
    double c = den > 0.0 ? num / den : model.mesh.center(i);
    rep[i] = (lo + hi >= 0.0) ? c : -c;
  }
  model.K.resize(m, m);
  for (int i = 0; i < m; ++i) {
    double jump = std::fabs(rep[i]);
    for (int j = 0; j < m; ++j) model.K(i, j) = jump * ups[j];
    model.K(i, i) += 1.0 - jump;
    model.K.row(i) /= model.K.row(i).sum();
  }
  return model;
}

// ---------- deterministic parallel powers ----------

Eigen::MatrixXd serial_matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return A * B;
}

Eigen::MatrixXd par_matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd C(A.rows(), B.cols());
  const int rows = static_cast<int>(A.rows());
  const int nb = std::max(1, std::min(64, rows / 32));
  const int chunk = (rows + nb - 1) / nb;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < nb; ++b) {
    int r0 = b * chunk;
    int len = std::min(chunk, rows - r0);
    if (len > 0) C.middleRows(r0, len).noalias() = A.middleRows(r0, len) * B;
  }
  return C;
}

PowerChain make_power_chain(const ChainModel& model, int levels) {
  PowerChain pc;
  pc.pw.reserve(levels);
  pc.pw.push_back(model.K);
  for (int j = 1; j < levels; ++j)
    pc.pw.push_back(par_matmul(pc.pw.back(), pc.pw.back()));
  return pc;
}

Eigen::MatrixXd PowerChain::power(long n) const {
  if (n < 1) throw std::invalid_argument("power needs n >= 1");
  Eigen::MatrixXd acc;
  bool have = false;
  for (std::size_t j = 0; j < pw.size() && n > 0; ++j) {
    if (n & 1) {
      acc = have ? par_matmul(acc, pw[j]) : pw[j];
      have = true;
    }
    n >>= 1;
  }
  if (n > 0) throw std::invalid_argument("power exceeds the chain's range");
  return acc;
}

}  // namespace siplab
