#include "siplab/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <omp.h>

#include "circle_math.hpp"
#include "siplab/dmr_oracle.hpp"
#include "siplab/io.hpp"
#include "siplab/numtheory.hpp"
#include "siplab/quadrature.hpp"

namespace siplab {

using circle_math::is_iid_linear;

namespace {

std::vector<double> weighted_coeffs(const std::vector<double>& coeffs,
                                    const std::vector<double>& mult) {
  std::vector<double> w(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) w[k] = coeffs[k] * mult[k];
  return w;
}

}  // namespace

void CoefficientCurve::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  w.header({"lag", "value", "stderr", "estimator"});
  for (std::size_t i = 0; i < lags.size(); ++i)
    w.raw_row({std::to_string(lags[i]), CsvWriter::format_double(values[i]),
               CsvWriter::format_double(i < stderrs.size() ? stderrs[i] : 0.0),
               estimator});
}

RateFit CoefficientCurve::rate_fit() const {
  std::vector<double> ns, ys;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] > 0 && values[i] > 0.0) {
      ns.push_back(static_cast<double>(lags[i]));
      ys.push_back(values[i]);
    }
  }
  return loglog_rate_fit(ns, ys);
}

// ---------- gamma ----------

CoefficientCurve gamma_coefficient_exact(const ProcessSpec& spec,
                                         const std::vector<long>& lags) {
  CoefficientCurve curve;
  curve.lags = lags;
  curve.estimator = "exact-kernel";
  curve.values.resize(lags.size());

  if (is_iid_linear(spec)) {
    for (std::size_t i = 0; i < lags.size(); ++i)
      curve.values[i] = lags[i] >= 1 ? 0.0 : 1.0;
    return curve;
  }
  if (const auto* dmr = std::get_if<DmrSpec>(&spec)) {
    DmrOracle oracle(*dmr);
    for (std::size_t i = 0; i < lags.size(); ++i)
      curve.values[i] = oracle.E0Xn_norm_pow(lags[i], 1.0);
    return curve;
  }
  if (const auto* cir = std::get_if<CircleSpec>(&spec)) {
    auto lam = circle_math::eigenvalues(*cir);
    for (std::size_t i = 0; i < lags.size(); ++i) {
      std::vector<double> mult(lam.size());
      for (std::size_t k = 0; k < lam.size(); ++k)
        mult[k] = std::pow(lam[k], static_cast<double>(lags[i]));
      curve.values[i] =
          circle_math::torus_lp_norm(weighted_coeffs(cir->fourier.coeffs, mult), 1.0);
    }
    return curve;
  }
  if (const auto* pm = std::get_if<PmSpec>(&spec)) {
    ChainModel model = pm_chain_model(*pm);
    double mean = pm_invariant_mean_indicator(*pm);
    std::vector<double> v(model.cells());
    for (int c = 0; c < model.cells(); ++c)
      v[c] = (model.mesh.hi(c) <= 0.5 + 1e-15 ? 1.0 : 0.0) - mean;
    long done = 0;
    std::vector<double> tmp;
    for (std::size_t i = 0; i < lags.size(); ++i) {
      while (done < lags[i]) {
        model.apply(v, tmp);
        v.swap(tmp);
        ++done;
      }
      double s = 0.0;
      for (int c = 0; c < model.cells(); ++c) s += model.pi[c] * std::fabs(v[c]);
      curve.values[i] = s;
    }
    return curve;
  }
  if (const auto* lin = std::get_if<LinearSpec>(&spec)) {
    if (lin->innovation != "gaussian")
      throw std::invalid_argument("gamma exact for linear needs gaussian innovations");
    auto a = linear_filter(*lin);
    for (std::size_t i = 0; i < lags.size(); ++i) {
      double s2 = 0.0;
      for (std::size_t j = lags[i]; j < a.size(); ++j) s2 += a[j] * a[j];
      curve.values[i] = std::sqrt(2.0 / std::numbers::pi) * std::sqrt(s2);
    }
    return curve;
  }
  throw std::invalid_argument("no kernel oracle for family " + family_name(spec));
}

CoefficientCurve gamma_coefficient_mc(const ProcessSpec& spec,
                                      const std::vector<long>& lags,
                                      std::size_t replicas, int bins,
                                      std::uint64_t seed) {
  long max_lag = *std::max_element(lags.begin(), lags.end());
  TrajectoryBatch batch = simulate_batch(spec, max_lag, replicas, seed);
  if (batch.states.empty())
    throw std::invalid_argument("binned-mc gamma needs a Markov family");

  // bin replicas by the initial state's rank
  std::vector<std::size_t> order(replicas);
  for (std::size_t r = 0; r < replicas; ++r) order[r] = r;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch.state(a, 0) < batch.state(b, 0);
  });

  CoefficientCurve curve;
  curve.lags = lags;
  curve.estimator = "binned-mc";
  curve.values.resize(lags.size());
  curve.stderrs.resize(lags.size());
  for (std::size_t li = 0; li < lags.size(); ++li) {
    long n = lags[li];
    double total = 0.0, var_acc = 0.0;
    for (int b = 0; b < bins; ++b) {
      std::size_t b0 = b * replicas / bins, b1 = (b + 1) * replicas / bins;
      if (b1 <= b0) continue;
      double m = 0.0, m2 = 0.0;
      for (std::size_t idx = b0; idx < b1; ++idx) {
        double x = n >= 1 ? batch.value(order[idx], n) : 0.0;
        m += x;
        m2 += x * x;
      }
      double cnt = static_cast<double>(b1 - b0);
      m /= cnt;
      double w = cnt / replicas;
      total += w * std::fabs(m);
      double v = std::max(0.0, m2 / cnt - m * m) / cnt;
      var_acc += w * w * v;
    }
    curve.values[li] = total;
    curve.stderrs[li] = std::sqrt(var_acc);
  }
  return curve;
}

// ---------- alpha ----------

namespace {

ChainModel chain_model_for(const ProcessSpec& spec, int dmr_cells) {
  if (const auto* pm = std::get_if<PmSpec>(&spec)) return pm_chain_model(*pm);
  if (const auto* dmr = std::get_if<DmrSpec>(&spec))
    return dmr_chain_model(*dmr, dmr_cells);
  throw std::invalid_argument("transfer matrix unavailable for family " +
                              family_name(spec));
}

std::vector<int> quantile_thresholds(const std::vector<double>& pi, int grid) {
  std::vector<int> thr;
  double cum = 0.0;
  int next = 1;
  for (int c = 0; c < static_cast<int>(pi.size()); ++c) {
    cum += pi[c];
    while (next <= grid && cum >= static_cast<double>(next) / (grid + 1)) {
      thr.push_back(c);
      ++next;
    }
  }
  std::sort(thr.begin(), thr.end());
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
  return thr;
}

}  // namespace

CoefficientCurve alpha_k_coefficient(const ProcessSpec& spec, int k,
                                     const std::vector<long>& lags,
                                     const AlphaOptions& opts) {
  if (k != 1 && k != 2) throw std::invalid_argument("alpha: k must be 1 or 2");
  if (opts.x_grid < 32) throw std::invalid_argument("alpha: x_grid must be >= 32");
  if (is_iid_linear(spec)) {
    CoefficientCurve curve;
    curve.lags = lags;
    curve.estimator = "exact-kernel";
    for (long n : lags) curve.values.push_back(n == 0 ? 1.0 : 0.0);
    return curve;
  }
  ChainModel model = chain_model_for(spec, opts.dmr_cells);
  const int m = model.cells();
  auto thr = quantile_thresholds(model.pi, opts.x_grid);
  const int T = static_cast<int>(thr.size());
  std::vector<double> cum_pi(m);
  {
    double c = 0.0;
    for (int i = 0; i < m; ++i) {
      c += model.pi[i];
      cum_pi[i] = c;
    }
  }

  long max_lag = *std::max_element(lags.begin(), lags.end());
  int levels = 1;
  while ((1L << levels) <= max_lag) ++levels;
  PowerChain chain = make_power_chain(model, levels);

  // centered indicator of cell index <= t, and its gap-propagated versions
  std::vector<std::vector<std::vector<double>>> hvec(opts.gaps.size());
  if (k == 2) {
    for (std::size_t gi = 0; gi < opts.gaps.size(); ++gi) {
      hvec[gi].resize(T);
      for (int ti = 0; ti < T; ++ti) {
        std::vector<double> g(m);
        for (int z = 0; z < m; ++z)
          g[z] = (z <= thr[ti] ? 1.0 : 0.0) - cum_pi[thr[ti]];
        std::vector<double> tmp;
        for (long step = 0; step < opts.gaps[gi]; ++step) {
          model.apply(g, tmp);
          g.swap(tmp);
        }
        hvec[gi][ti] = std::move(g);
      }
    }
  }

  CoefficientCurve curve;
  curve.lags = lags;
  curve.estimator = "exact-kernel";
  curve.values.resize(lags.size());

  for (std::size_t li = 0; li < lags.size(); ++li) {
    long n = lags[li];
    if (n == 0) {
      curve.values[li] = 1.0;
      continue;
    }
    Eigen::MatrixXd Mn = chain.power(n);
    double best = 0.0;

    // l = 1: sup_t sum_c pi_c |P(Y_n <= t | c) - F(t)|
    std::vector<double> acc1(T, 0.0);
    for (int c = 0; c < m; ++c) {
      double s = 0.0;
      int ti = 0;
      for (int z = 0; z < m && ti < T; ++z) {
        s += Mn(c, z);
        while (ti < T && thr[ti] == z) {
          acc1[ti] += model.pi[c] * std::fabs(s - cum_pi[z]);
          ++ti;
        }
      }
    }
    for (double v : acc1) best = std::max(best, v);

    if (k == 2) {
      // l = 2 over (t1, t2, gap): E_c[g1(Y_n) h(Y_n)] with h = K^gap g2
#pragma omp parallel for collapse(2) schedule(static) reduction(max : best)
      for (std::size_t gi = 0; gi < opts.gaps.size(); ++gi) {
        for (int t2 = 0; t2 < T; ++t2) {
          const auto& h = hvec[gi][t2];
          // unconditional prefix sums of pi.h for all t1 in one scan
          std::vector<double> uncond(T, 0.0), val(T, 0.0);
          {
            double s = 0.0;
            int ti = 0;
            for (int z = 0; z < m && ti < T; ++z) {
              s += model.pi[z] * h[z];
              while (ti < T && thr[ti] == z) {
                uncond[ti] = s;
                ++ti;
              }
            }
          }
          double pih = 0.0;
          for (int z = 0; z < m; ++z) pih += model.pi[z] * h[z];
          for (int c = 0; c < m; ++c) {
            double s = 0.0;
            int ti = 0;
            double rowdot = 0.0;
            for (int z = 0; z < m; ++z) rowdot += Mn(c, z) * h[z];
            for (int z = 0; z < m && ti < T; ++z) {
              s += Mn(c, z) * h[z];
              while (ti < T && thr[ti] == z) {
                double F1 = cum_pi[z];
                double cond = s - F1 * rowdot;
                double unc = uncond[ti] - F1 * pih;
                val[ti] += model.pi[c] * std::fabs(cond - unc);
                ++ti;
              }
            }
          }
          for (double v : val) best = std::max(best, v);
        }
      }
    }
    curve.values[li] = best;
  }
  // the definition takes a sup over indices >= n: enforce monotonicity from the right
  for (std::size_t i = curve.values.size(); i-- > 1;)
    curve.values[i - 1] = std::max(curve.values[i - 1], curve.values[i]);
  return curve;
}

// ---------- tau ----------

TauCurves tau_coupling(const ArlSpec& spec, const std::vector<long>& lags,
                       std::size_t replicas, std::uint64_t seed) {
  long max_lag = *std::max_element(lags.begin(), lags.end());
  long horizon = max_lag + 5;
  const std::size_t L = lags.size();
  std::vector<double> sum1(L, 0.0), sum1sq(L, 0.0), sum2(L, 0.0), sum2sq(L, 0.0);
  std::vector<std::vector<double>> delta_rows(replicas);

#pragma omp parallel for schedule(static)
  for (long r = 0; r < static_cast<long>(replicas); ++r) {
    Rng rng(SeedStream{seed, stream_domain::kTau + static_cast<std::uint64_t>(r)});
    double y = 0.0, ybar = 0.0;
    for (long b = 0; b < spec.burn_in; ++b) y = arl_h(spec, y) + arl_innovation(spec, rng);
    for (long b = 0; b < spec.burn_in; ++b)
      ybar = arl_h(spec, ybar) + arl_innovation(spec, rng);
    std::vector<double> delta(horizon + 1);
    delta[0] = std::fabs(y - ybar);
    for (long t = 1; t <= horizon; ++t) {
      double eps = arl_innovation(spec, rng);
      y = arl_h(spec, y) + eps;
      ybar = arl_h(spec, ybar) + eps;
      delta[t] = std::fabs(y - ybar);
    }
    delta_rows[r] = std::move(delta);
  }
  // ordered accumulation keeps results independent of thread count
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto& delta = delta_rows[r];
    for (std::size_t li = 0; li < L; ++li) {
      long n = lags[li];
      double d1 = delta[n];
      double d2 = d1;
      for (long i : {n + 1, n + 2, n + 4})
        if (i <= horizon) d2 = std::max(d2, 0.5 * (delta[i] + delta[n]));
      sum1[li] += d1;
      sum1sq[li] += d1 * d1;
      sum2[li] += d2;
      sum2sq[li] += d2 * d2;
    }
  }
  TauCurves out;
  out.tau1.lags = lags;
  out.tau1.estimator = "coupling";
  out.tau2 = out.tau1;
  for (std::size_t li = 0; li < L; ++li) {
    double R = static_cast<double>(replicas);
    double m1 = sum1[li] / R, m2 = sum2[li] / R;
    out.tau1.values.push_back(m1);
    out.tau2.values.push_back(m2);
    out.tau1.stderrs.push_back(
        std::sqrt(std::max(0.0, sum1sq[li] / R - m1 * m1) / R));
    out.tau2.stderrs.push_back(
        std::sqrt(std::max(0.0, sum2sq[li] / R - m2 * m2) / R));
  }
  return out;
}

// ---------- theta / lambda ----------

ThetaCurves theta2_lambda2(const ProcessSpec& spec, const std::vector<long>& lags,
                           const ThetaOptions& opts) {
  ThetaCurves out;
  out.gamma = gamma_coefficient_exact(spec, lags);
  out.theta2.lags = lags;
  out.theta2.estimator = "exact-kernel";
  out.theta2.values.assign(lags.size(), 0.0);

  if (is_iid_linear(spec)) {
    out.lambda2 = out.theta2;
    for (std::size_t i = 0; i < lags.size(); ++i)
      out.lambda2.values[i] = std::max(out.theta2.values[i], out.gamma.values[i]);
    return out;
  }

  ProcessSpec local = spec;
  if (auto* pm = std::get_if<PmSpec>(&local)) pm->ulam_cells = opts.cells;
  ChainModel model = chain_model_for(local, opts.cells);
  const int m = model.cells();

  std::vector<double> f(m);
  if (const auto* dmr = std::get_if<DmrSpec>(&local)) {
    (void)dmr;
    auto fa = model.cell_average([](double x) { return dmr_f(x); });
    f = model.centered(fa);
  } else {
    double mean = pm_invariant_mean_indicator(std::get<PmSpec>(local));
    for (int c = 0; c < m; ++c)
      f[c] = (model.mesh.hi(c) <= 0.5 + 1e-15 ? 1.0 : 0.0) - mean;
  }

  double fmax = 0.0;
  for (double v : f) fmax = std::max(fmax, std::fabs(v));
  const int T = opts.value_grid;
  const double t0 = -2.0 * fmax - 1e-12, t1 = 2.0 * fmax + 1e-12;
  const double dt = (t1 - t0) / T;
  auto grid_index = [&](double v) {
    int i = static_cast<int>(std::floor((v - t0) / dt));
    return std::clamp(i, 0, T - 1);
  };

  // cells ordered by observable value, for CDF bucketing
  std::vector<int> ord(m);
  for (int i = 0; i < m; ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });

  long max_lag = *std::max_element(lags.begin(), lags.end());
  int levels = 1;
  while ((1L << levels) <= max_lag) ++levels;
  PowerChain chain = make_power_chain(model, levels);

  for (std::size_t li = 0; li < lags.size(); ++li) {
    long n = lags[li];
    if (n == 0) continue;
    Eigen::MatrixXd Mn = chain.power(n);
    double worst = 0.0;
    for (long gap : opts.gaps) {
      Eigen::MatrixXd Kd = Eigen::MatrixXd::Identity(m, m);
      for (long s = 0; s < gap; ++s) Kd = par_matmul(Kd, model.K);
      for (int sign : {+1, -1}) {
        // Phi[z1][t] = P(f(Y_{n+gap}) <= tau | Y_n = z1) bucketed on the grid
        Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(m, T);
#pragma omp parallel for schedule(static)
        for (int z1 = 0; z1 < m; ++z1) {
          double s = 0.0;
          std::vector<double> row(T, 0.0);
          for (int oi = 0; oi < m; ++oi) {
            int z2 = ord[oi];
            s += Kd(z1, z2);
            row[grid_index(f[z2])] = s;
          }
          // forward-fill the running CDF across the grid
          double cur = 0.0;
          for (int t = 0; t < T; ++t) {
            if (row[t] > 0.0) cur = row[t];
            Phi(z1, t) = cur;
          }
        }
        // conditional laws of V = f(Y_{n+gap}) + sign * f(Y_n)
        std::vector<double> Fbar(T, 0.0);
        for (int z1 = 0; z1 < m; ++z1) {
          int shift = static_cast<int>(std::round(sign * f[z1] / dt));
          for (int t = 0; t < T; ++t) {
            int src = std::clamp(t - shift, 0, T - 1);
            Fbar[t] += model.pi[z1] * Phi(z1, src);
          }
        }
        std::vector<double> theta_parts(m, 0.0);
#pragma omp parallel for schedule(static)
        for (int c = 0; c < m; ++c) {
          std::vector<double> Fc(T, 0.0);
          for (int z1 = 0; z1 < m; ++z1) {
            double w = Mn(c, z1);
            if (w == 0.0) continue;
            int shift = static_cast<int>(std::round(sign * f[z1] / dt));
            for (int t = 0; t < T; ++t) {
              int src = std::clamp(t - shift, 0, T - 1);
              Fc[t] += w * Phi(z1, src);
            }
          }
          double dist = 0.0;
          for (int t = 0; t < T; ++t) dist += std::fabs(Fc[t] - Fbar[t]) * dt;
          theta_parts[c] = model.pi[c] * dist;
        }
        double theta = 0.0;
        for (double v : theta_parts) theta += v;
        worst = std::max(worst, theta);
      }
    }
    out.theta2.values[li] = worst;
  }
  for (std::size_t i = out.theta2.values.size(); i-- > 1;)
    out.theta2.values[i - 1] =
        std::max(out.theta2.values[i - 1], out.theta2.values[i]);

  out.lambda2 = out.theta2;
  out.lambda2.estimator = "exact-kernel";
  for (std::size_t i = 0; i < lags.size(); ++i)
    out.lambda2.values[i] = std::max(out.theta2.values[i], out.gamma.values[i]);
  return out;
}

}  // namespace siplab
