#include "siplab/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace siplab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double QuantileFunction::operator()(double u) const {
  if (!(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("quantile argument must be in (0,1]");
  if (const auto* p = std::get_if<ParetoQuantile>(&kind))
    return p->scale * std::pow(u, -1.0 / p->r);
  if (const auto* c = std::get_if<ConstantQuantile>(&kind))
    return u < 1.0 ? c->c : 0.0;
  const auto& e = std::get<EmpiricalQuantile>(kind);
  const std::size_t n = e.magnitudes.size();
  auto idx = static_cast<std::size_t>(std::floor(u * n));
  return idx >= n ? 0.0 : e.magnitudes[idx];
}

bool QuantileFunction::integrable() const {
  if (const auto* p = std::get_if<ParetoQuantile>(&kind)) return p->r > 1.0;
  return true;
}

QuantileFunction quantile_from_sample(const EmpiricalDist& d) {
  if (d.size() == 0) throw std::invalid_argument("empty sample");
  EmpiricalQuantile e;
  e.magnitudes.reserve(d.size());
  for (double v : d.sorted_values) e.magnitudes.push_back(std::fabs(v));
  std::sort(e.magnitudes.begin(), e.magnitudes.end(), std::greater<double>());
  return QuantileFunction{e};
}

QuantileFunction pareto_quantile(double r, double scale) {
  if (r <= 0.0 || scale <= 0.0) throw std::invalid_argument("pareto needs r, scale > 0");
  return QuantileFunction{ParetoQuantile{r, scale}};
}

QuantileFunction constant_quantile(double c) {
  if (c < 0.0) throw std::invalid_argument("constant quantile must be >= 0");
  return QuantileFunction{ConstantQuantile{c}};
}

HGPair build_HG(const QuantileFunction& q, double tol) {
  if (!q.integrable()) throw std::invalid_argument("Q not integrable");
  HGPair hg;
  hg.q = q;
  hg.tol = tol;
  if (const auto* p = std::get_if<ParetoQuantile>(&q.kind)) {
    hg.total_mass = p->scale * p->r / (p->r - 1.0);
  } else if (const auto* c = std::get_if<ConstantQuantile>(&q.kind)) {
    hg.total_mass = c->c;
  } else {
    const auto& e = std::get<EmpiricalQuantile>(q.kind);
    const std::size_t n = e.magnitudes.size();
    hg.knots_u.resize(n + 1);
    hg.knots_h.resize(n + 1);
    double acc = 0.0;
    hg.knots_u[0] = 0.0;
    hg.knots_h[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += e.magnitudes[k] / n;
      hg.knots_u[k + 1] = static_cast<double>(k + 1) / n;
      hg.knots_h[k + 1] = acc;
    }
    hg.total_mass = acc;
  }
  return hg;
}

double HGPair::H(double x) const {
  if (x <= 0.0) return 0.0;
  x = std::min(x, 1.0);
  if (const auto* p = std::get_if<ParetoQuantile>(&q.kind)) {
    double e = 1.0 - 1.0 / p->r;
    return p->scale * std::pow(x, e) / e;
  }
  if (const auto* c = std::get_if<ConstantQuantile>(&q.kind)) return c->c * x;
  const auto& e = std::get<EmpiricalQuantile>(q.kind);
  const std::size_t n = e.magnitudes.size();
  auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(x * n)), n - 1);
  double slope = e.magnitudes[k];
  return knots_h[k] + (x - knots_u[k]) * slope;
}

double HGPair::G(double v) const {
  if (v <= 0.0) return 0.0;
  v = std::min(v, total_mass);
  if (const auto* p = std::get_if<ParetoQuantile>(&q.kind)) {
    double e = 1.0 - 1.0 / p->r;
    return std::pow(v * e / p->scale, 1.0 / e);
  }
  if (const auto* c = std::get_if<ConstantQuantile>(&q.kind)) return v / c->c;
  const auto& e = std::get<EmpiricalQuantile>(q.kind);
  // first knot with H >= v, then invert the linear segment; flat pieces map
  // to their left endpoint (the inf in the definition of G)
  auto it = std::lower_bound(knots_h.begin(), knots_h.end(), v);
  std::size_t k = static_cast<std::size_t>(it - knots_h.begin());
  if (k == 0) return 0.0;
  double slope = e.magnitudes[k - 1];
  if (slope == 0.0) return knots_u[k - 1];
  return knots_u[k - 1] + (v - knots_h[k - 1]) / slope;
}

ConditionIntegral condition_integral(const QuantileFunction& q, const HGPair& hg,
                                     double lambda, double p, IntegralMode mode) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  ConditionIntegral out;
  if (lambda == 0.0) return out;

  if (mode == IntegralMode::Qp_of_u) {
    double lam = std::min(lambda, 1.0);
    if (const auto* pa = std::get_if<ParetoQuantile>(&q.kind)) {
      if (p >= pa->r) {
        out.value = kInf;
        return out;
      }
      double e = 1.0 - p / pa->r;
      out.value = std::pow(pa->scale, p) * std::pow(lam, e) / e;
      return out;
    }
    if (const auto* c = std::get_if<ConstantQuantile>(&q.kind)) {
      out.value = std::pow(c->c, p) * lam;
      return out;
    }
    const auto& e = std::get<EmpiricalQuantile>(q.kind);
    const std::size_t n = e.magnitudes.size();
    auto k = static_cast<std::size_t>(std::floor(lam * n));
    double acc = 0.0;
    for (std::size_t i = 0; i < std::min(k, n); ++i)
      acc += std::pow(e.magnitudes[i], p) / n;
    if (k < n) acc += (lam - static_cast<double>(k) / n) * std::pow(e.magnitudes[k], p);
    out.value = acc;
    return out;
  }

  // Qpm1_circ_G
  double lam = lambda;
  if (lam > hg.total_mass) {
    lam = hg.total_mass;
    out.clamped = true;
  }
  if (const auto* pa = std::get_if<ParetoQuantile>(&q.kind)) {
    if (p >= pa->r) {
      out.value = kInf;
      return out;
    }
    double beta = (p - 1.0) / (pa->r - 1.0);
    double e = 1.0 - 1.0 / pa->r;  // H(x) = scale x^e / e
    // Q^{p-1}(G(v)) = scale^{p-1} (v e / scale)^{-beta}
    out.value = std::pow(pa->scale, p - 1.0) * std::pow(e / pa->scale, -beta) *
                std::pow(lam, 1.0 - beta) / (1.0 - beta);
    return out;
  }
  if (const auto* c = std::get_if<ConstantQuantile>(&q.kind)) {
    out.value = std::pow(c->c, p - 1.0) * lam;
    return out;
  }
  const auto& e = std::get<EmpiricalQuantile>(q.kind);
  // Q^{p-1} o G is a step function in v with breakpoints H(k/N)
  double acc = 0.0;
  for (std::size_t k = 1; k < hg.knots_h.size(); ++k) {
    double m = e.magnitudes[k - 1];
    if (lam >= hg.knots_h[k]) {
      acc += std::pow(m, p - 1.0) * (hg.knots_h[k] - hg.knots_h[k - 1]);
    } else {
      acc += std::pow(m, p - 1.0) * (lam - hg.knots_h[k - 1]);
      break;
    }
  }
  out.value = acc;
  return out;
}

}  // namespace siplab
