#pragma once

#include <string>
#include <variant>
#include <vector>

#include "siplab/stats.hpp"

namespace siplab {

// Upper-tail quantile function Q(u) = inf{ t >= 0 : P(|X| > t) <= u },
// nonincreasing and right-continuous on (0,1].
//
// Three representations: Pareto tail Q(u) = scale * u^{-1/r} (the canonical
// heavy-tail family, integrable iff r > 1), a constant, and an exact step
// function built from a finite sample.
struct ParetoQuantile {
  double r = 4.0;
  double scale = 1.0;
};
struct ConstantQuantile {
  double c = 1.0;
};
struct EmpiricalQuantile {
  // magnitudes sorted descending; Q(u) = mag[floor(u*N)] with mag[N] = 0
  std::vector<double> magnitudes;
};

struct QuantileFunction {
  std::variant<ParetoQuantile, ConstantQuantile, EmpiricalQuantile> kind;

  double operator()(double u) const;  // u in (0,1]
  bool integrable() const;
};

QuantileFunction quantile_from_sample(const EmpiricalDist& d);
QuantileFunction pareto_quantile(double r, double scale = 1.0);
QuantileFunction constant_quantile(double c);

// H(x) = int_0^x Q(u) du on [0,1] and its inverse G on [0, E|X|].
// Empirical H is exact piecewise-linear; analytic kinds use closed forms.
struct HGPair {
  QuantileFunction q;
  double total_mass = 0.0;           // E|X| = H(1)
  std::vector<double> knots_u;       // empirical: breakpoints in u
  std::vector<double> knots_h;       // H at the breakpoints
  double tol = 1e-12;

  double H(double x) const;          // x in [0,1]
  double G(double v) const;          // v in [0, total_mass]
};

HGPair build_HG(const QuantileFunction& q, double tol = 1e-12);

enum class IntegralMode { Qp_of_u, Qpm1_circ_G };

struct ConditionIntegral {
  double value = 0.0;
  bool clamped = false;   // lambda exceeded total_mass in circ-G mode
};

// mode Qp_of_u:      int_0^lambda Q^p(u) du
// mode Qpm1_circ_G:  int_0^lambda Q^{p-1}(G(v)) dv   (lambda <= E|X|)
// Exact piecewise arithmetic for empirical Q, closed forms for analytic ones.
ConditionIntegral condition_integral(const QuantileFunction& q, const HGPair& hg,
                                     double lambda, double p, IntegralMode mode);

}  // namespace siplab
