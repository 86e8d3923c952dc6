#pragma once

#include <functional>
#include <vector>

namespace siplab {

// Nodes and weights of a fixed quadrature rule; integrate f as sum w_i f(x_i).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  double integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
  std::size_t size() const { return nodes.size(); }
};

// 16-point Gauss-Legendre rule on [a,b].
Quadrature gauss_legendre(double a, double b);

// Composite Gauss-Legendre on [lo,hi] with geometrically graded panels
// accumulating toward lo (panel edges lo * ratio^j). Resolves integrable
// endpoint singularities and 1/n-scale boundary layers.
Quadrature log_panel_quadrature(double lo, double hi, int panels);

// Quadrature against a weight density w on (0,1]: weights are w(x_i) * gl-weight.
Quadrature weighted(const Quadrature& q, const std::function<double(double)>& density);

}  // namespace siplab
