#include "siplab/quadrature.hpp"

#include <cmath>

namespace siplab {

namespace {
// Abscissae/weights for n=16 Gauss-Legendre on [-1,1], positive half.
const double kGlNodes16[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
const double kGlWeights16[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};
}  // namespace

Quadrature gauss_legendre(double a, double b) {
  Quadrature q;
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 7; i >= 0; --i) {
    q.nodes.push_back(c - h * kGlNodes16[i]);
    q.weights.push_back(h * kGlWeights16[i]);
  }
  for (int i = 0; i < 8; ++i) {
    q.nodes.push_back(c + h * kGlNodes16[i]);
    q.weights.push_back(h * kGlWeights16[i]);
  }
  return q;
}

Quadrature log_panel_quadrature(double lo, double hi, int panels) {
  Quadrature q;
  double ratio = std::pow(hi / lo, 1.0 / panels);
  double a = lo;
  // First panel covers [0, lo] as well so the full interval [0,hi] is integrated;
  // integrable singularities at 0 contribute O(lo^eps) there.
  Quadrature head = gauss_legendre(0.0, lo);
  q.nodes = head.nodes;
  q.weights = head.weights;
  for (int j = 0; j < panels; ++j) {
    double b = (j + 1 == panels) ? hi : a * ratio;
    Quadrature p = gauss_legendre(a, b);
    q.nodes.insert(q.nodes.end(), p.nodes.begin(), p.nodes.end());
    q.weights.insert(q.weights.end(), p.weights.begin(), p.weights.end());
    a = b;
  }
  return q;
}

Quadrature weighted(const Quadrature& q, const std::function<double(double)>& density) {
  Quadrature w = q;
  for (std::size_t i = 0; i < w.size(); ++i) w.weights[i] *= density(w.nodes[i]);
  return w;
}

}  // namespace siplab
