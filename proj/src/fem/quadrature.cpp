#include <cmath>

#include "amrdmd/error.hpp"
#include "amrdmd/fem.hpp"

namespace amrdmd::fem {

namespace {

QuadratureRule gauss_segment(int degree) {
  // Gauss-Legendre abscissae/weights on [-1, 1].
  std::vector<double> t, w;
  if (degree <= 1) {
    t = {0.0};
    w = {2.0};
  } else if (degree <= 3) {
    const double a = 1.0 / std::sqrt(3.0);
    t = {-a, a};
    w = {1.0, 1.0};
  } else if (degree <= 5) {
    const double a = std::sqrt(0.6);
    t = {-a, 0.0, a};
    w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  } else {
    t = {-0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480,
         0.86113631159405257522};
    w = {0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263,
         0.34785484513745385737};
  }
  QuadratureRule rule;
  rule.dim = 1;
  rule.degree = static_cast<int>(2 * t.size() - 1);
  for (std::size_t q = 0; q < t.size(); ++q) {
    const double x = 0.5 * (1.0 + t[q]);
    rule.points.push_back({1.0 - x, x, 0.0});
    rule.weights.push_back(0.5 * w[q]);
  }
  return rule;
}

void add_orbit3(QuadratureRule& rule, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  rule.points.push_back({b, a, a});
  rule.points.push_back({a, b, a});
  rule.points.push_back({a, a, b});
  for (int k = 0; k < 3; ++k) rule.weights.push_back(w);
}

QuadratureRule triangle(int degree) {
  QuadratureRule rule;
  rule.dim = 2;
  if (degree <= 1) {
    rule.degree = 1;
    rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    rule.weights.push_back(0.5);
  } else if (degree == 2) {
    rule.degree = 2;
    add_orbit3(rule, 1.0 / 6.0, 1.0 / 6.0);
  } else if (degree <= 4) {
    // Dunavant, 6 points.
    rule.degree = 4;
    add_orbit3(rule, 0.44594849091596488632, 0.5 * 0.22338158967801146570);
    add_orbit3(rule, 0.091576213509770743460, 0.5 * 0.10995174365532186764);
  } else {
    // Dunavant, 7 points.
    rule.degree = 5;
    rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    rule.weights.push_back(0.5 * 0.225);
    add_orbit3(rule, 0.47014206410511508977, 0.5 * 0.13239415278850618074);
    add_orbit3(rule, 0.10128650732345633880, 0.5 * 0.12593918054482715260);
  }
  return rule;
}

}  // namespace

QuadratureRule quadrature(int dim, int degree) {
  require(degree >= 0, "quadrature: negative degree");
  if (dim == 1) {
    require(degree <= 7, "quadrature: 1D rules stop at degree 7");
    return gauss_segment(degree);
  }
  require(dim == 2, "quadrature: dimension must be 1 or 2");
  require(degree <= 5, "quadrature: triangle rules stop at degree 5");
  return triangle(degree);
}

}  // namespace amrdmd::fem
