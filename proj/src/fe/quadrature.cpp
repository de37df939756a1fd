#include "dpg/fe/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "dpg/error.hpp"

namespace dpg::fe {

void legendre(int order, double x, double* values, double* derivs) {
  values[0] = 1.0;
  derivs[0] = 0.0;
  if (order == 0) return;
  values[1] = x;
  derivs[1] = 1.0;
  for (int n = 1; n < order; ++n) {
    values[n + 1] = ((2 * n + 1) * x * values[n] - n * values[n - 1]) / (n + 1);
    derivs[n + 1] = derivs[n - 1] + (2 * n + 1) * values[n];
  }
}

QuadratureRule1D gauss_legendre(int n) {
  if (n < 1) throw ConfigError("quadrature needs at least one point");
  QuadratureRule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  r.degree = 2 * n - 1;
  std::vector<double> p(n + 1), dp(n + 1);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p.data(), dp.data());
      double dx = p[n] / dp[n];
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, p.data(), dp.data());
    r.points[i] = x;
    r.weights[i] = 2.0 / ((1 - x * x) * dp[n] * dp[n]);
  }
  return r;
}

QuadratureRule tensor_gauss(int n) {
  QuadratureRule1D g = gauss_legendre(n);
  QuadratureRule r;
  r.degree = g.degree;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      r.points.push_back({g.points[i], g.points[j]});
      r.weights.push_back(g.weights[i] * g.weights[j]);
    }
  return r;
}

std::vector<double> gauss_lobatto_nodes(int n) {
  if (n < 2) throw ConfigError("Gauss-Lobatto rule needs at least two nodes");
  const int m = n - 1;  // interior nodes are roots of P'_m
  std::vector<double> x(n);
  x[0] = -1;
  x[m] = 1;
  std::vector<double> p(m + 2), dp(m + 2);
  for (int i = 1; i < m; ++i) {
    double t = -std::cos(std::numbers::pi * i / m);
    for (int it = 0; it < 100; ++it) {
      legendre(m, t, p.data(), dp.data());
      // Newton on P'_m using P''_m = (2 t P'_m - m(m+1) P_m) / (1 - t^2).
      double d2 = (2 * t * dp[m] - m * (m + 1) * p[m]) / (1 - t * t);
      double dt = dp[m] / d2;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = t;
  }
  return x;
}

void lagrange(const std::vector<double>& nodes, double x, double* values, double* derivs) {
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    double v = 1.0, d = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double inv = 1.0 / (nodes[i] - nodes[j]);
      d = d * (x - nodes[j]) * inv + v * inv;
      v *= (x - nodes[j]) * inv;
    }
    values[i] = v;
    derivs[i] = d;
  }
}

}  // namespace dpg::fe
