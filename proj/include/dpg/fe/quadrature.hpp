#pragma once

#include <array>
#include <vector>

namespace dpg::fe {

struct QuadratureRule1D {
  std::vector<double> points;  // on [-1, 1]
  std::vector<double> weights;
  int degree = 0;  // exact for polynomials up to this degree
};

struct QuadratureRule {
  std::vector<std::array<double, 2>> points;  // reference square [-1, 1]^2
  std::vector<double> weights;
  int degree = 0;  // exact for tensor polynomials of this degree in each variable
};

QuadratureRule1D gauss_legendre(int n);
QuadratureRule tensor_gauss(int n);

// Gauss-Lobatto nodes on [-1, 1], n >= 2, ascending.
std::vector<double> gauss_lobatto_nodes(int n);

// Legendre polynomials P_0..P_order at x with first derivatives.
void legendre(int order, double x, double* values, double* derivs);

// Lagrange basis on the given nodes, with first derivatives.
void lagrange(const std::vector<double>& nodes, double x, double* values, double* derivs);

}  // namespace dpg::fe
