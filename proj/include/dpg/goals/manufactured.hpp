#pragma once

#include <functional>
#include <string>

#include "dpg/mesh/quad_mesh.hpp"

namespace dpg::goals {

// Closed-form solution of -lap u = f with its derivatives.
struct ManufacturedSolution {
  std::string name;
  mesh::Rect domain;
  std::function<double(double, double)> u;
  std::function<mesh::Point(double, double)> grad;
  std::function<double(double, double)> laplacian;

  double source(double x, double y) const { return -laplacian(x, y); }
  // sigma . n with sigma = grad u.
  double flux(mesh::Point p, mesh::Point n) const {
    mesh::Point g = grad(p.x, p.y);
    return g.x * n.x + g.y * n.y;
  }
};

// Profile f(s) = s(1-s)(s/4 + (1-4s)^2) and u(x,y) = f(x/4) f(y) on [0,4] x [0,1].
double steep_profile(double s);
double steep_profile_d1(double s);
double steep_profile_d2(double s);
ManufacturedSolution steep_manufactured();

ManufacturedSolution zero_solution(const mesh::Rect& domain);

}  // namespace dpg::goals
