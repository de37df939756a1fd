#pragma once

#include <cstdint>
#include <random>

#include "dpg/linalg/duality.hpp"

namespace dpg::linalg {

// Seeded source for reproducible random instances.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  Matrix matrix(Index rows, Index cols);
  Vector vector(Index n);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Random SPD matrix built as a perturbed Gram; skipping symmetrization leaves the perturbation's skew part in.
Matrix random_spd(Rng& rng, Index n, bool symmetrize = true);

// Oblique projection with random range (dimension 1..n-1) and random complement.
Matrix random_oblique_projection(Rng& rng, Index n);

// Projection onto span(G^{-1} B U_h) + extra random directions, along a random subspace of
// null((B U_h)^T), so that b(u_h, v - Pi v) = 0 for every u_h in span(trial).
Matrix fortin_projection(Rng& rng, const Matrix& b, const Matrix& gram, const Matrix& trial, Index extra);

struct DualityInstance {
  Matrix b;
  Matrix gram;
  Vector load;
  Vector goal;
  Vector u_true;
  Matrix trial;
  Matrix test;
};

// m x n operator with m > n, load in the range of B, k-dim trial and r-dim test subspaces (r >= k).
DualityInstance random_duality_instance(Rng& rng, Index m, Index n, Index k, Index r,
                                        bool symmetrize = true);

}  // namespace dpg::linalg
