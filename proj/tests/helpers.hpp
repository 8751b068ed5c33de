#pragma once

#include <Eigen/Core>

#include <random>

#include "simpfem/mesh.hpp"

namespace testing_helpers {

using namespace simpfem;

/// Clamped on the left, traction on the middle tenth of the right side.
inline Domain cantilever(double width = 1.0, double height = 1.0) {
  Domain d;
  d.width = width;
  d.height = height;
  d.dirichlet = {{Side::Left, 0.0, 1.0, kComponentXY}};
  d.neumann = {{Side::Right, 0.45, 0.55, kComponentXY}};
  return d;
}

inline Eigen::VectorXd uniform_vector(Eigen::Index n, std::mt19937_64& rng, double lo = 0.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace testing_helpers
