#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace simpfem {

/// Thrown when a caller violates a precondition (bad geometry, wrong space, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot deliver its contract.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, double residual = NAN)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Finite element space of a scalar field: piecewise constants or bilinears.
enum class Space { DG0, Q1 };

inline const char* to_string(Space s) { return s == Space::DG0 ? "dg0" : "q1"; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

namespace quad {

// 2-point Gauss-Legendre on [-1, 1].
inline constexpr double kGaussPoint = 0.57735026918962576451;
inline constexpr std::array<double, 2> kGauss1D = {-kGaussPoint, kGaussPoint};

// Tensor 2x2 rule, q = a + 2 b  ->  (xi, eta) = (kGauss1D[a], kGauss1D[b]).
inline constexpr int kPointsPerElement = 4;

inline constexpr double xi(int q) { return kGauss1D[q % 2]; }
inline constexpr double eta(int q) { return kGauss1D[q / 2]; }

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
inline Rule gauss_legendre(int n) {
  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return r;
}

}  // namespace quad

namespace q1 {

// Counterclockwise reference vertices.
inline constexpr std::array<double, 4> kXi = {-1.0, 1.0, 1.0, -1.0};
inline constexpr std::array<double, 4> kEta = {-1.0, -1.0, 1.0, 1.0};

inline constexpr double shape(int a, double xi, double eta) {
  return 0.25 * (1.0 + kXi[a] * xi) * (1.0 + kEta[a] * eta);
}
inline constexpr double dshape_dxi(int a, double eta) {
  return 0.25 * kXi[a] * (1.0 + kEta[a] * eta);
}
inline constexpr double dshape_deta(int a, double xi) {
  return 0.25 * kEta[a] * (1.0 + kXi[a] * xi);
}

}  // namespace q1

}  // namespace simpfem
