#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "simpfem/fem.hpp"
#include "simpfem/mesh.hpp"

namespace simpfem {

/// Which norm to evaluate. `p` may be +infinity for Lp and W1pSemi.
struct NormKind {
  enum class Type { Lp, W1pSemi, W1p, H1 };
  Type type = Type::Lp;
  double p = 2.0;

  static NormKind lp(double p) { return {Type::Lp, p}; }
  static NormKind w1p_semi(double p) { return {Type::W1pSemi, p}; }
  static NormKind w1p(double p) { return {Type::W1p, p}; }
  static NormKind h1() { return {Type::H1, 2.0}; }
  static NormKind linf() { return {Type::Lp, std::numeric_limits<double>::infinity()}; }
};

namespace detail {

inline void check_exponent(double p) {
  if (!(p >= 1.0)) throw InvalidArgument("norm exponent must be >= 1");
}

/// |v|^p integrated with the 2x2 rule, or max |v| for p = inf.
inline double lp_from_samples(const Eigen::VectorXd& magnitudes, double weight, double p) {
  if (std::isinf(p)) return magnitudes.size() ? magnitudes.cwiseAbs().maxCoeff() : 0.0;
  double s = 0.0;
  for (Eigen::Index k = 0; k < magnitudes.size(); ++k) s += std::pow(std::abs(magnitudes[k]), p);
  return std::pow(weight * s, 1.0 / p);
}

/// Gradient magnitudes of a Q1 field at the element corners (for p = inf).
inline double max_corner_gradient(const Mesh& m, const Eigen::VectorXd& c, int stride, int comp) {
  double best = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& n = m.element_nodes(e);
    const auto v = [&](int a) { return c[stride * n[a] + comp]; };
    const double gx_bottom = (v(1) - v(0)) / m.dx();
    const double gx_top = (v(2) - v(3)) / m.dx();
    const double gy_left = (v(3) - v(0)) / m.dy();
    const double gy_right = (v(2) - v(1)) / m.dy();
    best = std::max({best, std::hypot(gx_bottom, gy_left), std::hypot(gx_bottom, gy_right),
                     std::hypot(gx_top, gy_left), std::hypot(gx_top, gy_right)});
  }
  return best;
}

}  // namespace detail

inline double norm(const ScalarField& f, NormKind kind) {
  const Mesh& m = *f.mesh;
  const double w = quadrature_weight(m);
  const auto lp = [&](double p) {
    detail::check_exponent(p);
    if (std::isinf(p)) return f.coeffs.size() ? f.coeffs.cwiseAbs().maxCoeff() : 0.0;
    return detail::lp_from_samples(evaluate_at_quadrature(f), w, p);
  };
  const auto semi = [&](double p) {
    detail::check_exponent(p);
    if (f.space != Space::Q1) {
      throw InvalidArgument("W1p seminorm requires a gradient-bearing (Q1) field");
    }
    if (std::isinf(p)) return detail::max_corner_gradient(m, f.coeffs, 1, 0);
    const Eigen::Matrix2Xd g = gradient_at_quadrature(f);
    return detail::lp_from_samples(g.colwise().norm().transpose(), w, p);
  };
  switch (kind.type) {
    case NormKind::Type::Lp: return lp(kind.p);
    case NormKind::Type::W1pSemi: return semi(kind.p);
    case NormKind::Type::W1p: {
      const double a = lp(kind.p);
      const double b = semi(kind.p);
      if (std::isinf(kind.p)) return std::max(a, b);
      return std::pow(std::pow(a, kind.p) + std::pow(b, kind.p), 1.0 / kind.p);
    }
    case NormKind::Type::H1: return std::hypot(lp(2.0), semi(2.0));
  }
  return 0.0;
}

/// Norms of vector-Q1 displacements: |u| Euclidean, |grad u| Frobenius.
inline double norm(const DisplacementField& u, NormKind kind) {
  const Mesh& m = *u.mesh;
  const double w = quadrature_weight(m);
  const ShapeGradients sg(m);
  const Eigen::Index nq = num_quadrature_points(m);
  Eigen::VectorXd mag(nq), gmag(nq);
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& n = m.element_nodes(e);
    for (int q = 0; q < 4; ++q) {
      double ux = 0, uy = 0, g00 = 0, g01 = 0, g10 = 0, g11 = 0;
      for (int a = 0; a < 4; ++a) {
        const double cx = u.coeffs[2 * n[a]];
        const double cy = u.coeffs[2 * n[a] + 1];
        ux += sg.value[q][a] * cx;
        uy += sg.value[q][a] * cy;
        g00 += sg.grad[q][a].x * cx;
        g01 += sg.grad[q][a].y * cx;
        g10 += sg.grad[q][a].x * cy;
        g11 += sg.grad[q][a].y * cy;
      }
      mag[4 * e + q] = std::hypot(ux, uy);
      gmag[4 * e + q] = std::sqrt(g00 * g00 + g01 * g01 + g10 * g10 + g11 * g11);
    }
  }
  const auto lp = [&](double p) {
    detail::check_exponent(p);
    if (std::isinf(p)) {
      double best = 0.0;
      for (int k = 0; k < m.num_nodes(); ++k) {
        best = std::max(best, std::hypot(u.coeffs[2 * k], u.coeffs[2 * k + 1]));
      }
      return best;
    }
    return detail::lp_from_samples(mag, w, p);
  };
  const auto semi = [&](double p) {
    detail::check_exponent(p);
    if (std::isinf(p)) return gmag.size() ? gmag.maxCoeff() : 0.0;
    return detail::lp_from_samples(gmag, w, p);
  };
  switch (kind.type) {
    case NormKind::Type::Lp: return lp(kind.p);
    case NormKind::Type::W1pSemi: return semi(kind.p);
    case NormKind::Type::W1p: {
      if (std::isinf(kind.p)) return std::max(lp(kind.p), semi(kind.p));
      return std::pow(std::pow(lp(kind.p), kind.p) + std::pow(semi(kind.p), kind.p), 1.0 / kind.p);
    }
    case NormKind::Type::H1: return std::hypot(lp(2.0), semi(2.0));
  }
  return 0.0;
}

/// norm(prolong(coarse) - fine) evaluated on the fine mesh.
inline double error_between(const ScalarField& coarse, const ScalarField& fine, NormKind kind) {
  if (coarse.space != fine.space) throw InvalidArgument("error_between: space mismatch");
  const ScalarField up = prolong_scalar(coarse, fine.mesh);
  return norm(ScalarField{fine.mesh, fine.space, up.coeffs - fine.coeffs}, kind);
}

inline double error_between(const DisplacementField& coarse, const DisplacementField& fine,
                            NormKind kind) {
  int depth = 0;
  detail::require_nested(*coarse.mesh, fine.mesh, depth);
  const Eigen::VectorXd up = prolong_vector_q1(coarse.mesh, coarse.coeffs, fine.mesh);
  return norm(DisplacementField{fine.mesh, up - fine.coeffs}, kind);
}

}  // namespace simpfem
