#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "simpfem/fem.hpp"
#include "simpfem/mesh.hpp"
#include "simpfem/norms.hpp"

namespace simpfem {

inline constexpr double kPi = 3.14159265358979323846;

struct FilterSpec {
  enum class Kind { None, Cone };
  enum class BoundaryPolicy { Truncate, Renormalize };

  Kind kind = Kind::None;
  double radius = 0.0;
  BoundaryPolicy policy = BoundaryPolicy::Truncate;

  static FilterSpec none() { return {}; }
  static FilterSpec cone(double radius, BoundaryPolicy policy = BoundaryPolicy::Truncate) {
    return {Kind::Cone, radius, policy};
  }
};

/// Unit-mass cone f(z) = 3 / (pi r^2) max(0, 1 - |z| / r).
inline double cone_kernel(double distance, double radius) {
  if (distance >= radius) return 0.0;
  return 3.0 / (kPi * radius * radius) * (1.0 - distance / radius);
}

/// Evaluation points of nodal interpolation into `space`.
inline std::vector<Vec2> interpolation_nodes(const Mesh& m, Space space) {
  if (space == Space::Q1) return m.node_coords();
  std::vector<Vec2> pts(static_cast<std::size_t>(m.num_elements()));
  for (int e = 0; e < m.num_elements(); ++e) pts[static_cast<std::size_t>(e)] = m.element_center(e);
  return pts;
}

/// Nodal interpolant of a closed-form function.
inline ScalarField interpolate(const MeshPtr& mesh, Space space,
                               const std::function<double(double, double)>& fn) {
  const auto pts = interpolation_nodes(*mesh, space);
  Eigen::VectorXd c(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) c[static_cast<Eigen::Index>(k)] = fn(pts[k].x, pts[k].y);
  return {mesh, space, std::move(c)};
}

/// Discrete filter F_h = Pi_h o F as a sparse matrix acting on density coefficients.
class FilterOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  FilterOperator() = default;
  FilterOperator(MeshPtr mesh, Space in, Space out, FilterSpec spec, Matrix W,
                 bool under_resolved)
      : mesh_(std::move(mesh)), in_(in), out_(out), spec_(spec), W_(std::move(W)),
        under_resolved_(under_resolved) {}

  const Matrix& matrix() const { return W_; }
  const MeshPtr& mesh() const { return mesh_; }
  Space in_space() const { return in_; }
  Space out_space() const { return out_; }
  const FilterSpec& spec() const { return spec_; }
  bool is_identity() const { return spec_.kind == FilterSpec::Kind::None; }
  /// True when r_min < 2 h.
  bool under_resolved() const { return under_resolved_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (x.size() != W_.cols()) throw InvalidArgument("filter apply: dimension mismatch");
    return W_ * x;
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const {
    if (y.size() != W_.rows()) throw InvalidArgument("filter adjoint: dimension mismatch");
    return W_.transpose() * y;
  }
  ScalarField filtered(const Eigen::VectorXd& rho) const { return {mesh_, out_, apply(rho)}; }

 private:
  MeshPtr mesh_;
  Space in_ = Space::DG0;
  Space out_ = Space::DG0;
  FilterSpec spec_;
  Matrix W_;
  bool under_resolved_ = false;
};

/// Builds W_ij = sum over quadrature points y of f(x_i - y) w_y phi_j(y), where
/// x_i are the interpolation nodes of `filtered_space`. Rows whose quadrature
/// mass exceeds one are scaled back to one so that [0, 1] is preserved.
inline FilterOperator build_filter(const MeshPtr& mesh, Space density_space,
                                   const FilterSpec& spec, Space filtered_space) {
  const Mesh& m = *mesh;
  const Eigen::Index ncols = space_dimension(m, density_space);
  if (spec.kind == FilterSpec::Kind::None) {
    if (filtered_space != density_space) {
      throw InvalidArgument("identity filter cannot change the density space");
    }
    FilterOperator::Matrix I(ncols, ncols);
    I.setIdentity();
    return {mesh, density_space, density_space, spec, std::move(I), false};
  }
  if (!(spec.radius > 0.0)) throw InvalidArgument("filter radius must be positive");

  const double r = spec.radius;
  const double w = quadrature_weight(m);
  const ShapeGradients sg(m);
  const auto targets = interpolation_nodes(m, filtered_space);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> row_acc(static_cast<std::size_t>(ncols), 0.0);
  std::vector<int> touched;
  for (std::size_t row = 0; row < targets.size(); ++row) {
    const Vec2 x = targets[row];
    const int i0 = std::max(0, static_cast<int>(std::floor((x.x - r) / m.dx())) - 1);
    const int i1 = std::min(m.nx() - 1, static_cast<int>(std::floor((x.x + r) / m.dx())) + 1);
    const int j0 = std::max(0, static_cast<int>(std::floor((x.y - r) / m.dy())) - 1);
    const int j1 = std::min(m.ny() - 1, static_cast<int>(std::floor((x.y + r) / m.dy())) + 1);
    touched.clear();
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const int e = m.element_index(i, j);
        const auto& nodes = m.element_nodes(e);
        for (int q = 0; q < 4; ++q) {
          const Vec2 y = quadrature_point(m, e, q);
          const double k = cone_kernel(std::hypot(x.x - y.x, x.y - y.y), r);
          if (k == 0.0) continue;
          if (density_space == Space::DG0) {
            if (row_acc[static_cast<std::size_t>(e)] == 0.0) touched.push_back(e);
            row_acc[static_cast<std::size_t>(e)] += k * w;
          } else {
            for (int a = 0; a < 4; ++a) {
              const auto col = static_cast<std::size_t>(nodes[a]);
              if (row_acc[col] == 0.0) touched.push_back(nodes[a]);
              row_acc[col] += k * w * sg.value[q][a];
            }
          }
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    double sum = 0.0;
    for (int c : touched) sum += row_acc[static_cast<std::size_t>(c)];
    double scale = 1.0;
    if (spec.policy == FilterSpec::BoundaryPolicy::Renormalize || sum > 1.0) {
      scale = sum > 0.0 ? 1.0 / sum : 0.0;
    }
    for (int c : touched) {
      trips.emplace_back(static_cast<int>(row), c, scale * row_acc[static_cast<std::size_t>(c)]);
      row_acc[static_cast<std::size_t>(c)] = 0.0;
    }
  }
  FilterOperator::Matrix W(static_cast<Eigen::Index>(targets.size()), ncols);
  W.setFromTriplets(trips.begin(), trips.end());
  W.makeCompressed();
  return {mesh, density_space, filtered_space, spec, std::move(W), r < 2.0 * m.h()};
}

inline FilterOperator build_filter(const MeshPtr& mesh, Space density_space,
                                   const FilterSpec& spec) {
  return build_filter(mesh, density_space, spec, density_space);
}

/// Continuous convolution (F eta)(x) = int_Omega f(x - y) eta(y) dy of a
/// closed-form eta, integrated in polar coordinates around x. The radial
/// integral is split where the circle meets sides or corners of the
/// rectangle; on each radius only the arcs inside the domain are integrated.
inline double reference_filter_value(const Domain& d,
                                     const std::function<double(double, double)>& eta,
                                     double radius, Vec2 x, int radial_points = 12,
                                     int angular_points = 12) {
  const double W = d.width;
  const double H = d.height;
  std::vector<double> breaks = {0.0, radius};
  for (double s : {x.x, W - x.x, x.y, H - x.y, std::hypot(x.x, x.y), std::hypot(W - x.x, x.y),
                   std::hypot(x.x, H - x.y), std::hypot(W - x.x, H - x.y)}) {
    if (s > 0.0 && s < radius) breaks.push_back(s);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const quad::Rule rad = quad::gauss_legendre(radial_points);
  const quad::Rule ang = quad::gauss_legendre(angular_points);
  const double two_pi = 2.0 * kPi;
  auto inside = [&](double px, double py) {
    const double tol = 1e-12 * std::max(W, H);
    return px >= -tol && px <= W + tol && py >= -tol && py <= H + tol;
  };
  auto wrap = [&](double t) {
    t = std::fmod(t, two_pi);
    return t < 0.0 ? t + two_pi : t;
  };

  double total = 0.0;
  std::vector<double> angles;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    for (std::size_t ir = 0; ir < rad.nodes.size(); ++ir) {
      // Arc lengths behave like sqrt(s - break) at both ends of the interval;
      // s = a + (b - a)(3u^2 - 2u^3) removes that singularity.
      const double u = 0.5 * (1.0 + rad.nodes[ir]);
      const double s = a + (b - a) * u * u * (3.0 - 2.0 * u);
      const double ws = 0.5 * rad.weights[ir] * (b - a) * 6.0 * u * (1.0 - u);
      angles.assign({0.0, two_pi});
      for (double c : {-x.x / s, (W - x.x) / s}) {
        if (std::abs(c) <= 1.0) {
          const double t = std::acos(c);
          angles.push_back(wrap(t));
          angles.push_back(wrap(-t));
        }
      }
      for (double c : {-x.y / s, (H - x.y) / s}) {
        if (std::abs(c) <= 1.0) {
          const double t = std::asin(c);
          angles.push_back(wrap(t));
          angles.push_back(wrap(kPi - t));
        }
      }
      std::sort(angles.begin(), angles.end());
      double ring = 0.0;
      for (std::size_t m = 0; m + 1 < angles.size(); ++m) {
        const double t0 = angles[m];
        const double t1 = angles[m + 1];
        if (t1 - t0 <= 0.0) continue;
        const double tm = 0.5 * (t0 + t1);
        if (!inside(x.x + s * std::cos(tm), x.y + s * std::sin(tm))) continue;
        for (std::size_t ia = 0; ia < ang.nodes.size(); ++ia) {
          const double t = tm + 0.5 * (t1 - t0) * ang.nodes[ia];
          ring += 0.5 * (t1 - t0) * ang.weights[ia] *
                  eta(x.x + s * std::cos(t), x.y + s * std::sin(t));
        }
      }
      total += ws * cone_kernel(s, radius) * s * ring;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Numerical surrogates of the filter assumptions on a nested family.

struct FilterLevelCheck {
  double h = 0.0;
  double max_value = 0.0;          // sup of F_h(rho) over sampled admissible rho
  double max_gradient = 0.0;       // sup of the discrete gradient of F_h(rho)
  double box_violation = 0.0;      // max(-min F_h(rho), max F_h(rho) - 1, 0)
  double linearity = 0.0;          // |W(a x + b y) - a W x - b W y|_inf
  std::array<double, 3> interpolation_error{};  // |F eta - Pi_h F eta| in L1, L2, Linf
  double oscillation_error = 0.0;  // |F_h(checkerboard) - Pi_h F(mean)|_L2
};

struct FilterReport {
  std::vector<FilterLevelCheck> levels;
  double value_bound = 1.0;
  double gradient_bound = 0.0;     // 3 / r: int |grad f| for the unit cone
  std::array<double, 3> min_interpolation_order{};  // L1, L2, Linf
  bool oscillation_decreasing = false;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

inline constexpr double kLinearityTol = 1e-13;
inline constexpr double kBoxTol = 1e-12;
inline constexpr double kMinInterpolationOrder = 0.9;

namespace detail {

inline double max_discrete_gradient(const ScalarField& f) {
  const Mesh& m = *f.mesh;
  if (f.space == Space::Q1) return detail::max_corner_gradient(m, f.coeffs, 1, 0);
  double best = 0.0;
  for (int j = 0; j < m.ny(); ++j) {
    for (int i = 0; i < m.nx(); ++i) {
      const double c = f.coeffs[m.element_index(i, j)];
      const double gx = i + 1 < m.nx() ? (f.coeffs[m.element_index(i + 1, j)] - c) / m.dx() : 0.0;
      const double gy = j + 1 < m.ny() ? (f.coeffs[m.element_index(i, j + 1)] - c) / m.dy() : 0.0;
      best = std::max(best, std::hypot(gx, gy));
    }
  }
  return best;
}

}  // namespace detail

/// Checks box preservation, linearity, the uniform W^{1,inf} bound, the
/// interpolation-error decay of Pi_h on a smooth field, and the decay of the
/// filtered response to mesh-frequency oscillations, across `family`.
inline FilterReport check_assumptions(const std::vector<MeshPtr>& family, Space density_space,
                                      const FilterSpec& spec, Space filtered_space,
                                      std::uint64_t seed = 1, int samples = 50,
                                      double gamma = 0.5) {
  if (family.size() < 3) throw InvalidArgument("check_assumptions needs >= 3 nested meshes");
  if (spec.kind != FilterSpec::Kind::Cone) throw InvalidArgument("check_assumptions needs a cone filter");
  for (std::size_t l = 1; l < family.size(); ++l) {
    if (family[l]->depth_below(family[l - 1].get()) != 1) {
      throw InvalidArgument("check_assumptions: meshes must be successive refinements");
    }
  }
  FilterReport report;
  report.gradient_bound = 3.0 / spec.radius;
  const Domain& dom = family.front()->domain();
  const double W = dom.width;
  const double H = dom.height;
  const auto smooth = [W, H](double x, double y) {
    return std::sin(kPi * x / W) * std::sin(kPi * y / H);
  };
  const auto half = [](double, double) { return 0.5; };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (const auto& mesh : family) {
    const Mesh& m = *mesh;
    const FilterOperator F = build_filter(mesh, density_space, spec, filtered_space);
    const Eigen::Index n = space_dimension(m, density_space);
    const Eigen::VectorXd volume_weights =
        F.apply_adjoint(mass_weights(m, filtered_space));
    FilterLevelCheck lc;
    lc.h = m.h();

    // Admissible samples: two sharp steps, full material, random fields.
    std::vector<Eigen::VectorXd> samples_rho;
    const auto dens_nodes = interpolation_nodes(m, density_space);
    Eigen::VectorXd step_x(n), step_y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      step_x[k] = dens_nodes[static_cast<std::size_t>(k)].x < 0.5 * W ? 1.0 : 0.0;
      step_y[k] = dens_nodes[static_cast<std::size_t>(k)].y < 0.5 * H ? 1.0 : 0.0;
    }
    samples_rho.push_back(step_x);
    samples_rho.push_back(step_y);
    samples_rho.push_back(Eigen::VectorXd::Ones(n));
    for (int s = 0; s < samples; ++s) {
      Eigen::VectorXd rho(n);
      for (Eigen::Index k = 0; k < n; ++k) rho[k] = unit(rng);
      const double vol = volume_weights.dot(rho);
      const double budget = gamma * dom.area();
      if (vol > budget) rho *= budget / vol;
      samples_rho.push_back(std::move(rho));
    }
    for (const auto& rho : samples_rho) {
      const ScalarField fr = F.filtered(rho);
      lc.max_value = std::max(lc.max_value, fr.coeffs.maxCoeff());
      lc.box_violation = std::max({lc.box_violation, -fr.coeffs.minCoeff(),
                                   fr.coeffs.maxCoeff() - 1.0});
      lc.max_gradient = std::max(lc.max_gradient, detail::max_discrete_gradient(fr));
    }

    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd x(n), y(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        x[k] = unit(rng);
        y[k] = unit(rng);
      }
      const double a = 2.0 * unit(rng) - 1.0;
      const double b = 2.0 * unit(rng) - 1.0;
      const Eigen::VectorXd lhs = F.apply(a * x + b * y);
      const Eigen::VectorXd rhs = a * F.apply(x) + b * F.apply(y);
      lc.linearity = std::max(lc.linearity, (lhs - rhs).cwiseAbs().maxCoeff());
    }

    // Interpolation error of the exact filtered smooth field.
    const ScalarField interp = interpolate(mesh, filtered_space, [&](double x, double y) {
      return reference_filter_value(dom, smooth, spec.radius, {x, y});
    });
    const Eigen::VectorXd at_q = evaluate_at_quadrature(interp);
    Eigen::VectorXd diff(at_q.size());
    for (int e = 0; e < m.num_elements(); ++e) {
      for (int q = 0; q < 4; ++q) {
        const Vec2 p = quadrature_point(m, e, q);
        diff[4 * e + q] = reference_filter_value(dom, smooth, spec.radius, p) - at_q[4 * e + q];
      }
    }
    const double w = quadrature_weight(m);
    lc.interpolation_error = {detail::lp_from_samples(diff, w, 1.0),
                              detail::lp_from_samples(diff, w, 2.0),
                              diff.cwiseAbs().maxCoeff()};

    // Oscillation at mesh frequency around the mean 1/2.
    Eigen::VectorXd checker(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      int i, j;
      if (density_space == Space::DG0) {
        i = static_cast<int>(k) % m.nx();
        j = static_cast<int>(k) / m.nx();
      } else {
        i = static_cast<int>(k) % (m.nx() + 1);
        j = static_cast<int>(k) / (m.nx() + 1);
      }
      checker[k] = (i + j) % 2 == 0 ? 1.0 : 0.0;
    }
    const ScalarField mean_filtered = interpolate(mesh, filtered_space, [&](double x, double y) {
      return reference_filter_value(dom, half, spec.radius, {x, y});
    });
    lc.oscillation_error = norm(
        ScalarField{mesh, filtered_space, F.apply(checker) - mean_filtered.coeffs}, NormKind::lp(2));
    report.levels.push_back(lc);
  }

  std::ostringstream why;
  report.min_interpolation_order.fill(std::numeric_limits<double>::infinity());
  report.oscillation_decreasing = true;
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    const auto& lc = report.levels[l];
    if (lc.box_violation > kBoxTol) {
      report.failures.push_back("box preservation violated by " + std::to_string(lc.box_violation));
    }
    if (lc.linearity > kLinearityTol) {
      report.failures.push_back("linearity defect " + std::to_string(lc.linearity));
    }
    if (lc.max_value > report.value_bound + kBoxTol) {
      report.failures.push_back("filtered value exceeds bound: " + std::to_string(lc.max_value));
    }
    if (lc.max_gradient > report.gradient_bound) {
      report.failures.push_back("filtered gradient " + std::to_string(lc.max_gradient) +
                                " exceeds level-independent bound " +
                                std::to_string(report.gradient_bound));
    }
    if (l > 0) {
      const auto& prev = report.levels[l - 1];
      const double ratio = std::log(prev.h / lc.h);
      for (int k = 0; k < 3; ++k) {
        const double order =
            std::log(prev.interpolation_error[k] / lc.interpolation_error[k]) / ratio;
        report.min_interpolation_order[k] = std::min(report.min_interpolation_order[k], order);
      }
      if (!(lc.oscillation_error < prev.oscillation_error)) report.oscillation_decreasing = false;
    }
  }
  const std::array<const char*, 3> names = {"L1", "L2", "Linf"};
  for (int k = 0; k < 3; ++k) {
    if (!(report.min_interpolation_order[k] >= kMinInterpolationOrder)) {
      report.failures.push_back(std::string("interpolation order in ") + names[k] + " = " +
                                std::to_string(report.min_interpolation_order[k]));
    }
  }
  if (!report.oscillation_decreasing) {
    report.failures.push_back("filtered oscillation response is not decreasing");
  }
  return report;
}

}  // namespace simpfem
