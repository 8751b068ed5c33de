#pragma once

#include <Eigen/Core>

#include <cmath>
#include <memory>
#include <string>

#include "simpfem/fem.hpp"
#include "simpfem/filter.hpp"
#include "simpfem/mesh.hpp"

namespace simpfem {

/// Design variable rho_h with its volume fraction.
struct DensityField : ScalarField {
  double gamma = 0.5;
};

inline DensityField constant_density(const MeshPtr& mesh, Space space, double value,
                                     double gamma) {
  DensityField d;
  d.mesh = mesh;
  d.space = space;
  d.coeffs = Eigen::VectorXd::Constant(space_dimension(*mesh, space), value);
  d.gamma = gamma;
  return d;
}

struct RegularizerSpec {
  enum class Kind { None, W1p, GinzburgLandau, TikhonovL2 };
  Kind kind = Kind::None;
  double epsilon = 0.0;
  double p = 2.0;

  static RegularizerSpec none() { return {}; }
  static RegularizerSpec w1p(double eps, double p) { return {Kind::W1p, eps, p}; }
  static RegularizerSpec ginzburg_landau(double eps) { return {Kind::GinzburgLandau, eps, 2.0}; }
  static RegularizerSpec tikhonov(double eps) { return {Kind::TikhonovL2, eps, 2.0}; }

  bool needs_gradient() const { return kind == Kind::W1p || kind == Kind::GinzburgLandau; }

  void validate(Space space) const {
    if (kind == Kind::None) return;
    if (!(epsilon > 0.0)) throw InvalidArgument("regularizer weight must be positive");
    if (kind == Kind::W1p && !(p > 1.0 && std::isfinite(p))) {
      throw InvalidArgument("W1p exponent must lie in (1, inf)");
    }
    if (needs_gradient() && space != Space::Q1) {
      throw InvalidArgument("gradient regularization requires a Q1 density space");
    }
  }
};

/// Smoothing of |grad rho|^(p-2) for p < 2.
inline constexpr double kPLaplaceDelta = 1e-8;

namespace detail {

/// eps/p int |grad rho|^p, and optionally its coefficient gradient.
inline double gradient_energy(const ScalarField& rho, double eps, double p,
                              Eigen::VectorXd* grad) {
  const Mesh& m = *rho.mesh;
  const Eigen::Matrix2Xd g = gradient_at_quadrature(rho);
  const double w = quadrature_weight(m);
  const ShapeGradients sg(m);
  double value = 0.0;
  if (grad) grad->setZero(rho.coeffs.size());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& nodes = m.element_nodes(e);
    for (int q = 0; q < 4; ++q) {
      const double gx = g(0, 4 * e + q);
      const double gy = g(1, 4 * e + q);
      const double mag2 = gx * gx + gy * gy;
      value += w * std::pow(mag2, 0.5 * p);
      if (!grad) continue;
      double weight;
      if (p == 2.0) {
        weight = 1.0;
      } else if (p < 2.0) {
        weight = std::pow(mag2 + kPLaplaceDelta * kPLaplaceDelta, 0.5 * (p - 2.0));
      } else {
        weight = std::pow(mag2, 0.5 * (p - 2.0));
      }
      for (int a = 0; a < 4; ++a) {
        (*grad)[nodes[a]] +=
            eps * w * weight * (gx * sg.grad[q][a].x + gy * sg.grad[q][a].y);
      }
    }
  }
  return eps / p * value;
}

}  // namespace detail

/// R(rho): W1p eps/p |grad rho|_p^p; Ginzburg-Landau eps/2 |grad rho|_2^2 +
/// 1/(2 eps) int rho (1 - rho) with nodal quadrature; Tikhonov eps/2 |rho|^2
/// with lumped masses.
inline double regularizer_value(const ScalarField& rho, const RegularizerSpec& spec) {
  spec.validate(rho.space);
  using K = RegularizerSpec::Kind;
  switch (spec.kind) {
    case K::None: return 0.0;
    case K::W1p: return detail::gradient_energy(rho, spec.epsilon, spec.p, nullptr);
    case K::GinzburgLandau: {
      const Eigen::VectorXd m = mass_weights(*rho.mesh, rho.space);
      const double well =
          (m.array() * rho.coeffs.array() * (1.0 - rho.coeffs.array())).sum();
      return detail::gradient_energy(rho, spec.epsilon, 2.0, nullptr) +
             well / (2.0 * spec.epsilon);
    }
    case K::TikhonovL2: {
      const Eigen::VectorXd m = mass_weights(*rho.mesh, rho.space);
      return 0.5 * spec.epsilon * (m.array() * rho.coeffs.array().square()).sum();
    }
  }
  return 0.0;
}

/// Coefficient gradient of regularizer_value.
inline Eigen::VectorXd regularizer_gradient(const ScalarField& rho, const RegularizerSpec& spec) {
  spec.validate(rho.space);
  using K = RegularizerSpec::Kind;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(rho.coeffs.size());
  switch (spec.kind) {
    case K::None: break;
    case K::W1p: detail::gradient_energy(rho, spec.epsilon, spec.p, &g); break;
    case K::GinzburgLandau: {
      detail::gradient_energy(rho, spec.epsilon, 2.0, &g);
      const Eigen::VectorXd m = mass_weights(*rho.mesh, rho.space);
      g.array() += m.array() * (1.0 - 2.0 * rho.coeffs.array()) / (2.0 * spec.epsilon);
      break;
    }
    case K::TikhonovL2: {
      const Eigen::VectorXd m = mass_weights(*rho.mesh, rho.space);
      g = spec.epsilon * m.cwiseProduct(rho.coeffs);
      break;
    }
  }
  return g;
}

/// J_h = F^T u + R(rho).
inline double objective(const DisplacementField& u, const ScalarField& rho,
                        const Eigen::VectorXd& load, const RegularizerSpec& spec) {
  return load.dot(u.coeffs) + regularizer_value(rho, spec);
}

/// Physical density k-argument F_h(rho) at every quadrature point.
inline Eigen::VectorXd physical_density(const FilterOperator& filter, const Eigen::VectorXd& rho) {
  return evaluate_at_quadrature(filter.filtered(rho));
}

/// Reduced gradient with the adjoint u_a = -u eliminated:
/// g = -W^T int k'(F_h rho) |E u|^2 phi + R'(rho).
inline Eigen::VectorXd reduced_gradient(const DisplacementField& u, const ScalarField& rho,
                                        const FilterOperator& filter, const MaterialModel& mat,
                                        const RegularizerSpec& spec) {
  const Mesh& m = *u.mesh;
  const Eigen::VectorXd rho_q = physical_density(filter, rho.coeffs);
  const Eigen::VectorXd energy = element_energy_density(u, mat);
  Eigen::VectorXd integrand(rho_q.size());
  for (Eigen::Index k = 0; k < rho_q.size(); ++k) {
    integrand[k] = simp_stiffness_derivative(rho_q[k], mat) * energy[k];
  }
  const Eigen::VectorXd functional = integrate_against_basis(m, filter.out_space(), integrand);
  return -filter.apply_adjoint(functional) + regularizer_gradient(rho, spec);
}

/// L(u, rho, u_a) = (f, u) + a_h(u, u_a; rho) - (f, u_a) + R(rho).
inline double lagrangian_value(const DisplacementField& u, const ScalarField& rho,
                               const DisplacementField& u_adj, const Eigen::VectorXd& load,
                               const MaterialModel& mat, const RegularizerSpec& spec,
                               const FilterOperator& filter) {
  const SparseMatrix K = assemble_system(u.mesh, physical_density(filter, rho.coeffs), mat);
  return load.dot(u.coeffs) + u.coeffs.dot(K * u_adj.coeffs) - load.dot(u_adj.coeffs) +
         regularizer_value(rho, spec);
}

// ---------------------------------------------------------------------------
// Problem description and the reduced objective rho -> J_h(u(rho), rho).

/// Mesh-independent problem data.
struct ProblemSpec {
  Domain domain;
  Traction traction;
  MaterialModel material;
  Space density_space = Space::DG0;
  RegularizerSpec regularizer;
  FilterSpec filter;
  Space filtered_space = Space::DG0;  // ignored without a filter
  double gamma = 0.5;
};

/// A ProblemSpec discretized on one mesh.
struct Problem {
  MeshPtr mesh;
  MaterialModel material;
  Eigen::VectorXd load;
  Space density_space = Space::DG0;
  FilterOperator filter;
  RegularizerSpec regularizer;
  double gamma = 0.5;
};

inline Problem instantiate(const ProblemSpec& spec, const MeshPtr& mesh) {
  spec.material.validate();
  spec.regularizer.validate(spec.density_space);
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) {
    throw InvalidArgument("volume fraction gamma must lie in (0, 1)");
  }
  Problem p;
  p.mesh = mesh;
  p.material = spec.material;
  p.load = assemble_load(*mesh, spec.traction);
  p.density_space = spec.density_space;
  const Space out =
      spec.filter.kind == FilterSpec::Kind::None ? spec.density_space : spec.filtered_space;
  p.filter = build_filter(mesh, spec.density_space, spec.filter, out);
  p.regularizer = spec.regularizer;
  p.gamma = spec.gamma;
  return p;
}

/// Everything evaluated at one design.
struct State {
  Eigen::VectorXd rho;
  Eigen::VectorXd rho_q;  // physical density at quadrature points
  DisplacementField u;
  double compliance = 0.0;
  double regularizer = 0.0;
  double objective = 0.0;
};

/// rho -> (u(rho), J_h) with the state solver reused across evaluations.
class ReducedObjective {
 public:
  explicit ReducedObjective(Problem problem, double solve_tol = kDefaultSolveTol)
      : problem_(std::move(problem)), solver_(problem_.mesh, solve_tol) {}

  const Problem& problem() const { return problem_; }

  ScalarField field(const Eigen::VectorXd& rho) const {
    return {problem_.mesh, problem_.density_space, rho};
  }

  State evaluate(const Eigen::VectorXd& rho) {
    State s;
    s.rho = rho;
    s.rho_q = physical_density(problem_.filter, rho);
    s.u = solver_.solve(s.rho_q, problem_.material, problem_.load);
    s.compliance = compliance(s.u, problem_.load);
    s.regularizer = regularizer_value(field(rho), problem_.regularizer);
    s.objective = s.compliance + s.regularizer;
    return s;
  }

  Eigen::VectorXd gradient(const State& s) const {
    return reduced_gradient(s.u, field(s.rho), problem_.filter, problem_.material,
                            problem_.regularizer);
  }

 private:
  Problem problem_;
  StateSolver solver_;
};

}  // namespace simpfem
