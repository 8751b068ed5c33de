#pragma once

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "simpfem/core.hpp"
#include "simpfem/mesh.hpp"

namespace simpfem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Lame coefficients and SIMP interpolation parameters.
struct MaterialModel {
  double mu = 0.38461538461538458;      // E = 1, nu = 0.3
  double lambda = 0.57692307692307687;
  double eps_simp = 1e-3;
  double p_s = 3.0;

  /// Plane-strain conversion from Young's modulus and Poisson's ratio.
  static MaterialModel from_young_poisson(double E, double nu) {
    if (!(E > 0.0) || !(nu >= 0.0 && nu < 0.5)) {
      throw InvalidArgument("material: need E > 0 and 0 <= nu < 0.5");
    }
    MaterialModel m;
    m.mu = E / (2.0 * (1.0 + nu));
    m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    return m;
  }

  void validate() const {
    if (!(mu > 0.0)) throw InvalidArgument("material: mu must be positive");
    if (!(lambda >= 0.0)) throw InvalidArgument("material: lambda must be nonnegative");
    if (!(eps_simp > 0.0 && eps_simp < 1.0)) {
      throw InvalidArgument("material: eps_simp must lie in (0, 1)");
    }
    if (!(p_s >= 1.0)) throw InvalidArgument("material: p_s must be >= 1");
  }
};

namespace detail {
inline constexpr double kBoxTol = 1e-12;

inline double checked_density(double rho) {
  if (!(rho >= -kBoxTol && rho <= 1.0 + kBoxTol)) {
    throw InvalidArgument("physical density " + std::to_string(rho) + " outside [0, 1]");
  }
  return std::clamp(rho, 0.0, 1.0);
}
}  // namespace detail

/// k(rho) = eps + (1 - eps) rho^p_s.
inline double simp_stiffness(double rho, const MaterialModel& mat) {
  const double r = detail::checked_density(rho);
  return mat.eps_simp + (1.0 - mat.eps_simp) * std::pow(r, mat.p_s);
}

/// k'(rho) = (1 - eps) p_s rho^(p_s - 1).
inline double simp_stiffness_derivative(double rho, const MaterialModel& mat) {
  const double r = detail::checked_density(rho);
  return (1.0 - mat.eps_simp) * mat.p_s * std::pow(r, mat.p_s - 1.0);
}

// ---------------------------------------------------------------------------
// Quadrature on the structured mesh. Points are indexed 4 e + q.

inline double quadrature_weight(const Mesh& mesh) { return 0.25 * mesh.element_area(); }

inline Vec2 quadrature_point(const Mesh& mesh, int e, int q) {
  return mesh.map_point(e, quad::xi(q), quad::eta(q));
}

inline Eigen::Index num_quadrature_points(const Mesh& mesh) {
  return static_cast<Eigen::Index>(quad::kPointsPerElement) * mesh.num_elements();
}

/// Physical derivatives of the four Q1 shape functions at each quadrature point.
struct ShapeGradients {
  // grad[q][a] = (dN_a/dx, dN_a/dy) at quadrature point q.
  std::array<std::array<Vec2, 4>, 4> grad{};
  std::array<std::array<double, 4>, 4> value{};

  explicit ShapeGradients(const Mesh& mesh) {
    const double sx = 2.0 / mesh.dx();
    const double sy = 2.0 / mesh.dy();
    for (int q = 0; q < 4; ++q) {
      for (int a = 0; a < 4; ++a) {
        value[q][a] = q1::shape(a, quad::xi(q), quad::eta(q));
        grad[q][a] = {q1::dshape_dxi(a, quad::eta(q)) * sx, q1::dshape_deta(a, quad::xi(q)) * sy};
      }
    }
  }
};

/// Values of a scalar field at every quadrature point.
inline Eigen::VectorXd evaluate_at_quadrature(const ScalarField& f) {
  const Mesh& m = *f.mesh;
  Eigen::VectorXd out(num_quadrature_points(m));
  if (f.space == Space::DG0) {
    for (int e = 0; e < m.num_elements(); ++e) out.segment<4>(4 * e).setConstant(f.coeffs[e]);
    return out;
  }
  const ShapeGradients sg(m);
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& nodes = m.element_nodes(e);
    for (int q = 0; q < 4; ++q) {
      double v = 0.0;
      for (int a = 0; a < 4; ++a) v += sg.value[q][a] * f.coeffs[nodes[a]];
      out[4 * e + q] = v;
    }
  }
  return out;
}

/// Gradient of a Q1 field at every quadrature point (rows: x, y).
inline Eigen::Matrix2Xd gradient_at_quadrature(const ScalarField& f) {
  if (f.space != Space::Q1) throw InvalidArgument("gradient requires a Q1 field");
  const Mesh& m = *f.mesh;
  const ShapeGradients sg(m);
  Eigen::Matrix2Xd out(2, num_quadrature_points(m));
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& nodes = m.element_nodes(e);
    for (int q = 0; q < 4; ++q) {
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 4; ++a) {
        gx += sg.grad[q][a].x * f.coeffs[nodes[a]];
        gy += sg.grad[q][a].y * f.coeffs[nodes[a]];
      }
      out(0, 4 * e + q) = gx;
      out(1, 4 * e + q) = gy;
    }
  }
  return out;
}

/// Adjoint of quadrature evaluation: c_j = sum_q w_q v_q phi_j(x_q).
inline Eigen::VectorXd integrate_against_basis(const Mesh& m, Space space,
                                               const Eigen::VectorXd& qp_values) {
  const double w = quadrature_weight(m);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_dimension(m, space));
  if (space == Space::DG0) {
    for (int e = 0; e < m.num_elements(); ++e) out[e] = w * qp_values.segment<4>(4 * e).sum();
    return out;
  }
  const ShapeGradients sg(m);
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& nodes = m.element_nodes(e);
    for (int q = 0; q < 4; ++q) {
      for (int a = 0; a < 4; ++a) out[nodes[a]] += w * qp_values[4 * e + q] * sg.value[q][a];
    }
  }
  return out;
}

/// Integrals of the basis functions: element areas (DG0) or lumped nodal masses (Q1).
inline Eigen::VectorXd mass_weights(const Mesh& m, Space space) {
  return integrate_against_basis(m, space, Eigen::VectorXd::Ones(num_quadrature_points(m)));
}

// ---------------------------------------------------------------------------
// Elasticity operator.

using ElementMatrix = Eigen::Matrix<double, 8, 8>;

/// Per-quadrature-point element matrices (weights included) for unit k,
/// split into the mu and lambda parts. Local dof = 2 a + component.
struct ElementKernel {
  std::array<ElementMatrix, 4> shear{};   // multiplies mu
  std::array<ElementMatrix, 4> volume{};  // multiplies lambda

  explicit ElementKernel(const Mesh& mesh) {
    const ShapeGradients sg(mesh);
    const double w = quadrature_weight(mesh);
    for (int q = 0; q < 4; ++q) {
      for (int a = 0; a < 4; ++a) {
        const std::array<double, 2> ga = {sg.grad[q][a].x, sg.grad[q][a].y};
        for (int b = 0; b < 4; ++b) {
          const std::array<double, 2> gb = {sg.grad[q][b].x, sg.grad[q][b].y};
          const double dot = ga[0] * gb[0] + ga[1] * gb[1];
          for (int c = 0; c < 2; ++c) {
            for (int d = 0; d < 2; ++d) {
              // 2 D(phi_ac):D(phi_bd) = delta_cd grad N_a . grad N_b + d_d N_a d_c N_b
              shear[q](2 * a + c, 2 * b + d) = w * ((c == d ? dot : 0.0) + ga[d] * gb[c]);
              volume[q](2 * a + c, 2 * b + d) = w * ga[c] * gb[d];
            }
          }
        }
      }
    }
  }

  ElementMatrix at(int q, const MaterialModel& mat) const {
    return mat.mu * shear[q] + mat.lambda * volume[q];
  }
};

inline std::array<int, 8> element_dofs(const Mesh& m, int e) {
  const auto& n = m.element_nodes(e);
  return {2 * n[0], 2 * n[0] + 1, 2 * n[1], 2 * n[1] + 1,
          2 * n[2], 2 * n[2] + 1, 2 * n[3], 2 * n[3] + 1};
}

/// Assembles K(rho) into a fixed sparsity pattern, both the full matrix and
/// the block on free (non-Dirichlet) dofs.
class StiffnessAssembler {
 public:
  explicit StiffnessAssembler(MeshPtr mesh) : mesh_(std::move(mesh)), kernel_(*mesh_) {
    const Mesh& m = *mesh_;
    const auto& fixed = m.fixed_dofs();
    reduced_index_.assign(fixed.size(), -1);
    for (std::size_t d = 0; d < fixed.size(); ++d) {
      if (!fixed[d]) {
        reduced_index_[d] = static_cast<int>(free_dofs_.size());
        free_dofs_.push_back(static_cast<int>(d));
      }
    }
    std::vector<Eigen::Triplet<double>> full_pattern, red_pattern;
    full_pattern.reserve(64 * static_cast<std::size_t>(m.num_elements()));
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto dofs = element_dofs(m, e);
      for (int r : dofs) {
        for (int c : dofs) {
          full_pattern.emplace_back(r, c, 0.0);
          const int rr = reduced_index_[r];
          const int rc = reduced_index_[c];
          if (rr >= 0 && rc >= 0) red_pattern.emplace_back(rr, rc, 0.0);
        }
      }
    }
    pattern_full_.resize(m.num_dofs(), m.num_dofs());
    pattern_full_.setFromTriplets(full_pattern.begin(), full_pattern.end());
    pattern_full_.makeCompressed();
    const auto nf = static_cast<Eigen::Index>(free_dofs_.size());
    pattern_reduced_.resize(nf, nf);
    pattern_reduced_.setFromTriplets(red_pattern.begin(), red_pattern.end());
    pattern_reduced_.makeCompressed();

    scatter_full_.resize(64 * static_cast<std::size_t>(m.num_elements()));
    scatter_reduced_.resize(64 * static_cast<std::size_t>(m.num_elements()));
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto dofs = element_dofs(m, e);
      for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
          const std::size_t slot = 64 * static_cast<std::size_t>(e) + 8 * i + j;
          scatter_full_[slot] = find_slot(pattern_full_, dofs[i], dofs[j]);
          const int rr = reduced_index_[dofs[i]];
          const int rc = reduced_index_[dofs[j]];
          scatter_reduced_[slot] = (rr >= 0 && rc >= 0) ? find_slot(pattern_reduced_, rr, rc) : -1;
        }
      }
    }
  }

  const MeshPtr& mesh() const { return mesh_; }
  const ElementKernel& kernel() const { return kernel_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  /// Global dof -> position among free dofs, or -1 for prescribed dofs.
  const std::vector<int>& reduced_index() const { return reduced_index_; }

  /// Full stiffness matrix (prescribed dofs not eliminated).
  SparseMatrix full(const Eigen::VectorXd& rho_q, const MaterialModel& mat) const {
    SparseMatrix K = pattern_full_;
    scatter(rho_q, mat, K, scatter_full_);
    return K;
  }

  /// Stiffness block on free dofs, written into `K` (pattern reused).
  void reduced(const Eigen::VectorXd& rho_q, const MaterialModel& mat, SparseMatrix& K) const {
    if (K.rows() != pattern_reduced_.rows() || K.nonZeros() != pattern_reduced_.nonZeros()) {
      K = pattern_reduced_;
    }
    scatter(rho_q, mat, K, scatter_reduced_);
  }

 private:
  static int find_slot(const SparseMatrix& A, int row, int col) {
    const int* inner = A.innerIndexPtr();
    const int begin = A.outerIndexPtr()[col];
    const int end = A.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(inner + begin, inner + end, row);
    return static_cast<int>(it - inner);
  }

  void scatter(const Eigen::VectorXd& rho_q, const MaterialModel& mat, SparseMatrix& K,
               const std::vector<int>& slots) const {
    const Mesh& m = *mesh_;
    if (rho_q.size() != num_quadrature_points(m)) {
      throw InvalidArgument("assemble: expected one density per quadrature point");
    }
    std::array<ElementMatrix, 4> unit;
    for (int q = 0; q < 4; ++q) unit[q] = kernel_.at(q, mat);
    double* values = K.valuePtr();
    std::fill(values, values + K.nonZeros(), 0.0);
    ElementMatrix ke;
    for (int e = 0; e < m.num_elements(); ++e) {
      ke.setZero();
      for (int q = 0; q < 4; ++q) ke += simp_stiffness(rho_q[4 * e + q], mat) * unit[q];
      const int* s = slots.data() + 64 * static_cast<std::size_t>(e);
      for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
          const int slot = s[8 * i + j];
          if (slot >= 0) values[slot] += ke(i, j);
        }
      }
    }
  }

  MeshPtr mesh_;
  ElementKernel kernel_;
  std::vector<int> free_dofs_;
  std::vector<int> reduced_index_;
  SparseMatrix pattern_full_;
  SparseMatrix pattern_reduced_;
  std::vector<int> scatter_full_;
  std::vector<int> scatter_reduced_;
};

/// K(rho) with entries sum_e sum_q w k(rho_q) [2 mu D:D + lambda div div].
inline SparseMatrix assemble_system(const MeshPtr& mesh, const Eigen::VectorXd& rho_q,
                                    const MaterialModel& mat) {
  mat.validate();
  return StiffnessAssembler(mesh).full(rho_q, mat);
}

// ---------------------------------------------------------------------------
// Loads.

/// Closed-form traction f(x, y) on the Neumann boundary.
struct Traction {
  std::function<Vec2(double, double)> value;

  static Traction constant(double fx, double fy) {
    return {[fx, fy](double, double) { return Vec2{fx, fy}; }};
  }
  static Traction zero() { return constant(0.0, 0.0); }
};

/// F_i = int_{Gamma_N} f . phi_i ds with 2-point Gauss on each loaded edge piece.
inline Eigen::VectorXd assemble_load(const Mesh& mesh, const Traction& f) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.num_dofs());
  if (!f.value) return F;
  for (const auto& edge : mesh.neumann_edges()) {
    const Vec2 pa = mesh.node(edge.a);
    const Vec2 pb = mesh.node(edge.b);
    const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
    const double half = 0.5 * (edge.s1 - edge.s0);
    for (double g : quad::kGauss1D) {
      const double s = edge.s0 + half * (1.0 + g);
      const double w = half * len;
      const Vec2 x{pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y)};
      const Vec2 t = f.value(x.x, x.y);
      F[2 * edge.a] += w * t.x * (1.0 - s);
      F[2 * edge.a + 1] += w * t.y * (1.0 - s);
      F[2 * edge.b] += w * t.x * s;
      F[2 * edge.b + 1] += w * t.y * s;
    }
  }
  const auto& fixed = mesh.fixed_dofs();
  for (std::size_t d = 0; d < fixed.size(); ++d) {
    if (fixed[d]) F[static_cast<Eigen::Index>(d)] = 0.0;
  }
  return F;
}

// ---------------------------------------------------------------------------
// Displacements and the linear solve.

/// Vector-Q1 displacement, interleaved (u_x, u_y) per node.
struct DisplacementField {
  MeshPtr mesh;
  Eigen::VectorXd coeffs;
};

inline constexpr double kDefaultSolveTol = 1e-10;
inline constexpr Eigen::Index kDirectSolveLimit = 200000;

namespace detail {

inline Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
  return out;
}

/// Solves the SPD system A x = b to relative residual `tol`.
class SpdSolver {
 public:
  Eigen::VectorXd solve(const SparseMatrix& A, const Eigen::VectorXd& b, double tol) {
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
      last_residual_ = 0.0;
      return Eigen::VectorXd::Zero(b.size());
    }
    Eigen::VectorXd x;
    if (A.rows() <= kDirectSolveLimit) {
      if (!analyzed_ || A.rows() != analyzed_rows_) {
        llt_.analyzePattern(A);
        analyzed_ = true;
        analyzed_rows_ = A.rows();
      }
      llt_.factorize(A);
      if (llt_.info() != Eigen::Success) {
        throw NumericalFailure("stiffness matrix is not positive definite");
      }
      x = llt_.solve(b);
      Eigen::VectorXd r = b - A * x;
      if (r.norm() > tol * bnorm) {
        x += llt_.solve(r);  // one step of iterative refinement
      }
    } else {
      Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                               Eigen::IncompleteCholesky<double>>
          cg;
      cg.setTolerance(tol);
      cg.setMaxIterations(static_cast<int>(std::min<Eigen::Index>(10 * A.rows(), 100000)));
      cg.compute(A);
      if (cg.info() != Eigen::Success) {
        throw NumericalFailure("preconditioner construction failed");
      }
      x = cg.solve(b);
      if (cg.info() != Eigen::Success) {
        throw NumericalFailure("conjugate gradients stagnated", cg.error());
      }
    }
    last_residual_ = (b - A * x).norm() / bnorm;
    if (!(last_residual_ <= tol)) {
      throw NumericalFailure("linear solve missed residual tolerance", last_residual_);
    }
    return x;
  }

  double last_residual() const { return last_residual_; }

 private:
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  bool analyzed_ = false;
  Eigen::Index analyzed_rows_ = -1;
  double last_residual_ = 0.0;
};

inline SparseMatrix free_block(const Mesh& mesh, const SparseMatrix& K,
                               std::vector<int>& free_dofs, std::vector<int>& reduced) {
  const auto& fixed = mesh.fixed_dofs();
  if (K.rows() != mesh.num_dofs() || K.cols() != mesh.num_dofs()) {
    throw InvalidArgument("solve: matrix size does not match mesh");
  }
  reduced.assign(fixed.size(), -1);
  free_dofs.clear();
  for (std::size_t d = 0; d < fixed.size(); ++d) {
    if (!fixed[d]) {
      reduced[d] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(static_cast<int>(d));
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(K.nonZeros()));
  for (int c = 0; c < K.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(K, c); it; ++it) {
      const int r = reduced[static_cast<std::size_t>(it.row())];
      const int cc = reduced[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) trips.emplace_back(r, cc, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(free_dofs.size());
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

}  // namespace detail

/// Solves K u = F for u vanishing on prescribed dofs.
inline DisplacementField solve_displacement(const MeshPtr& mesh, const SparseMatrix& K,
                                            const Eigen::VectorXd& F,
                                            double tol = kDefaultSolveTol) {
  std::vector<int> free_dofs, reduced;
  const SparseMatrix A = detail::free_block(*mesh, K, free_dofs, reduced);
  detail::SpdSolver solver;
  const Eigen::VectorXd x = solver.solve(A, detail::gather(F, free_dofs), tol);
  DisplacementField u{mesh, Eigen::VectorXd::Zero(mesh->num_dofs())};
  for (std::size_t k = 0; k < free_dofs.size(); ++k) {
    u.coeffs[free_dofs[k]] = x[static_cast<Eigen::Index>(k)];
  }
  return u;
}

/// Solves K u = F with u = g on prescribed dofs (lifting of boundary data).
inline Eigen::VectorXd solve_with_boundary_values(const MeshPtr& mesh, const SparseMatrix& K,
                                                  const Eigen::VectorXd& F,
                                                  const Eigen::VectorXd& g,
                                                  double tol = kDefaultSolveTol) {
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(mesh->num_dofs());
  const auto& fixed = mesh->fixed_dofs();
  for (std::size_t d = 0; d < fixed.size(); ++d) {
    if (fixed[d]) lift[static_cast<Eigen::Index>(d)] = g[static_cast<Eigen::Index>(d)];
  }
  const Eigen::VectorXd rhs = F - K * lift;
  DisplacementField u = solve_displacement(mesh, K, rhs, tol);
  return u.coeffs + lift;
}

/// Repeated state solves on one mesh with the factorization pattern reused.
class StateSolver {
 public:
  explicit StateSolver(MeshPtr mesh, double tol = kDefaultSolveTol)
      : assembler_(std::move(mesh)), tol_(tol) {}

  const StiffnessAssembler& assembler() const { return assembler_; }
  const MeshPtr& mesh() const { return assembler_.mesh(); }

  DisplacementField solve(const Eigen::VectorXd& rho_q, const MaterialModel& mat,
                          const Eigen::VectorXd& F) {
    assembler_.reduced(rho_q, mat, K_);
    const auto& free_dofs = assembler_.free_dofs();
    const Eigen::VectorXd x = solver_.solve(K_, detail::gather(F, free_dofs), tol_);
    DisplacementField u{mesh(), Eigen::VectorXd::Zero(mesh()->num_dofs())};
    for (std::size_t k = 0; k < free_dofs.size(); ++k) {
      u.coeffs[free_dofs[k]] = x[static_cast<Eigen::Index>(k)];
    }
    return u;
  }

  double last_residual() const { return solver_.last_residual(); }

 private:
  StiffnessAssembler assembler_;
  detail::SpdSolver solver_;
  SparseMatrix K_;
  double tol_;
};

/// |E u|^2 = 2 mu |D(u)|^2 + lambda (div u)^2 at every quadrature point.
inline Eigen::VectorXd element_energy_density(const DisplacementField& u,
                                              const MaterialModel& mat) {
  const Mesh& m = *u.mesh;
  const ShapeGradients sg(m);
  Eigen::VectorXd out(num_quadrature_points(m));
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& nodes = m.element_nodes(e);
    for (int q = 0; q < 4; ++q) {
      double g[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // g[c][k] = d u_c / d x_k
      for (int a = 0; a < 4; ++a) {
        const double ux = u.coeffs[2 * nodes[a]];
        const double uy = u.coeffs[2 * nodes[a] + 1];
        g[0][0] += ux * sg.grad[q][a].x;
        g[0][1] += ux * sg.grad[q][a].y;
        g[1][0] += uy * sg.grad[q][a].x;
        g[1][1] += uy * sg.grad[q][a].y;
      }
      const double dxy = 0.5 * (g[0][1] + g[1][0]);
      const double dd = g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * dxy * dxy;
      const double div = g[0][0] + g[1][1];
      out[4 * e + q] = 2.0 * mat.mu * dd + mat.lambda * div * div;
    }
  }
  return out;
}

/// Work of the external load, F^T u.
inline double compliance(const DisplacementField& u, const Eigen::VectorXd& F) {
  return F.dot(u.coeffs);
}

/// Strain energy u^T K u.
inline double strain_energy(const DisplacementField& u, const SparseMatrix& K) {
  return u.coeffs.dot(K * u.coeffs);
}

}  // namespace simpfem
