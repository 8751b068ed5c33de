#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "simpfem/filter.hpp"

using namespace simpfem;
using testing_helpers::cantilever;
using testing_helpers::uniform_vector;

namespace {

// Cartesian oracle for (F eta)(x): tensor Gauss on a fine grid of subcells
// covering the kernel support clipped to the domain.
double cartesian_convolution(const Domain& d, const std::function<double(double, double)>& eta,
                             double r, Vec2 x, int cells = 240) {
  const double x0 = std::max(0.0, x.x - r), x1 = std::min(d.width, x.x + r);
  const double y0 = std::max(0.0, x.y - r), y1 = std::min(d.height, x.y + r);
  const double hx = (x1 - x0) / cells, hy = (y1 - y0) / cells;
  const quad::Rule g = quad::gauss_legendre(3);
  double total = 0.0;
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      for (std::size_t a = 0; a < g.nodes.size(); ++a) {
        for (std::size_t b = 0; b < g.nodes.size(); ++b) {
          const double px = x0 + hx * (i + 0.5 * (1 + g.nodes[a]));
          const double py = y0 + hy * (j + 0.5 * (1 + g.nodes[b]));
          total += 0.25 * hx * hy * g.weights[a] * g.weights[b] *
                   cone_kernel(std::hypot(px - x.x, py - x.y), r) * eta(px, py);
        }
      }
    }
  }
  return total;
}

// Dense brute force of the filter matrix over every element, no support culling.
Eigen::MatrixXd dense_filter(const Mesh& m, Space in, Space out, const FilterSpec& spec) {
  const auto targets = interpolation_nodes(m, out);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(targets.size()),
                                            space_dimension(m, in));
  const double g = 1.0 / std::sqrt(3.0);
  const double w = 0.25 * m.dx() * m.dy();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto& n = m.element_nodes(e);
      const Vec2 lo = m.node(n[0]);
      for (double xi : {-g, g}) {
        for (double eta : {-g, g}) {
          const double px = lo.x + 0.5 * m.dx() * (1 + xi);
          const double py = lo.y + 0.5 * m.dy() * (1 + eta);
          const double k = cone_kernel(std::hypot(px - targets[t].x, py - targets[t].y), spec.radius);
          if (in == Space::DG0) {
            W(static_cast<Eigen::Index>(t), e) += k * w;
          } else {
            const double s = 0.5 * (1 + xi), u = 0.5 * (1 + eta);
            const double phi[4] = {(1 - s) * (1 - u), s * (1 - u), s * u, (1 - s) * u};
            for (int a = 0; a < 4; ++a) W(static_cast<Eigen::Index>(t), n[a]) += k * w * phi[a];
          }
        }
      }
    }
    const double sum = W.row(static_cast<Eigen::Index>(t)).sum();
    if (spec.policy == FilterSpec::BoundaryPolicy::Renormalize || sum > 1.0) {
      W.row(static_cast<Eigen::Index>(t)) /= sum;
    }
  }
  return W;
}

}  // namespace

TEST(Cone, KernelShapeAndUnitMass) {
  const double r = 0.3;
  EXPECT_NEAR(cone_kernel(0.0, r), 3.0 / (kPi * r * r), 1e-14);
  EXPECT_EQ(cone_kernel(r, r), 0.0);
  EXPECT_EQ(cone_kernel(2 * r, r), 0.0);
  // int_0^r c (1 - s/r) 2 pi s ds = c pi r^2 / 3 = 1.
  const quad::Rule g = quad::gauss_legendre(8);
  double mass = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double s = 0.5 * r * (1 + g.nodes[i]);
    mass += 0.5 * r * g.weights[i] * cone_kernel(s, r) * 2 * kPi * s;
  }
  EXPECT_NEAR(mass, 1.0, 1e-14);
}

TEST(ReferenceFilter, AnalyticValuesForConstantsAndLinears) {
  const Domain d = cantilever(2.0, 1.0);
  const auto one = [](double, double) { return 1.0; };
  const double r = 0.2;
  EXPECT_NEAR(reference_filter_value(d, one, r, {1.0, 0.5}), 1.0, 1e-13);
  EXPECT_NEAR(reference_filter_value(d, one, r, {0.0, 0.0}), 0.25, 1e-13);
  EXPECT_NEAR(reference_filter_value(d, one, r, {2.0, 1.0}), 0.25, 1e-13);
  EXPECT_NEAR(reference_filter_value(d, one, r, {1.0, 0.0}), 0.5, 1e-13);
  EXPECT_NEAR(reference_filter_value(d, one, r, {0.0, 0.5}), 0.5, 1e-13);
  // The kernel is radially symmetric, so linears are reproduced away from the boundary.
  const auto lin = [](double x, double y) { return 0.3 + 2 * x - y; };
  EXPECT_NEAR(reference_filter_value(d, lin, r, {0.7, 0.4}), lin(0.7, 0.4), 1e-13);
}

TEST(ReferenceFilter, MatchesCartesianOracleNearCorners) {
  const Domain d = cantilever(2.0, 1.0);
  const auto eta = [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y) + x * y; };
  for (Vec2 x : {Vec2{0.05, 0.1}, Vec2{1.93, 0.97}, Vec2{1.0, 0.02}, Vec2{0.6, 0.5}}) {
    const double polar = reference_filter_value(d, eta, 0.25, x, 16, 16);
    const double cart = cartesian_convolution(d, eta, 0.25, x);
    EXPECT_NEAR(polar, cart, 1e-6) << x.x << "," << x.y;
  }
}

struct FilterCase {
  Space in;
  Space out;
  FilterSpec::BoundaryPolicy policy;
};

class FilterMatrix : public ::testing::TestWithParam<FilterCase> {};

TEST_P(FilterMatrix, MatchesDenseBruteForce) {
  const auto c = GetParam();
  const auto m = build_mesh(cantilever(1.5, 1.0), 9, 6);
  const FilterSpec spec = FilterSpec::cone(0.37, c.policy);
  const FilterOperator F = build_filter(m, c.in, spec, c.out);
  const Eigen::MatrixXd oracle = dense_filter(*m, c.in, c.out, spec);
  EXPECT_LE((Eigen::MatrixXd(F.matrix()) - oracle).cwiseAbs().maxCoeff(), 1e-15);
}

TEST_P(FilterMatrix, BoxPreservationAndRowSums) {
  const auto c = GetParam();
  const auto m = build_mesh(cantilever(1.5, 1.0), 12, 8);
  const FilterOperator F = build_filter(m, c.in, FilterSpec::cone(0.3, c.policy), c.out);
  const Eigen::VectorXd rows = F.apply(Eigen::VectorXd::Ones(F.matrix().cols()));
  EXPECT_LE(rows.maxCoeff(), 1.0 + 1e-15);
  if (c.policy == FilterSpec::BoundaryPolicy::Renormalize) {
    EXPECT_LE((rows.array() - 1.0).abs().maxCoeff(), 1e-14);
  } else {
    EXPECT_LT(rows.minCoeff(), 0.5);  // corners keep about a quarter of the mass
  }
  EXPECT_GE(Eigen::MatrixXd(F.matrix()).minCoeff(), 0.0);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd y = F.apply(uniform_vector(F.matrix().cols(), rng));
    EXPECT_GE(y.minCoeff(), 0.0);
    EXPECT_LE(y.maxCoeff(), 1.0 + 1e-12);
  }
}

TEST_P(FilterMatrix, AdjointIdentity) {
  const auto c = GetParam();
  const auto m = build_mesh(cantilever(), 7, 7);
  const FilterOperator F = build_filter(m, c.in, FilterSpec::cone(0.25, c.policy), c.out);
  std::mt19937_64 rng(22);
  const Eigen::VectorXd x = uniform_vector(F.matrix().cols(), rng, -1, 1);
  const Eigen::VectorXd y = uniform_vector(F.matrix().rows(), rng, -1, 1);
  EXPECT_NEAR(y.dot(F.apply(x)), F.apply_adjoint(y).dot(x), 1e-13);
  EXPECT_THROW(F.apply(y.head(3)), InvalidArgument);
}

INSTANTIATE_TEST_SUITE_P(
    Spaces, FilterMatrix,
    ::testing::Values(FilterCase{Space::DG0, Space::DG0, FilterSpec::BoundaryPolicy::Truncate},
                      FilterCase{Space::DG0, Space::Q1, FilterSpec::BoundaryPolicy::Truncate},
                      FilterCase{Space::Q1, Space::Q1, FilterSpec::BoundaryPolicy::Truncate},
                      FilterCase{Space::DG0, Space::DG0, FilterSpec::BoundaryPolicy::Renormalize},
                      FilterCase{Space::Q1, Space::DG0, FilterSpec::BoundaryPolicy::Renormalize}));

TEST(Filter, DiscreteConvergesToContinuousConvolution) {
  const Domain d = cantilever(2.0, 1.0);
  const auto eta = [](double x, double y) { return 0.5 + 0.4 * std::sin(2 * x) * std::cos(3 * y); };
  const double r = 0.3;
  std::vector<double> errs;
  for (int n : {8, 16, 32}) {
    const auto m = build_mesh(d, 2 * n, n);
    const FilterOperator F = build_filter(m, Space::Q1, FilterSpec::cone(r), Space::Q1);
    const ScalarField rho = interpolate(m, Space::Q1, eta);
    const Eigen::VectorXd y = F.apply(rho.coeffs);
    double err = 0.0;
    for (int k = 0; k < m->num_nodes(); ++k) {
      err = std::max(err, std::abs(y[k] - reference_filter_value(d, eta, r, m->node(k))));
    }
    errs.push_back(err);
  }
  EXPECT_LT(errs[1], errs[0]);
  EXPECT_LT(errs[2], errs[1]);
  EXPECT_LT(errs[2], 5e-3);
}

TEST(Filter, IdentityAndValidation) {
  const auto m = build_mesh(cantilever(), 3, 3);
  const FilterOperator I = build_filter(m, Space::DG0, FilterSpec::none());
  EXPECT_TRUE(I.is_identity());
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(9, 0, 1);
  EXPECT_EQ(I.apply(x), x);
  EXPECT_THROW(build_filter(m, Space::DG0, FilterSpec::none(), Space::Q1), InvalidArgument);
  EXPECT_THROW(build_filter(m, Space::DG0, FilterSpec::cone(0.0)), InvalidArgument);
  EXPECT_THROW(build_filter(m, Space::DG0, FilterSpec::cone(-1.0)), InvalidArgument);
}

TEST(Filter, UnderResolutionFlag) {
  const auto m = build_mesh(cantilever(), 10, 10);
  EXPECT_TRUE(build_filter(m, Space::DG0, FilterSpec::cone(0.2)).under_resolved());
  EXPECT_FALSE(build_filter(m, Space::DG0, FilterSpec::cone(0.3)).under_resolved());
}

class Assumptions : public ::testing::TestWithParam<std::pair<Space, Space>> {};

TEST_P(Assumptions, HoldOnNestedFamily) {
  const auto [in, out] = GetParam();
  const auto fam = mesh_family(build_mesh(cantilever(2.0, 1.0), 8, 4), 3);
  const FilterReport rep = check_assumptions(fam, in, FilterSpec::cone(0.3), out, 3, 20, 0.4);
  EXPECT_TRUE(rep.passed()) << (rep.failures.empty() ? "" : rep.failures.front());
  for (const auto& l : rep.levels) {
    EXPECT_LE(l.box_violation, kBoxTol);
    EXPECT_LE(l.linearity, kLinearityTol);
    EXPECT_LE(l.max_value, 1.0 + kBoxTol);
    EXPECT_LE(l.max_gradient, rep.gradient_bound);
  }
  for (double o : rep.min_interpolation_order) EXPECT_GE(o, kMinInterpolationOrder);
  EXPECT_TRUE(rep.oscillation_decreasing);
}

INSTANTIATE_TEST_SUITE_P(Spaces, Assumptions,
                         ::testing::Values(std::pair{Space::DG0, Space::DG0},
                                           std::pair{Space::DG0, Space::Q1},
                                           std::pair{Space::Q1, Space::Q1}));

TEST(Assumptions, NeedThreeSuccessiveLevels) {
  const auto fam = mesh_family(build_mesh(cantilever(), 4, 4), 2);
  EXPECT_THROW(check_assumptions(fam, Space::DG0, FilterSpec::cone(0.3), Space::DG0),
               InvalidArgument);
  const auto base = build_mesh(cantilever(), 4, 4);
  const std::vector<MeshPtr> skip = {base, refine(base), refine(refine(refine(base)))};
  EXPECT_THROW(check_assumptions(skip, Space::DG0, FilterSpec::cone(0.3), Space::DG0),
               InvalidArgument);
  const auto fam3 = mesh_family(base, 3);
  EXPECT_THROW(check_assumptions(fam3, Space::DG0, FilterSpec::none(), Space::DG0), InvalidArgument);
}
