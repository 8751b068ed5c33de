#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "simpfem/mesh.hpp"

using namespace simpfem;
using testing_helpers::cantilever;

TEST(Mesh, CountsAndSpacing) {
  const auto m = build_mesh(cantilever(3.0, 1.0), 30, 10);
  EXPECT_EQ(m->num_nodes(), 31 * 11);
  EXPECT_EQ(m->num_elements(), 300);
  EXPECT_EQ(m->num_dofs(), 2 * 31 * 11);
  EXPECT_DOUBLE_EQ(m->dx(), 0.1);
  EXPECT_DOUBLE_EQ(m->dy(), 0.1);
  EXPECT_NEAR(m->h(), std::sqrt(0.02), 1e-15);
  EXPECT_NEAR(m->element_area(), 0.01, 1e-15);
}

TEST(Mesh, ElementsAreCounterClockwise) {
  const auto m = build_mesh(cantilever(2.0, 1.0), 6, 4);
  for (int e = 0; e < m->num_elements(); ++e) {
    const auto& n = m->element_nodes(e);
    double area2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      const Vec2 p = m->node(n[a]);
      const Vec2 q = m->node(n[(a + 1) % 4]);
      area2 += p.x * q.y - q.x * p.y;
    }
    EXPECT_NEAR(0.5 * area2, m->element_area(), 1e-14);
    const Vec2 c = m->element_center(e);
    const Vec2 mp = m->map_point(e, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(c.x, mp.x);
    EXPECT_DOUBLE_EQ(c.y, mp.y);
  }
}

TEST(Mesh, RefinementSharesCoordinatesExactly) {
  const auto base = build_mesh(cantilever(3.0, 1.0), 3, 1);
  const auto fam = mesh_family(base, 4);
  ASSERT_EQ(fam.size(), 4u);
  const auto& fine = *fam.back();
  EXPECT_EQ(fine.nx(), 24);
  EXPECT_EQ(fine.depth_below(base.get()), 3);
  EXPECT_EQ(base->depth_below(fam.back().get()), -1);
  for (int j = 0; j <= base->ny(); ++j) {
    for (int i = 0; i <= base->nx(); ++i) {
      const Vec2 c = base->node(base->node_index(i, j));
      const Vec2 f = fine.node(fine.node_index(8 * i, 8 * j));
      EXPECT_EQ(c.x, f.x);
      EXPECT_EQ(c.y, f.y);
    }
  }
}

TEST(Mesh, DirichletDofs) {
  Domain d = cantilever();
  d.dirichlet.push_back({Side::Bottom, 0.5, 1.0, kComponentY});
  const auto m = build_mesh(d, 4, 4);
  const auto& fixed = m->fixed_dofs();
  for (int j = 0; j <= 4; ++j) {
    const int n = m->node_index(0, j);
    EXPECT_TRUE(fixed[2 * n]);
    EXPECT_TRUE(fixed[2 * n + 1]);
  }
  for (int i = 2; i <= 4; ++i) {
    const int n = m->node_index(i, 0);
    EXPECT_FALSE(fixed[2 * n]);
    EXPECT_TRUE(fixed[2 * n + 1]);
  }
  EXPECT_FALSE(fixed[2 * m->node_index(1, 0) + 1]);
  EXPECT_EQ(m->dirichlet_nodes().size(), 5u + 3u);
}

TEST(Mesh, NeumannEdgesAreClipped) {
  const auto m = build_mesh(cantilever(), 4, 4);
  // [0.45, 0.55] on the right side lies inside edge k = 1 ([0.25, 0.5]) and k = 2.
  const auto& edges = m->neumann_edges();
  ASSERT_EQ(edges.size(), 2u);
  double length = 0.0;
  for (const auto& e : edges) {
    EXPECT_EQ(e.side, Side::Right);
    length += (e.s1 - e.s0) * m->dy();
  }
  EXPECT_NEAR(length, 0.1, 1e-14);
  EXPECT_NEAR(edges[0].s0, 0.8, 1e-12);
  EXPECT_NEAR(edges[0].s1, 1.0, 1e-12);
  EXPECT_NEAR(edges[1].s0, 0.0, 1e-12);
  EXPECT_NEAR(edges[1].s1, 0.2, 1e-12);
}

TEST(Mesh, RejectsBadDomains) {
  Domain d = cantilever();
  d.width = 0.0;
  EXPECT_THROW(build_mesh(d, 2, 2), InvalidArgument);
  d = cantilever();
  d.dirichlet.clear();
  EXPECT_THROW(build_mesh(d, 2, 2), InvalidArgument);
  d = cantilever();
  d.neumann = {{Side::Left, 0.2, 0.4}};
  EXPECT_THROW(build_mesh(d, 2, 2), InvalidArgument);
  d = cantilever();
  d.dirichlet = {{Side::Left, 0.6, 0.4}};
  EXPECT_THROW(build_mesh(d, 2, 2), InvalidArgument);
  d = cantilever();
  d.dirichlet = {{Side::Left, 0.0, 1.0, 0u}};
  EXPECT_THROW(build_mesh(d, 2, 2), InvalidArgument);
  EXPECT_THROW(build_mesh(cantilever(), 0, 2), InvalidArgument);
}

TEST(Mesh, RejectsZeroMeasureDirichletOnCoarseMesh) {
  Domain d = cantilever();
  d.dirichlet = {{Side::Left, 0.4, 0.6}};
  // On 2x2 no left edge has both endpoints in [0.4, 0.6].
  EXPECT_THROW(build_mesh(d, 2, 2), InvalidArgument);
  EXPECT_NO_THROW(build_mesh(d, 10, 10));
}

TEST(Prolongation, Dg0IsInjection) {
  const auto base = build_mesh(cantilever(2.0, 1.0), 4, 2);
  const auto fine = refine(refine(base));
  std::mt19937_64 rng(3);
  const ScalarField c{base, Space::DG0, testing_helpers::uniform_vector(8, rng)};
  const ScalarField f = prolong_scalar(c, fine);
  for (int e = 0; e < fine->num_elements(); ++e) {
    const Vec2 x = fine->element_center(e);
    const int i = static_cast<int>(x.x / base->dx());
    const int j = static_cast<int>(x.y / base->dy());
    EXPECT_EQ(f.coeffs[e], c.coeffs[base->element_index(i, j)]);
  }
}

TEST(Prolongation, Q1ReproducesCoarseBilinearInterpolant) {
  const auto base = build_mesh(cantilever(2.0, 1.0), 3, 2);
  const auto fine = refine(refine(base));
  std::mt19937_64 rng(5);
  const ScalarField c{base, Space::Q1, testing_helpers::uniform_vector(base->num_nodes(), rng)};
  const ScalarField f = prolong_scalar(c, fine);
  // Evaluate the coarse interpolant directly at each fine node.
  for (int n = 0; n < fine->num_nodes(); ++n) {
    const Vec2 x = fine->node(n);
    int i = std::min(static_cast<int>(x.x / base->dx()), base->nx() - 1);
    int j = std::min(static_cast<int>(x.y / base->dy()), base->ny() - 1);
    const double s = x.x / base->dx() - i;
    const double t = x.y / base->dy() - j;
    const double v = (1 - s) * (1 - t) * c.coeffs[base->node_index(i, j)] +
                     s * (1 - t) * c.coeffs[base->node_index(i + 1, j)] +
                     s * t * c.coeffs[base->node_index(i + 1, j + 1)] +
                     (1 - s) * t * c.coeffs[base->node_index(i, j + 1)];
    EXPECT_NEAR(f.coeffs[n], v, 1e-14);
  }
}

TEST(Prolongation, RejectsNonNestedMeshes) {
  const auto a = build_mesh(cantilever(), 4, 4);
  const auto b = build_mesh(cantilever(), 8, 8);
  const ScalarField f{a, Space::DG0, Eigen::VectorXd::Zero(16)};
  EXPECT_THROW(prolong_scalar(f, b), InvalidArgument);
  const ScalarField g{refine(a), Space::DG0, Eigen::VectorXd::Zero(64)};
  EXPECT_THROW(prolong_scalar(g, a), InvalidArgument);
}

TEST(Prolongation, IdentityOnSameMesh) {
  const auto a = build_mesh(cantilever(), 4, 4);
  std::mt19937_64 rng(1);
  const ScalarField f{a, Space::Q1, testing_helpers::uniform_vector(25, rng)};
  EXPECT_EQ(prolong_scalar(f, a).coeffs, f.coeffs);
}

TEST(Prolongation, MidpointSampling) {
  const auto a = build_mesh(cantilever(), 2, 2);
  ScalarField f{a, Space::Q1, Eigen::VectorXd::Zero(9)};
  for (int n = 0; n < 9; ++n) f.coeffs[n] = a->node(n).x + 2.0 * a->node(n).y;
  const Eigen::VectorXd mid = element_midpoint_values(f);
  for (int e = 0; e < 4; ++e) {
    const Vec2 c = a->element_center(e);
    EXPECT_NEAR(mid[e], c.x + 2.0 * c.y, 1e-15);
  }
}
