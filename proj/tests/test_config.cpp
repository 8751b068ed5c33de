#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "simpfem/config.hpp"
#include "simpfem/expression.hpp"

using namespace simpfem;

namespace {

const char* kFull = R"(
[domain]
width = 2
height = 1
dirichlet = left:0:1:xy
neumann = right:0.25:0.75 ; top:0:0.5:y

[load]
fx = 0
fy = -2*x + y

[mesh]
nx = 20
ny = 10

[material]
E = 2
nu = 0.25
eps_simp = 1e-4
p_s = 2

[design]
gamma = 0.35
space = q1
density = 0.5

[restriction]
type = w1p
eps = 0.1
p = 3

[optimizer]
max_iters = 77
tol_residual = 1e-6
move_limit = 0.1
trust_radius = 0.5
trust_norm = w1p

[output]
dir = results
checkpoint_every = 5

[run]
seed = 42
levels = 4
)";

std::string with_gamma(const std::string& rest) {
  return "[mesh]\nnx = 4\nny = 4\n[design]\ngamma = 0.5\n" + rest;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Expression, EvaluatesWithPrecedence) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3")(0, 0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2)*3")(0, 0), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0, 0), 512.0);  // right associative
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0, 0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^-1")(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(Expression::parse("8/4/2")(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x - y")(3, 5), -2.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e1")(0, 0), 15.0);
  EXPECT_NEAR(Expression::parse("sin(pi*x)^2 + cos(pi*x)^2")(0.3, 0), 1.0, 1e-15);
  EXPECT_NEAR(Expression::parse("sqrt(abs(-4)) + exp(0) + tan(0)")(0, 0), 3.0, 1e-15);
  EXPECT_EQ(Expression::parse(" x ").text(), " x ");
}

TEST(Expression, ReportsErrorPositions) {
  const auto pos = [](const std::string& s) {
    try {
      Expression::parse(s);
    } catch (const ExpressionError& e) {
      return static_cast<long>(e.position());
    }
    return -1L;
  };
  EXPECT_EQ(pos("1 +"), 3);
  EXPECT_EQ(pos("foo(x)"), 0);
  EXPECT_EQ(pos("(x"), 2);
  EXPECT_EQ(pos("x y"), 2);
  EXPECT_EQ(pos("sin x"), 4);
  EXPECT_EQ(pos("2 $ 3"), 2);
  EXPECT_EQ(pos(""), 0);
}

TEST(Config, FullFileParses) {
  const RunConfig c = parse_config(kFull);
  const ProblemSpec& p = c.problem;
  EXPECT_EQ(p.domain.width, 2.0);
  ASSERT_EQ(p.domain.dirichlet.size(), 1u);
  EXPECT_EQ(p.domain.dirichlet[0].components, kComponentXY);
  ASSERT_EQ(p.domain.neumann.size(), 2u);
  EXPECT_EQ(p.domain.neumann[0].side, Side::Right);
  EXPECT_EQ(p.domain.neumann[0].t0, 0.25);
  EXPECT_EQ(p.domain.neumann[1].side, Side::Top);
  EXPECT_EQ(p.domain.neumann[1].components, kComponentY);
  const Vec2 f = p.traction.value(1.5, 0.5);
  EXPECT_EQ(f.x, 0.0);
  EXPECT_DOUBLE_EQ(f.y, -2.5);
  EXPECT_EQ(c.nx, 20);
  EXPECT_EQ(c.ny, 10);
  EXPECT_DOUBLE_EQ(p.material.mu, 0.8);
  EXPECT_DOUBLE_EQ(p.material.lambda, 2.0 * 0.25 / (1.25 * 0.5));
  EXPECT_EQ(p.material.eps_simp, 1e-4);
  EXPECT_EQ(p.material.p_s, 2.0);
  EXPECT_EQ(p.gamma, 0.35);
  EXPECT_EQ(p.density_space, Space::Q1);
  EXPECT_EQ(c.initial_density, 0.5);
  EXPECT_EQ(p.regularizer.kind, RegularizerSpec::Kind::W1p);
  EXPECT_EQ(p.regularizer.p, 3.0);
  EXPECT_EQ(p.filter.kind, FilterSpec::Kind::None);
  EXPECT_EQ(c.optimizer.max_iters, 77);
  EXPECT_EQ(c.optimizer.tol_residual, 1e-6);
  EXPECT_EQ(c.optimizer.move_limit, 0.1);
  ASSERT_TRUE(c.optimizer.trust.has_value());
  EXPECT_EQ(c.optimizer.trust->norm, TrustBall::Norm::W1p);
  EXPECT_EQ(c.optimizer.trust->p, 3.0);
  EXPECT_EQ(c.out_dir, "results");
  EXPECT_EQ(c.checkpoint_every, 5);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.levels, 4);
}

TEST(Config, Defaults) {
  const RunConfig c = parse_config(with_gamma(""));
  EXPECT_EQ(c.problem.domain.width, 1.0);
  EXPECT_EQ(c.initial_density, 0.5);
  EXPECT_EQ(c.problem.density_space, Space::DG0);
  EXPECT_EQ(c.restriction, "none");
  EXPECT_EQ(c.out_dir, "out");
  EXPECT_EQ(c.levels, 3);
  EXPECT_FALSE(c.optimizer.trust.has_value());
  EXPECT_EQ(c.problem.traction.value(0.3, 0.3).y, 0.0);
}

TEST(Config, MissingGammaNamesTheField) {
  const std::string e = error_of("[mesh]\nnx = 4\nny = 4\n");
  EXPECT_NE(e.find("design.gamma"), std::string::npos) << e;
  EXPECT_NE(error_of("[mesh]\nny = 4\n[design]\ngamma = 0.5\n").find("mesh.nx"),
            std::string::npos);
}

TEST(Config, UnknownSectionsAndFields) {
  EXPECT_NE(error_of(with_gamma("[solver]\ntype = cg\n")).find("unknown section [solver]"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[optimizer]\nmaxiter = 3\n")).find("optimizer.maxiter"),
            std::string::npos);
  EXPECT_NE(error_of("stray = 1\n" + with_gamma("")).find("outside a section"), std::string::npos);
}

TEST(Config, IniSyntaxErrorsCarryTheLine) {
  const std::string e = error_of("[mesh]\nnx = 4\nthis line has no equals sign\n");
  EXPECT_EQ(e.rfind("t.ini:3:", 0), 0u) << e;
}

TEST(Config, BadValues) {
  EXPECT_NE(error_of(with_gamma("[optimizer]\nmax_iters = lots\n")).find("optimizer.max_iters"),
            std::string::npos);
  EXPECT_NE(error_of("[mesh]\nnx = 4\nny = 4\n[design]\ngamma = 1.5\n").find("design.gamma"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[mesh]\n")).size(), 0u);  // duplicate section
  EXPECT_NE(error_of(with_gamma("[design]\n")).size(), 0u);
  EXPECT_NE(error_of("[mesh]\nnx = 0\nny = 4\n[design]\ngamma = 0.5\n").find("mesh.nx"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[domain]\ndirichlet = left:0\n")).find("domain.dirichlet"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[domain]\nneumann = middle:0:1\n")).find("unknown side"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[domain]\nneumann = top:0:1:z\n")).find("unknown component"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[load]\nfy = sin(\n")).find("load.fy"), std::string::npos);
  EXPECT_NE(error_of(with_gamma("[optimizer]\narmijo_c = 2\n")).find("armijo_c"), std::string::npos);
}

TEST(Config, Presets) {
  const RunConfig c = parse_config(with_gamma("[load]\npreset = mbb-half\nmagnitude = 3\n"));
  ASSERT_EQ(c.problem.domain.dirichlet.size(), 2u);
  EXPECT_EQ(c.problem.domain.dirichlet[0].components, kComponentX);
  EXPECT_EQ(c.problem.domain.dirichlet[1].side, Side::Bottom);
  EXPECT_EQ(c.problem.domain.dirichlet[1].components, kComponentY);
  EXPECT_EQ(c.problem.traction.value(0, 1).y, -3.0);
  EXPECT_EQ(c.load_description, "mbb-half");
  const RunConfig t = parse_config(with_gamma("[load]\npreset = cantilever-tip\n"));
  EXPECT_EQ(t.problem.domain.neumann[0].side, Side::Right);
  EXPECT_EQ(t.problem.traction.value(1, 0.5).y, -1.0);
  EXPECT_NE(error_of(with_gamma("[load]\npreset = bridge\n")).find("bridge"), std::string::npos);
  EXPECT_NE(error_of(with_gamma("[load]\npreset = mbb-half\nfy = 1\n")).find("load.preset"),
            std::string::npos);
}

TEST(Config, MaterialForms) {
  const RunConfig lame = parse_config(with_gamma("[material]\nmu = 2\nlambda = 3\n"));
  EXPECT_EQ(lame.problem.material.mu, 2.0);
  EXPECT_EQ(lame.problem.material.lambda, 3.0);
  EXPECT_NE(error_of(with_gamma("[material]\nE = 1\nmu = 1\n")).find("not both"), std::string::npos);
  EXPECT_NE(error_of(with_gamma("[material]\nE = 1\n")).find("together"), std::string::npos);
  EXPECT_NE(error_of(with_gamma("[material]\nE = 1\nnu = 0.5\n")).size(), 0u);
}

TEST(Config, RestrictionKinds) {
  const auto q1 = [](const std::string& r) {
    return "[mesh]\nnx = 4\nny = 4\n[design]\ngamma = 0.5\nspace = q1\n[restriction]\n" + r;
  };
  const RunConfig gl = parse_config(q1("type = gl\neps = 0.2\n"));
  EXPECT_EQ(gl.problem.regularizer.kind, RegularizerSpec::Kind::GinzburgLandau);
  EXPECT_EQ(gl.problem.regularizer.epsilon, 0.2);

  const RunConfig f = parse_config(
      with_gamma("[restriction]\ntype = filter\nr_min = 0.3\nboundary_policy = renormalize\n"
                 "filtered_space = q1\n"));
  EXPECT_EQ(f.problem.filter.kind, FilterSpec::Kind::Cone);
  EXPECT_EQ(f.problem.filter.radius, 0.3);
  EXPECT_EQ(f.problem.filter.policy, FilterSpec::BoundaryPolicy::Renormalize);
  EXPECT_EQ(f.problem.filtered_space, Space::Q1);
  EXPECT_EQ(f.problem.regularizer.kind, RegularizerSpec::Kind::None);

  const RunConfig ft =
      parse_config(with_gamma("[restriction]\ntype = filter+tikhonov\nr_min = 0.3\neps = 5\n"));
  EXPECT_EQ(ft.problem.regularizer.kind, RegularizerSpec::Kind::TikhonovL2);
  EXPECT_EQ(ft.problem.regularizer.epsilon, 5.0);
  EXPECT_EQ(ft.problem.filtered_space, Space::DG0);

  EXPECT_NE(error_of(q1("type = w1p\n")).find("restriction.eps"), std::string::npos);
  EXPECT_NE(error_of(q1("type = w1p\neps = 1\np = 1\n")).size(), 0u);
  EXPECT_NE(error_of(with_gamma("[restriction]\ntype = w1p\neps = 1\n")).find("Q1"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[restriction]\ntype = filter\n")).find("restriction.r_min"),
            std::string::npos);
  EXPECT_NE(error_of(with_gamma("[restriction]\ntype = sponge\n")).find("sponge"),
            std::string::npos);
}

TEST(Config, LoadsShippedConfigs) {
  const std::filesystem::path dir = std::filesystem::path(SIMPFEM_CONFIG_DIR);
  int seen = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
    ++seen;
  }
  EXPECT_GE(seen, 5);
  EXPECT_THROW(load_config(dir / "does_not_exist.ini"), ConfigError);
}
