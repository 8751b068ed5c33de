#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "simpfem/expression.hpp"
#include "simpfem/filter.hpp"
#include "simpfem/optimizer.hpp"
#include "simpfem/simp.hpp"

namespace simpfem {

/// Bad configuration text; the message names the file, line or field.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Everything a run needs, parsed from an INI file.
///
///   [domain]      width height dirichlet neumann
///   [load]        preset (cantilever-tip | mbb-half) magnitude, or fx fy as expressions in x, y
///   [mesh]        nx ny
///   [material]    E nu | mu lambda, eps_simp p_s
///   [design]      gamma (required) space (dg0 | q1) density
///   [restriction] type (none | w1p | gl | filter | filter+tikhonov) eps p r_min
///                 boundary_policy (truncate | renormalize) filtered_space
///   [optimizer]   max_iters step0 armijo_c backtrack max_backtracks tol_residual
///                 tol_objective_rel move_limit trust_radius trust_norm
///   [output]      dir checkpoint_every
///   [run]         seed levels
///
/// Segments are "side:t0:t1[:x|y|xy]" joined by ';', with t measured as a
/// fraction of the side along the increasing coordinate.
struct RunConfig {
  ProblemSpec problem;
  std::string load_description;
  std::string restriction = "none";
  int nx = 0;
  int ny = 0;
  double initial_density = 0.0;
  OptimizerOptions optimizer;
  std::string out_dir = "out";
  int checkpoint_every = 0;  // 0: final design only
  std::uint64_t seed = 1;
  int levels = 3;
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"domain", {"width", "height", "dirichlet", "neumann"}},
      {"load", {"preset", "magnitude", "fx", "fy"}},
      {"mesh", {"nx", "ny"}},
      {"material", {"E", "nu", "mu", "lambda", "eps_simp", "p_s"}},
      {"design", {"gamma", "space", "density"}},
      {"restriction", {"type", "eps", "p", "r_min", "boundary_policy", "filtered_space"}},
      {"optimizer",
       {"max_iters", "step0", "armijo_c", "backtrack", "max_backtracks", "tol_residual",
        "tol_objective_rel", "move_limit", "trust_radius", "trust_norm", "tikhonov_eps"}},
      {"output", {"dir", "checkpoint_every"}},
      {"run", {"seed", "levels"}},
  };
  return schema;
}

template <typename T>
std::optional<T> get_opt(const ptree& pt, const std::string& key) {
  const auto raw = pt.get_optional<std::string>(ptree::path_type(key, '.'));
  if (!raw) return std::nullopt;
  std::string s = *raw;
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else {
    std::istringstream is(s);
    T v{};
    is >> v;
    if (is.fail() || !is.eof()) {
      throw ConfigError("field '" + key + "': cannot parse '" + s + "'");
    }
    return v;
  }
}

template <typename T>
T get_req(const ptree& pt, const std::string& key) {
  auto v = get_opt<T>(pt, key);
  if (!v) throw ConfigError("missing required field '" + key + "'");
  return *v;
}

template <typename T>
T get_or(const ptree& pt, const std::string& key, T fallback) {
  auto v = get_opt<T>(pt, key);
  return v ? *v : fallback;
}

inline Side parse_side(const std::string& s, const std::string& field) {
  if (s == "bottom") return Side::Bottom;
  if (s == "right") return Side::Right;
  if (s == "top") return Side::Top;
  if (s == "left") return Side::Left;
  throw ConfigError("field '" + field + "': unknown side '" + s + "'");
}

inline Space parse_space(const std::string& s, const std::string& field) {
  if (s == "dg0") return Space::DG0;
  if (s == "q1") return Space::Q1;
  throw ConfigError("field '" + field + "': expected dg0 or q1, got '" + s + "'");
}

inline std::vector<Segment> parse_segments(const std::string& text, const std::string& field) {
  std::vector<Segment> out;
  std::istringstream list(text);
  std::string item;
  while (std::getline(list, item, ';')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](char c) { return c == ' ' || c == '\t'; }),
               item.end());
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::istringstream is(item);
    std::string part;
    while (std::getline(is, part, ':')) parts.push_back(part);
    if (parts.size() != 3 && parts.size() != 4) {
      throw ConfigError("field '" + field + "': segment '" + item + "' is not side:t0:t1[:comp]");
    }
    Segment seg;
    seg.side = parse_side(parts[0], field);
    try {
      std::size_t used = 0;
      seg.t0 = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("trailing");
      seg.t1 = std::stod(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("field '" + field + "': bad parameters in segment '" + item + "'");
    }
    if (parts.size() == 4) {
      if (parts[3] == "x") seg.components = kComponentX;
      else if (parts[3] == "y") seg.components = kComponentY;
      else if (parts[3] == "xy") seg.components = kComponentXY;
      else throw ConfigError("field '" + field + "': unknown component '" + parts[3] + "'");
    }
    out.push_back(seg);
  }
  return out;
}

}  // namespace detail

/// Parses INI text. `origin` is used in diagnostics.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  using detail::get_opt;
  using detail::get_or;
  using detail::get_req;
  detail::ptree pt;
  {
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
  }
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : pt) {
    const auto it = schema.find(section);
    if (it == schema.end()) {
      if (body.empty()) throw ConfigError(origin + ": key '" + section + "' outside a section");
      throw ConfigError(origin + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError(origin + ": unknown field '" + section + "." + key + "'");
      }
    }
  }

  RunConfig c;
  ProblemSpec& ps = c.problem;

  // Domain and load.
  ps.domain.width = get_or(pt, "domain.width", 1.0);
  ps.domain.height = get_or(pt, "domain.height", 1.0);
  const auto preset = get_opt<std::string>(pt, "load.preset");
  const double magnitude = get_or(pt, "load.magnitude", 1.0);
  if (preset) {
    if (get_opt<std::string>(pt, "load.fx") || get_opt<std::string>(pt, "load.fy")) {
      throw ConfigError("field 'load.preset' cannot be combined with load.fx / load.fy");
    }
    if (*preset == "cantilever-tip") {
      ps.domain.dirichlet = {{Side::Left, 0.0, 1.0, kComponentXY}};
      ps.domain.neumann = {{Side::Right, 0.45, 0.55, kComponentXY}};
      ps.traction = Traction::constant(0.0, -magnitude);
    } else if (*preset == "mbb-half") {
      // Symmetry line on the left, roller at the bottom right corner, load at the top left.
      ps.domain.dirichlet = {{Side::Left, 0.0, 1.0, kComponentX},
                             {Side::Bottom, 0.98, 1.0, kComponentY}};
      ps.domain.neumann = {{Side::Top, 0.0, 0.02, kComponentXY}};
      ps.traction = Traction::constant(0.0, -magnitude);
    } else {
      throw ConfigError("field 'load.preset': unknown preset '" + *preset + "'");
    }
    c.load_description = *preset;
  } else {
    const std::string fx = get_or<std::string>(pt, "load.fx", "0");
    const std::string fy = get_or<std::string>(pt, "load.fy", "0");
    Expression ex = [&] {
      try {
        return Expression::parse(fx);
      } catch (const ExpressionError& e) {
        throw ConfigError(std::string("field 'load.fx': ") + e.what());
      }
    }();
    Expression ey = [&] {
      try {
        return Expression::parse(fy);
      } catch (const ExpressionError& e) {
        throw ConfigError(std::string("field 'load.fy': ") + e.what());
      }
    }();
    ps.traction.value = [ex, ey](double x, double y) { return Vec2{ex(x, y), ey(x, y)}; };
    c.load_description = "(" + fx + ", " + fy + ")";
  }
  if (auto d = get_opt<std::string>(pt, "domain.dirichlet")) {
    ps.domain.dirichlet = detail::parse_segments(*d, "domain.dirichlet");
  }
  if (auto n = get_opt<std::string>(pt, "domain.neumann")) {
    ps.domain.neumann = detail::parse_segments(*n, "domain.neumann");
  }

  // Mesh.
  c.nx = get_req<int>(pt, "mesh.nx");
  c.ny = get_req<int>(pt, "mesh.ny");
  if (c.nx < 1 || c.ny < 1) throw ConfigError("fields 'mesh.nx' and 'mesh.ny' must be >= 1");

  // Material.
  const auto E = get_opt<double>(pt, "material.E");
  const auto nu = get_opt<double>(pt, "material.nu");
  const auto mu = get_opt<double>(pt, "material.mu");
  const auto lambda = get_opt<double>(pt, "material.lambda");
  if ((E || nu) && (mu || lambda)) {
    throw ConfigError("field 'material': give either E/nu or mu/lambda, not both");
  }
  if (E || nu) {
    if (!E || !nu) throw ConfigError("field 'material': E and nu must be given together");
    try {
      ps.material = MaterialModel::from_young_poisson(*E, *nu);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("field 'material': ") + e.what());
    }
  } else if (mu || lambda) {
    if (!mu || !lambda) throw ConfigError("field 'material': mu and lambda must be given together");
    ps.material.mu = *mu;
    ps.material.lambda = *lambda;
  }
  ps.material.eps_simp = get_or(pt, "material.eps_simp", ps.material.eps_simp);
  ps.material.p_s = get_or(pt, "material.p_s", ps.material.p_s);
  try {
    ps.material.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("field 'material': ") + e.what());
  }

  // Design.
  ps.gamma = get_req<double>(pt, "design.gamma");
  if (!(ps.gamma > 0.0 && ps.gamma < 1.0)) throw ConfigError("field 'design.gamma' must lie in (0, 1)");
  ps.density_space = detail::parse_space(get_or<std::string>(pt, "design.space", "dg0"), "design.space");
  c.initial_density = get_or(pt, "design.density", ps.gamma);
  if (!(c.initial_density >= 0.0 && c.initial_density <= 1.0)) {
    throw ConfigError("field 'design.density' must lie in [0, 1]");
  }

  // Restriction.
  c.restriction = get_or<std::string>(pt, "restriction.type", "none");
  const auto eps = get_opt<double>(pt, "restriction.eps");
  const auto need_eps = [&] {
    if (!eps) throw ConfigError("missing required field 'restriction.eps'");
    return *eps;
  };
  const auto filter_spec = [&] {
    const double r = get_req<double>(pt, "restriction.r_min");
    const std::string pol = get_or<std::string>(pt, "restriction.boundary_policy", "truncate");
    FilterSpec::BoundaryPolicy policy;
    if (pol == "truncate") policy = FilterSpec::BoundaryPolicy::Truncate;
    else if (pol == "renormalize") policy = FilterSpec::BoundaryPolicy::Renormalize;
    else throw ConfigError("field 'restriction.boundary_policy': unknown policy '" + pol + "'");
    if (!(r > 0.0)) throw ConfigError("field 'restriction.r_min' must be positive");
    ps.filter = FilterSpec::cone(r, policy);
    ps.filtered_space = detail::parse_space(
        get_or<std::string>(pt, "restriction.filtered_space", "dg0"), "restriction.filtered_space");
  };
  if (c.restriction == "none") {
  } else if (c.restriction == "w1p") {
    ps.regularizer = RegularizerSpec::w1p(need_eps(), get_or(pt, "restriction.p", 2.0));
  } else if (c.restriction == "gl") {
    ps.regularizer = RegularizerSpec::ginzburg_landau(need_eps());
  } else if (c.restriction == "filter") {
    filter_spec();
  } else if (c.restriction == "filter+tikhonov") {
    filter_spec();
    ps.regularizer = RegularizerSpec::tikhonov(need_eps());
  } else {
    throw ConfigError("field 'restriction.type': unknown restriction '" + c.restriction + "'");
  }
  try {
    ps.regularizer.validate(ps.density_space);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("field 'restriction': ") + e.what());
  }

  // Optimizer.
  OptimizerOptions& o = c.optimizer;
  o.max_iters = get_or(pt, "optimizer.max_iters", o.max_iters);
  o.step0 = get_or(pt, "optimizer.step0", o.step0);
  o.armijo_c = get_or(pt, "optimizer.armijo_c", o.armijo_c);
  o.backtrack = get_or(pt, "optimizer.backtrack", o.backtrack);
  o.max_backtracks = get_or(pt, "optimizer.max_backtracks", o.max_backtracks);
  o.tol_residual = get_or(pt, "optimizer.tol_residual", o.tol_residual);
  o.tol_objective_rel = get_or(pt, "optimizer.tol_objective_rel", o.tol_objective_rel);
  o.move_limit = get_or(pt, "optimizer.move_limit", o.move_limit);
  o.tikhonov_eps = get_or(pt, "optimizer.tikhonov_eps", o.tikhonov_eps);
  if (auto radius = get_opt<double>(pt, "optimizer.trust_radius")) {
    TrustBall ball;
    ball.radius = *radius;
    const std::string norm = get_or<std::string>(pt, "optimizer.trust_norm", "l2");
    if (norm == "l2") {
      ball.norm = TrustBall::Norm::L2;
    } else if (norm == "w1p") {
      ball.norm = TrustBall::Norm::W1p;
      ball.p = ps.regularizer.kind == RegularizerSpec::Kind::W1p ? ps.regularizer.p : 2.0;
    } else {
      throw ConfigError("field 'optimizer.trust_norm': expected l2 or w1p");
    }
    o.trust = ball;  // centre is filled in from the initial design
  }
  try {
    o.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("field 'optimizer': ") + e.what());
  }

  c.out_dir = get_or<std::string>(pt, "output.dir", c.out_dir);
  c.checkpoint_every = get_or(pt, "output.checkpoint_every", 0);
  if (c.checkpoint_every < 0) throw ConfigError("field 'output.checkpoint_every' must be >= 0");
  c.seed = get_or<std::uint64_t>(pt, "run.seed", 1);
  c.levels = get_or(pt, "run.levels", 3);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace simpfem
