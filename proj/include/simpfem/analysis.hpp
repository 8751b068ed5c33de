#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "simpfem/filter.hpp"
#include "simpfem/norms.hpp"
#include "simpfem/optimizer.hpp"
#include "simpfem/simp.hpp"

namespace simpfem {

/// Mean over interior elements of |rho_e - mean of the 4 edge neighbours|.
/// Q1 fields are sampled at element midpoints first.
inline double checkerboard_index(const ScalarField& rho) {
  const Mesh& m = *rho.mesh;
  const Eigen::VectorXd v = element_midpoint_values(rho);
  double sum = 0.0;
  int count = 0;
  for (int j = 1; j + 1 < m.ny(); ++j) {
    for (int i = 1; i + 1 < m.nx(); ++i) {
      const double avg = 0.25 * (v[m.element_index(i - 1, j)] + v[m.element_index(i + 1, j)] +
                                 v[m.element_index(i, j - 1)] + v[m.element_index(i, j + 1)]);
      sum += std::abs(v[m.element_index(i, j)] - avg);
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

/// True when `values` decreases strictly, except for at most
/// `allowed_violations` consecutive pairs. Tolerated violations never exceed
/// half of the pairs, so a single pair must decrease.
inline bool nearly_decreasing(const std::vector<double>& values, int allowed_violations = 1) {
  const int pairs = static_cast<int>(values.size()) - 1;
  if (pairs <= 0) return true;
  const int allowed = std::min(allowed_violations, pairs / 2);
  int violations = 0;
  for (int k = 0; k < pairs; ++k) {
    if (!(values[static_cast<std::size_t>(k) + 1] < values[static_cast<std::size_t>(k)])) {
      ++violations;
    }
  }
  return violations <= allowed;
}

inline bool non_increasing(const std::vector<double>& values, double slack = 0.0) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[k - 1] + slack) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// p-vector inequalities used for strong W^{1,p} convergence.

struct PVecReport {
  double p = 2.0;
  long trials = 0;
  long violations = 0;
  double max_violation = -std::numeric_limits<double>::infinity();  // max (rhs - lhs), scaled
};

inline constexpr double kPVecSlack = 1e-12;

/// (|b|^{p-2} b - |a|^{p-2} a) . (b - a) against 2^{2-p} |b - a|^p for p >= 2,
/// and against (p - 1)(1 + |a|^2 + |b|^2)^{(p-2)/2} |b - a|^2 for 1 < p < 2.
/// Slack is 1e-12 relative to max(1, lhs, rhs).
inline PVecReport pvec_inequality_check(double p, long trials, std::uint64_t seed = 7) {
  if (!(p > 1.0 && std::isfinite(p))) throw InvalidArgument("p must lie in (1, inf)");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-3.0, 3.0);
  PVecReport rep;
  rep.p = p;
  rep.trials = trials;
  const auto flux = [p](double x, double y, double& fx, double& fy) {
    const double r = std::hypot(x, y);
    const double w = r > 0.0 ? std::pow(r, p - 2.0) : 0.0;
    fx = w * x;
    fy = w * y;
  };
  for (long t = 0; t < trials; ++t) {
    const double sa = std::pow(10.0, expo(rng));
    const double sb = (t % 4 == 0) ? sa : std::pow(10.0, expo(rng));
    const double ax = sa * normal(rng), ay = sa * normal(rng);
    double bx = sb * normal(rng), by = sb * normal(rng);
    if (t % 4 == 0) {  // nearby pairs probe the small-difference regime
      bx = ax + 1e-3 * sa * normal(rng);
      by = ay + 1e-3 * sa * normal(rng);
    }
    double fax, fay, fbx, fby;
    flux(ax, ay, fax, fay);
    flux(bx, by, fbx, fby);
    const double dx = bx - ax, dy = by - ay;
    const double lhs = (fbx - fax) * dx + (fby - fay) * dy;
    const double dist = std::hypot(dx, dy);
    double rhs;
    if (p >= 2.0) {
      rhs = std::pow(2.0, 2.0 - p) * std::pow(dist, p);
    } else {
      rhs = (p - 1.0) * std::pow(1.0 + ax * ax + ay * ay + bx * bx + by * by, 0.5 * (p - 2.0)) *
            dist * dist;
    }
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    const double slack = (rhs - lhs) / scale;
    rep.max_violation = std::max(rep.max_violation, slack);
    if (slack > kPVecSlack) ++rep.violations;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Refinement studies.

struct LevelResult {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  double objective = 0.0;
  double compliance = 0.0;
  double volume = 0.0;
  double residual = 0.0;
  double checkerboard = 0.0;  // of the unfiltered design
  // Errors against the finest level; NaN where not applicable or on the finest level.
  double err_u_h1 = NAN;
  double err_rho_l2 = NAN;
  double err_rho_w1p = NAN;
  double err_filtered_linf = NAN;
  double err_filtered_w1p = NAN;
};

struct ConvergenceReport {
  std::vector<LevelResult> levels;
  double p = 2.0;  // exponent of the W^{1,p} columns
  bool has_w1p = false;
  bool has_filter = false;
  bool filtered_w1p = false;  // filtered representation is Q1
  std::vector<OptResult> results;  // one per level

  std::vector<double> column(double LevelResult::*field, bool skip_finest = true) const {
    std::vector<double> out;
    const std::size_t n = levels.size() - (skip_finest ? 1 : 0);
    for (std::size_t k = 0; k < n; ++k) out.push_back(levels[k].*field);
    return out;
  }

  /// log2 ratios of consecutive errors (uniform refinement halves h).
  static std::vector<double> observed_orders(const std::vector<double>& errors) {
    std::vector<double> out;
    for (std::size_t k = 1; k < errors.size(); ++k) {
      out.push_back(std::log(errors[k - 1] / errors[k]) / std::log(2.0));
    }
    return out;
  }

  bool all_converged() const {
    return std::all_of(levels.begin(), levels.end(), [](const LevelResult& l) { return l.converged; });
  }
};

/// Optimizes on the base mesh from rho = gamma, then on each refinement from
/// the prolonged previous design. Errors are measured against the finest level.
inline ConvergenceReport convergence_study(const ProblemSpec& spec, const MeshPtr& base,
                                           int n_levels, const OptimizerOptions& opts) {
  if (n_levels < 3) throw InvalidArgument("convergence_study needs >= 3 levels");
  ConvergenceReport rep;
  rep.has_w1p = spec.regularizer.needs_gradient();
  rep.p = spec.regularizer.kind == RegularizerSpec::Kind::W1p ? spec.regularizer.p : 2.0;
  rep.has_filter = spec.filter.kind != FilterSpec::Kind::None;
  rep.filtered_w1p = rep.has_filter && spec.filtered_space == Space::Q1;

  const auto family = mesh_family(base, n_levels);
  std::vector<ScalarField> filtered;
  std::optional<DensityField> prev;
  for (const auto& mesh : family) {
    ReducedObjective obj(instantiate(spec, mesh));
    DensityField init;
    if (prev) {
      const ScalarField up = prolong_scalar(*prev, mesh);
      init.mesh = mesh;
      init.space = up.space;
      init.coeffs = up.coeffs;
      init.gamma = spec.gamma;
    } else {
      init = constant_density(mesh, spec.density_space, spec.gamma, spec.gamma);
    }
    OptResult r = optimize(obj, init, opts);
    LevelResult lr;
    lr.nx = mesh->nx();
    lr.ny = mesh->ny();
    lr.h = mesh->h();
    lr.iterations = r.iterations;
    lr.converged = r.converged;
    lr.stop_reason = to_string(r.reason);
    lr.objective = r.objective;
    lr.compliance = r.history.back().compliance;
    lr.volume = r.history.back().volume;
    lr.residual = r.residual;
    lr.checkerboard = checkerboard_index(r.density);
    filtered.push_back(obj.problem().filter.filtered(r.density.coeffs));
    rep.levels.push_back(lr);
    prev = r.density;
    rep.results.push_back(std::move(r));
  }

  const std::size_t fin = family.size() - 1;
  const OptResult& ref = rep.results[fin];
  for (std::size_t l = 0; l < fin; ++l) {
    LevelResult& lr = rep.levels[l];
    const OptResult& r = rep.results[l];
    lr.err_u_h1 = error_between(r.displacement, ref.displacement, NormKind::h1());
    lr.err_rho_l2 = error_between(r.density, ref.density, NormKind::lp(2.0));
    if (rep.has_w1p) lr.err_rho_w1p = error_between(r.density, ref.density, NormKind::w1p(rep.p));
    if (rep.has_filter) {
      lr.err_filtered_linf = error_between(filtered[l], filtered[fin], NormKind::linf());
      if (rep.filtered_w1p) {
        lr.err_filtered_w1p = error_between(filtered[l], filtered[fin], NormKind::w1p(rep.p));
      }
    }
  }
  return rep;
}

namespace detail {
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
}  // namespace detail

inline std::string report_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "level,nx,ny,h,iterations,converged,stop_reason,objective,compliance,volume,residual,"
        "checkerboard,err_u_h1,err_rho_l2,err_rho_w1p,err_filtered_linf,err_filtered_w1p\n";
  for (std::size_t k = 0; k < rep.levels.size(); ++k) {
    const auto& l = rep.levels[k];
    using detail::fmt_num;
    os << k << ',' << l.nx << ',' << l.ny << ',' << fmt_num(l.h) << ',' << l.iterations << ','
       << (l.converged ? 1 : 0) << ',' << l.stop_reason << ',' << fmt_num(l.objective) << ','
       << fmt_num(l.compliance) << ',' << fmt_num(l.volume) << ',' << fmt_num(l.residual) << ','
       << fmt_num(l.checkerboard) << ',' << fmt_num(l.err_u_h1) << ',' << fmt_num(l.err_rho_l2)
       << ',' << fmt_num(l.err_rho_w1p) << ',' << fmt_num(l.err_filtered_linf) << ','
       << fmt_num(l.err_filtered_w1p) << '\n';
  }
  return os.str();
}

inline std::string report_table(const ConvergenceReport& rep) {
  std::ostringstream os;
  const auto cell = [](double v) {
    std::ostringstream c;
    if (std::isnan(v)) {
      c << std::setw(12) << "-";
    } else {
      c << std::setw(12) << std::scientific << std::setprecision(3) << v;
    }
    return c.str();
  };
  os << std::setw(10) << "mesh" << std::setw(7) << "iters" << std::setw(5) << "ok"
     << std::setw(12) << "J" << std::setw(12) << "kappa" << std::setw(12) << "u H1"
     << std::setw(12) << "rho L2" << std::setw(12) << "rho W1p" << std::setw(12) << "Frho Linf"
     << std::setw(12) << "Frho W1p" << '\n';
  for (const auto& l : rep.levels) {
    os << std::setw(10) << (std::to_string(l.nx) + "x" + std::to_string(l.ny)) << std::setw(7)
       << l.iterations << std::setw(5) << (l.converged ? "yes" : "no") << cell(l.objective)
       << cell(l.checkerboard) << cell(l.err_u_h1) << cell(l.err_rho_l2) << cell(l.err_rho_w1p)
       << cell(l.err_filtered_linf) << cell(l.err_filtered_w1p) << '\n';
  }
  return os.str();
}

}  // namespace simpfem
