#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "simpfem/filter.hpp"
#include "simpfem/norms.hpp"
#include "simpfem/simp.hpp"

namespace simpfem {

/// {lower <= rho <= upper, v^T rho <= budget}, projected in the mass-weighted
/// inner product sum_i m_i x_i y_i.
struct FeasibleSet {
  Eigen::VectorXd volume_weights;  // v = W^T (integrals of the filtered basis)
  Eigen::VectorXd mass;            // m = integrals of the density basis
  double budget = 0.0;             // gamma |Omega|
  double domain_area = 0.0;

  double volume(const Eigen::VectorXd& rho) const { return volume_weights.dot(rho); }
};

inline FeasibleSet feasible_set(const FilterOperator& filter, double gamma, const Mesh& mesh) {
  if (!(gamma > 0.0)) throw InvalidArgument("volume fraction must be positive");
  FeasibleSet set;
  set.mass = mass_weights(mesh, filter.in_space());
  set.volume_weights = filter.apply_adjoint(mass_weights(mesh, filter.out_space()));
  set.domain_area = mesh.domain().area();
  set.budget = gamma * set.domain_area;
  return set;
}

inline FeasibleSet feasible_set(const Problem& p) { return feasible_set(p.filter, p.gamma, *p.mesh); }

inline constexpr double kVolumeTol = 1e-12;

/// argmin sum m (x - z)^2 over lower <= x <= upper, v^T x <= budget. The
/// solution is clip(z - lambda v / m) with the smallest lambda >= 0 that
/// satisfies the volume bound.
inline Eigen::VectorXd project_feasible(const Eigen::VectorXd& z, const FeasibleSet& set,
                                        const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& upper) {
  if (!z.allFinite()) throw InvalidArgument("project_feasible: non-finite input");
  const Eigen::VectorXd ratio = set.volume_weights.cwiseQuotient(set.mass);
  const auto shifted = [&](double lambda) {
    return (z - lambda * ratio).cwiseMax(lower).cwiseMin(upper).eval();
  };
  Eigen::VectorXd x = shifted(0.0);
  if (set.volume(x) <= set.budget) return x;
  if (set.volume(lower) > set.budget) {
    std::ostringstream os;
    os << "project_feasible: lower bounds already use volume " << set.volume(lower)
       << " > budget " << set.budget;
    throw NumericalFailure(os.str());
  }
  double lo = 0.0;
  double hi = 1.0;
  int grow = 0;
  while (set.volume(shifted(hi)) > set.budget) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 1100) {
      throw NumericalFailure("project_feasible: could not bracket the volume multiplier");
    }
  }
  // Bisect to full resolution; projection noise would otherwise swamp short steps.
  for (int it = 0; it < 2200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (set.volume(shifted(mid)) > set.budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  x = shifted(hi);
  if (set.budget - set.volume(x) > kVolumeTol * set.domain_area) {
    std::ostringstream os;
    os << "project_feasible: volume " << set.volume(x) << " misses budget " << set.budget;
    throw NumericalFailure(os.str());
  }
  return x;
}

inline Eigen::VectorXd project_feasible(const Eigen::VectorXd& z, const FeasibleSet& set) {
  return project_feasible(z, set, Eigen::VectorXd::Zero(z.size()),
                          Eigen::VectorXd::Ones(z.size()));
}

inline Eigen::VectorXd project_feasible(const Eigen::VectorXd& z, const FilterOperator& filter,
                                        double gamma, const Mesh& mesh) {
  return project_feasible(z, feasible_set(filter, gamma, mesh));
}

/// |rho - P(rho - s M^{-1} g)|_{L2} / s; zero exactly at points satisfying
/// g . (eta - rho) >= 0 for every feasible eta.
inline double optimality_residual(const Eigen::VectorXd& rho, const Eigen::VectorXd& g,
                                  const FeasibleSet& set, double step = 1.0) {
  const Eigen::VectorXd d = rho - project_feasible(rho - step * g.cwiseQuotient(set.mass), set);
  return std::sqrt(set.mass.dot(d.cwiseAbs2())) / step;
}

inline double optimality_residual(const Eigen::VectorXd& rho, const Eigen::VectorXd& g,
                                  const FilterOperator& filter, double gamma, const Mesh& mesh,
                                  double step = 1.0) {
  return optimality_residual(rho, g, feasible_set(filter, gamma, mesh), step);
}

// ---------------------------------------------------------------------------

/// Ball {|rho - center|_Y <= radius / 2} used to stay near one minimizer.
struct TrustBall {
  enum class Norm { L2, W1p };
  Eigen::VectorXd center;
  double radius = 0.0;
  Norm norm = Norm::L2;
  double p = 2.0;
};

struct OptimizerOptions {
  int max_iters = 500;
  double step0 = 1.0;  // in units of 1 / max|M^{-1} g| at the first iterate
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  double tol_residual = 1e-4;  // relative to |M^{-1} g|_{L2} at the first iterate
  double tol_objective_rel = 1e-8;
  double move_limit = 0.2;
  std::optional<TrustBall> trust;
  // Called after every accepted iterate with (iteration, coefficients).
  std::function<void(int, const Eigen::VectorXd&)> on_iterate;
  double tikhonov_eps = 0.0;

  void validate() const {
    if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
    if (!(step0 > 0.0)) throw InvalidArgument("step0 must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidArgument("armijo_c must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("backtrack must lie in (0, 1)");
    if (!(tol_residual > 0.0) || !(tol_objective_rel > 0.0)) {
      throw InvalidArgument("tolerances must be positive");
    }
    if (!(move_limit > 0.0 && move_limit <= 1.0)) throw InvalidArgument("move_limit must lie in (0, 1]");
    if (!(tikhonov_eps >= 0.0)) throw InvalidArgument("tikhonov_eps must be >= 0");
    if (trust && !(trust->radius > 0.0)) throw InvalidArgument("trust radius must be positive");
  }
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;  // including the Tikhonov term
  double compliance = 0.0;
  double regularizer = 0.0;
  double volume = 0.0;
  double residual = 0.0;
  double step = 0.0;
  bool basin_exit = false;
};

enum class StopReason { Residual, Stagnation, MaxIterations, LineSearchFailure };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Residual: return "residual";
    case StopReason::Stagnation: return "stagnation";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::LineSearchFailure: return "line-search-failure";
  }
  return "?";
}

struct OptResult {
  DensityField density;
  DisplacementField displacement;
  std::vector<IterationRecord> history;
  int iterations = 0;
  bool converged = false;
  bool basin_exit = false;
  StopReason reason = StopReason::MaxIterations;
  double objective = 0.0;              // perturbed objective J_h + eps/2 |rho|^2
  double unperturbed_objective = 0.0;  // J_h
  double residual = 0.0;               // relative optimality residual
  std::string diagnostics;
};

namespace detail {

inline double trust_distance(const ReducedObjective& obj, const TrustBall& ball,
                             const Eigen::VectorXd& rho, const Eigen::VectorXd& mass) {
  const Eigen::VectorXd d = rho - ball.center;
  if (ball.norm == TrustBall::Norm::L2) return std::sqrt(mass.dot(d.cwiseAbs2()));
  return norm(obj.field(d), NormKind::w1p(ball.p));
}

}  // namespace detail

/// Relative size of objective changes treated as roundoff in the line search.
inline constexpr double kObjectiveNoise = 64 * std::numeric_limits<double>::epsilon();

/// Projected gradient descent with Armijo backtracking on the reduced
/// objective. Steps use the L2 Riesz representative M^{-1} g, are limited to
/// `move_limit` per coefficient, and are projected exactly onto the feasible set.
inline OptResult optimize(ReducedObjective& obj, const DensityField& init,
                          const OptimizerOptions& opts) {
  opts.validate();
  const Problem& prob = obj.problem();
  if (init.coeffs.size() != space_dimension(*prob.mesh, prob.density_space)) {
    throw InvalidArgument("optimize: initial density has the wrong dimension");
  }
  const FeasibleSet set = feasible_set(prob);
  const Eigen::VectorXd& m = set.mass;
  const double tik = opts.tikhonov_eps;
  const auto tikhonov_value = [&](const Eigen::VectorXd& r) {
    return 0.5 * tik * m.dot(r.cwiseAbs2());
  };

  OptResult result;
  Eigen::VectorXd rho = project_feasible(init.coeffs, set);
  State state = obj.evaluate(rho);
  double J = state.objective + tikhonov_value(rho);
  Eigen::VectorXd g = obj.gradient(state) + tik * m.cwiseProduct(rho);
  Eigen::VectorXd riesz = g.cwiseQuotient(m);

  const double gmax = riesz.cwiseAbs().maxCoeff();
  const double unit_step = gmax > 0.0 ? 1.0 / gmax : 1.0;
  const double s_ref = unit_step;
  const double residual_scale = std::max(std::sqrt(m.dot(riesz.cwiseAbs2())),
                                         std::numeric_limits<double>::min());
  const double s_max = 1e4 * opts.step0 * unit_step;
  double s = opts.step0 * unit_step;
  double residual = optimality_residual(rho, g, set, s_ref) / residual_scale;

  auto record = [&](int iter, double step, bool exit_flag) {
    result.history.push_back({iter, J, state.compliance, state.regularizer, set.volume(rho),
                              residual, step, exit_flag});
  };
  record(0, 0.0, false);

  int iter = 0;
  result.reason = StopReason::MaxIterations;
  while (true) {
    if (residual <= opts.tol_residual) {
      result.reason = StopReason::Residual;
      break;
    }
    if (iter >= opts.max_iters) break;

    const Eigen::VectorXd lower = (rho.array() - opts.move_limit).max(0.0).matrix();
    const Eigen::VectorXd upper = (rho.array() + opts.move_limit).min(1.0).matrix();
    bool accepted = false;
    Eigen::VectorXd trial;
    State trial_state;
    double J_trial = J;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      trial = project_feasible(rho - s * riesz, set, lower, upper);
      const double dn2 = m.dot((trial - rho).cwiseAbs2());
      if (dn2 == 0.0) break;
      trial_state = obj.evaluate(trial);
      J_trial = trial_state.objective + tikhonov_value(trial);
      const double required = opts.armijo_c / s * dn2;
      // Below the roundoff floor of J the linear model decides.
      const bool in_noise = J_trial - J <= kObjectiveNoise * std::abs(J);
      if (J_trial <= J - required || (in_noise && g.dot(trial - rho) <= -required)) {
        accepted = true;
        break;
      }
      s *= opts.backtrack;
    }
    if (!accepted) {
      result.reason = StopReason::LineSearchFailure;
      std::ostringstream os;
      os << "no Armijo decrease after " << opts.max_backtracks << " backtracks at iteration "
         << iter << " (step " << s << ", residual " << residual << ")";
      result.diagnostics = os.str();
      break;
    }

    bool exit_flag = false;
    if (opts.trust) {
      const TrustBall& ball = *opts.trust;
      const double half = 0.5 * ball.radius;
      if (detail::trust_distance(obj, ball, trial, m) > half) {
        exit_flag = true;
        result.basin_exit = true;
        // Shorten to the ball boundary along the accepted segment.
        double a = 0.0, b = 1.0;
        const Eigen::VectorXd dir = trial - rho;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (a + b);
          if (detail::trust_distance(obj, ball, rho + mid * dir, m) > half) {
            b = mid;
          } else {
            a = mid;
          }
        }
        trial = rho + a * dir;
        trial_state = obj.evaluate(trial);
        J_trial = trial_state.objective + tikhonov_value(trial);
        if (!(J_trial <= J) || a == 0.0) {
          result.reason = StopReason::LineSearchFailure;
          result.diagnostics = "iterate left the trust ball and the shortened step does not descend";
          break;
        }
      }
    }

    const double J_prev = J;
    ++iter;
    rho = trial;
    state = std::move(trial_state);
    J = J_trial;
    g = obj.gradient(state) + tik * m.cwiseProduct(rho);
    riesz = g.cwiseQuotient(m);
    residual = optimality_residual(rho, g, set, s_ref) / residual_scale;
    record(iter, s, exit_flag);
    if (opts.on_iterate) opts.on_iterate(iter, rho);
    s = std::min(s / opts.backtrack, s_max);

    if (std::abs(J_prev - J) <= opts.tol_objective_rel * std::abs(J)) {
      result.reason = residual <= opts.tol_residual ? StopReason::Residual : StopReason::Stagnation;
      break;
    }
  }

  result.iterations = iter;
  result.converged =
      result.reason == StopReason::Residual || result.reason == StopReason::Stagnation;
  result.density.mesh = prob.mesh;
  result.density.space = prob.density_space;
  result.density.coeffs = rho;
  result.density.gamma = prob.gamma;
  result.displacement = state.u;
  result.objective = J;
  result.unperturbed_objective = state.objective;
  result.residual = residual;
  return result;
}

inline OptResult optimize(const Problem& problem, const DensityField& init,
                          const OptimizerOptions& opts) {
  ReducedObjective obj(problem);
  return optimize(obj, init, opts);
}

/// optimize() with the Tikhonov perturbation eps/2 |rho|^2_{L2} added.
inline OptResult solve_perturbed(const Problem& problem, const DensityField& init, double eps,
                                 OptimizerOptions opts) {
  if (!(eps >= 0.0)) throw InvalidArgument("perturbation eps must be >= 0");
  opts.tikhonov_eps = eps;
  return optimize(problem, init, opts);
}

}  // namespace simpfem
