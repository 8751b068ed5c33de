// Batch front-end: solve | optimize | converge | check-filter.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "simpfem/analysis.hpp"
#include "simpfem/config.hpp"
#include "simpfem/io.hpp"

namespace fs = std::filesystem;
using namespace simpfem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kAssertion = 3 };

struct Args {
  std::string config;
  std::string out;
  int levels = -1;
  long long seed = -1;
  bool sequential = false;
};

RunConfig load(const Args& a) {
  RunConfig c = load_config(a.config);
  if (!a.out.empty()) c.out_dir = a.out;
  if (a.levels >= 0) c.levels = a.levels;
  if (a.seed >= 0) c.seed = static_cast<std::uint64_t>(a.seed);
  return c;
}

MeshPtr base_mesh(const RunConfig& c) { return build_mesh(c.problem.domain, c.nx, c.ny); }

Problem make_problem(const RunConfig& c, const MeshPtr& mesh) {
  Problem p = instantiate(c.problem, mesh);
  if (p.filter.under_resolved()) {
    std::cerr << "warning: filter radius " << c.problem.filter.radius << " is below 2h = "
              << 2.0 * mesh->h() << "; the filter is under-resolved\n";
  }
  return p;
}

/// Element averages of a quadrature-point array.
Eigen::VectorXd cell_average(const Eigen::VectorXd& q) {
  Eigen::VectorXd out(q.size() / 4);
  for (Eigen::Index e = 0; e < out.size(); ++e) out[e] = q.segment(4 * e, 4).mean();
  return out;
}

void write_design(const fs::path& path, const Problem& p, const DensityField& rho,
                  const DisplacementField* u) {
  VtkWriter w(p.mesh, "simpfem design");
  w.field("density", rho);
  if (!p.filter.is_identity()) {
    const ScalarField f = p.filter.filtered(rho.coeffs);
    w.field("filtered_density", f);
  }
  if (u) {
    w.point_vector("displacement", u->coeffs);
    w.cell_scalar("energy_density", cell_average(element_energy_density(*u, p.material)));
  }
  w.write(path);
}

int cmd_solve(const Args& a) {
  const RunConfig c = load(a);
  const MeshPtr mesh = base_mesh(c);
  const Problem p = make_problem(c, mesh);
  ReducedObjective obj(p);
  const DensityField rho =
      constant_density(mesh, p.density_space, c.initial_density, c.problem.gamma);
  const State s = obj.evaluate(rho.coeffs);
  write_design(fs::path(c.out_dir) / "solution.vtk", p, rho, &s.u);
  std::cout << std::setprecision(17) << "compliance " << s.compliance << '\n';
  return kOk;
}

std::string summary_text(const OptResult& r, const FeasibleSet& set) {
  const auto& last = r.history.back();
  std::ostringstream os;
  os << std::setprecision(17);
  os << "iterations " << r.iterations << '\n'
     << "converged " << (r.converged ? "yes" : "no") << '\n'
     << "stop_reason " << to_string(r.reason) << '\n'
     << "objective " << r.objective << '\n'
     << "compliance " << last.compliance << '\n'
     << "regularizer " << last.regularizer << '\n'
     << "volume " << last.volume << '\n'
     << "volume_budget " << set.budget << '\n'
     << "residual " << r.residual << '\n'
     << "checkerboard " << checkerboard_index(r.density) << '\n'
     << "basin_exit " << (r.basin_exit ? "yes" : "no") << '\n';
  if (!r.diagnostics.empty()) os << "diagnostics " << r.diagnostics << '\n';
  return os.str();
}

int cmd_optimize(const Args& a) {
  RunConfig c = load(a);
  const MeshPtr mesh = base_mesh(c);
  const Problem p = make_problem(c, mesh);
  ReducedObjective obj(p);
  const DensityField init =
      constant_density(mesh, p.density_space, c.initial_density, c.problem.gamma);
  const fs::path out(c.out_dir);
  OptimizerOptions opts = c.optimizer;
  if (opts.trust) opts.trust->center = project_feasible(init.coeffs, feasible_set(p));
  if (c.checkpoint_every > 0) {
    opts.on_iterate = [&](int iter, const Eigen::VectorXd& rho) {
      if (iter % c.checkpoint_every != 0) return;
      DensityField d = init;
      d.coeffs = rho;
      std::ostringstream name;
      name << "density_" << std::setw(5) << std::setfill('0') << iter << ".vtk";
      write_design(out / name.str(), p, d, nullptr);
    };
  }
  const OptResult r = optimize(obj, init, opts);
  write_design(out / "design.vtk", p, r.density, &r.displacement);
  atomic_write(out / "iterations.csv", iteration_csv(r.history));
  const std::string summary = summary_text(r, feasible_set(p));
  atomic_write(out / "summary.txt", summary);
  std::cout << summary;
  return r.converged ? kOk : kNumerical;
}

int cmd_converge(const Args& a) {
  const RunConfig c = load(a);
  if (c.levels < 3) throw CLI::ValidationError("--levels", "convergence studies need >= 3 levels");
  const MeshPtr mesh = base_mesh(c);
  const ConvergenceReport rep = convergence_study(c.problem, mesh, c.levels, c.optimizer);
  const fs::path out(c.out_dir);
  atomic_write(out / "convergence.csv", report_csv(rep));
  const std::string table = report_table(rep);
  atomic_write(out / "convergence.txt", table);
  std::cout << table;

  bool ok = true;
  const auto check = [&](const char* name, double LevelResult::*col) {
    const bool dec = nearly_decreasing(rep.column(col));
    std::cout << name << (dec ? " decreasing" : " NOT decreasing") << '\n';
    ok = ok && dec;
  };
  check("u H1 error", &LevelResult::err_u_h1);
  if (rep.has_w1p) check("rho W1p error", &LevelResult::err_rho_w1p);
  if (rep.has_filter) {
    check("rho L2 error", &LevelResult::err_rho_l2);
    check("filtered Linf error", &LevelResult::err_filtered_linf);
    if (rep.filtered_w1p) check("filtered W1p error", &LevelResult::err_filtered_w1p);
  }
  for (std::size_t k = 0; k < rep.levels.size(); ++k) {
    if (!rep.levels[k].converged) {
      std::cout << "level " << k << " did not converge (" << rep.levels[k].stop_reason << ")\n";
    }
  }
  return ok ? kOk : kAssertion;
}

int cmd_check_filter(const Args& a) {
  const RunConfig c = load(a);
  if (c.levels < 3) throw CLI::ValidationError("--levels", "filter checks need >= 3 levels");
  if (c.problem.filter.kind == FilterSpec::Kind::None) {
    throw ConfigError("check-filter needs restriction.type = filter or filter+tikhonov");
  }
  const MeshPtr mesh = base_mesh(c);
  const auto family = mesh_family(mesh, c.levels);
  const FilterReport rep = check_assumptions(family, c.problem.density_space, c.problem.filter,
                                             c.problem.filtered_space, c.seed, 50,
                                             c.problem.gamma);
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific;
  os << "radius " << c.problem.filter.radius << "  value bound " << rep.value_bound
     << "  gradient bound " << rep.gradient_bound << '\n';
  os << std::setw(12) << "h" << std::setw(14) << "max value" << std::setw(14) << "max grad"
     << std::setw(14) << "box viol" << std::setw(14) << "linearity" << std::setw(14) << "interp L1"
     << std::setw(14) << "interp L2" << std::setw(14) << "interp Linf" << std::setw(14)
     << "oscillation" << '\n';
  for (const auto& l : rep.levels) {
    os << std::setw(12) << l.h << std::setw(14) << l.max_value << std::setw(14) << l.max_gradient
       << std::setw(14) << l.box_violation << std::setw(14) << l.linearity << std::setw(14)
       << l.interpolation_error[0] << std::setw(14) << l.interpolation_error[1] << std::setw(14)
       << l.interpolation_error[2] << std::setw(14) << l.oscillation_error << '\n';
  }
  os << std::fixed << std::setprecision(3) << "interpolation order L1 "
     << rep.min_interpolation_order[0] << "  L2 " << rep.min_interpolation_order[1] << "  Linf "
     << rep.min_interpolation_order[2] << '\n';
  os << "oscillation decreasing " << (rep.oscillation_decreasing ? "yes" : "no") << '\n';
  for (const auto& f : rep.failures) os << "FAIL " << f << '\n';
  os << (rep.passed() ? "PASS" : "FAIL") << '\n';

  const fs::path out(c.out_dir);
  atomic_write(out / "filter_check.txt", os.str());
  const FilterOperator op = build_filter(mesh, c.problem.density_space, c.problem.filter,
                                         c.problem.filtered_space);
  atomic_write(out / "filter_matrix.mtx", matrix_market(op.matrix()));
  std::cout << os.str();
  return rep.passed() ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIMP topology optimization with restriction methods"};
  app.require_subcommand(1);
  Args args;
  const auto common = [&args](CLI::App* sub) {
    sub->add_option("--config", args.config, "INI problem configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", args.seed, "seed for randomized checks (overrides run.seed)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--sequential", args.sequential,
                  "deterministic sequential execution (the only mode; accepted for scripts)");
  };
  CLI::App* solve = app.add_subcommand("solve", "state solve at a fixed density");
  CLI::App* optimize = app.add_subcommand("optimize", "run the projected gradient optimizer");
  CLI::App* converge = app.add_subcommand("converge", "warm-started refinement study");
  CLI::App* check = app.add_subcommand("check-filter", "check filter assumptions over levels");
  for (CLI::App* sub : {solve, optimize, converge, check}) common(sub);
  for (CLI::App* sub : {converge, check}) {
    sub->add_option("--levels", args.levels, "number of mesh levels (>= 3)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return cmd_solve(args);
    if (*optimize) return cmd_optimize(args);
    if (*converge) return cmd_converge(args);
    if (*check) return cmd_check_filter(args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
