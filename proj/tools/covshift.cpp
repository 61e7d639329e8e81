#include "covshift/experiments.hpp"
#include "covshift/lowerbound.hpp"
#include "covshift/parallel.hpp"
#include "covshift/precond.hpp"
#include "covshift/riskoracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace covshift;

namespace {

struct Flags {
  std::string spec_path;
  std::string out;
  std::optional<double> tol;
  std::optional<int> n;
  std::optional<int> seeds;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string trajectory_path;
  std::string directions_path;
};

ExperimentSpec load_spec(const Flags& f, ExperimentKind kind) {
  ExperimentSpec spec;
  if (f.spec_path.empty()) {
    spec = spec_from_json(nlohmann::json::object(), kind);
  } else {
    std::ifstream in(f.spec_path);
    if (!in) throw InvalidArgument("cannot open spec file " + f.spec_path);
    spec = spec_from_json(nlohmann::json::parse(in), kind);
  }
  if (f.tol) spec.tol = *f.tol;
  if (f.n) spec.n = *f.n;
  if (f.seeds) spec.seeds = *f.seeds;
  if (f.seed) spec.base_seed = *f.seed;
  spec.threads = resolve_threads(f.threads);
  validate(spec);
  return spec;
}

// Writes to --out, or to stdout when unset.
template <class Fn>
void emit(const Flags& f, Fn&& fn) {
  if (f.out.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(f.out);
  if (!out) throw InvalidArgument("cannot open output file " + f.out);
  fn(out);
}

int cmd_duality(const Flags& f) {
  const ExperimentSpec spec = load_spec(f, ExperimentKind::Duality);
  const DualityReport rep = run_duality(spec);
  emit(f, [&](std::ostream& os) { write_csv(rep, spec, os); });
  std::cerr << "max relative gap " << rep.max_gap << " (tol " << spec.tol << ")\n";
  return rep.passed ? 0 : 1;
}

int cmd_precondition(const Flags& f) {
  const ExperimentSpec spec = load_spec(f, ExperimentKind::Duality);
  const ProblemInstance inst =
      spec.instance || spec.power_law ? build_instance(spec, spec.base_seed) : make_random_instance(5, spec.base_seed);
  SolverOptions opts;
  opts.tol = spec.tol;
  const PrecondSolution sol = solve_general(make_matching_program(inst, spec.n), opts);
  nlohmann::json j = to_json(sol);
  j["spec_hash"] = spec_hash(to_json(spec));
  emit(f, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  std::cerr << "objective " << sol.objective << ", lower " << sol.lower_value << ", gap " << sol.gap << "\n";
  return sol.converged ? 0 : 1;
}

int cmd_asgd(const Flags& f) {
  ExperimentSpec spec = load_spec(f, ExperimentKind::BoundCheck);
  if (f.n) spec.n_grid = {*f.n};
  const BoundReport rep = run_bound_check(spec);
  emit(f, [&](std::ostream& os) { write_csv(rep, spec, os); });
  if (!rep.rows.empty() && (!f.trajectory_path.empty() || !f.directions_path.empty())) {
    // Diagnostics for the largest n, first seed of its row.
    const ProblemInstance inst = build_instance(spec, spec.base_seed);
    const BoundRow& last = rep.rows.back();
    const std::string hash = spec_hash(to_json(spec));
    if (!f.trajectory_path.empty()) {
      RunOptions ro;
      ro.record = true;
      std::ofstream out(f.trajectory_path);
      if (!out) throw InvalidArgument("cannot open output file " + f.trajectory_path);
      write_trajectory_csv(inst, last.config, run(inst, last.config, spec.base_seed, ro), hash, out);
    }
    if (!f.directions_path.empty()) {
      std::ofstream out(f.directions_path);
      if (!out) throw InvalidArgument("cannot open output file " + f.directions_path);
      write_direction_csv(inst, last.config, hash, out);
    }
  }
  for (const auto& row : rep.rows) {
    const bool ok = row.risk.mean <= row.bound.total;
    std::cerr << "n=" << row.n << " risk=" << row.risk.mean << " bound=" << row.bound.total << (ok ? "" : " VIOLATED")
              << "\n";
    if (!ok) std::cerr << to_json(row.bound).dump(2) << "\n" << to_json(row.config).dump(2) << "\n";
  }
  return rep.passed ? 0 : 1;
}

int cmd_sweep(const Flags& f) {
  const ExperimentSpec spec = load_spec(f, ExperimentKind::RateSweep);
  const RateSweepReport rep = run_rate_sweep(spec);
  emit(f, [&](std::ostream& os) { write_csv(rep, spec, os); });
  const double tol = f.tol.value_or(0.15);
  std::cerr << "predicted " << rep.predicted_exponent << ", raw slope " << rep.asgd_raw.slope << ", corrected slope "
            << rep.asgd_corrected.slope << ", lower-bound slope " << rep.lower_raw.slope << "\n";
  return std::abs(rep.asgd_corrected.gap) <= tol ? 0 : 1;
}

int cmd_emergence(const Flags& f) {
  const ExperimentSpec spec = load_spec(f, ExperimentKind::Emergence);
  const EmergenceCurve c = run_emergence(spec);
  emit(f, [&](std::ostream& os) { write_csv(c, spec, os); });
  std::cerr << "knee " << c.knee << " (threshold " << c.threshold << "), plateau ratio " << c.plateau_ratio
            << ", drop ratio " << c.drop_ratio << ", monotone " << (c.monotone_ok ? "yes" : "no") << "\n";
  return c.plateau_ok && c.drop_ok ? 0 : 1;
}

int cmd_verify(const Flags& f) {
  AcceptanceOptions opts;
  opts.threads = f.threads;
  const auto results = run_acceptance(opts, std::cout);
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covshift: minimax covariate-shift experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", flags.spec_path, "Experiment spec JSON");
    sub->add_option("--out", flags.out, "Output path (CSV or JSON)");
    sub->add_option("--tol", flags.tol, "Tolerance");
    sub->add_option("--threads", flags.threads, "Worker threads (COVSHIFT_THREADS overrides)");
    sub->add_option("--seed", flags.seed, "Base seed");
    sub->add_option("--n", flags.n, "Sample size");
    sub->add_option("--seeds", flags.seeds, "Monte Carlo seeds");
  };
  int code = 0;
  auto bind = [&](const char* name, const char* help, int (*fn)(const Flags&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&code, &flags, fn] { code = fn(flags); });
  };
  bind("duality", "Certify the minimax duality gap", cmd_duality);
  bind("precondition", "Solve for the optimal preconditioner", cmd_precondition);
  bind("asgd", "Monte Carlo ASGD risk against the closed-form bound", cmd_asgd);
  CLI::App* asgd = app.get_subcommand("asgd");
  asgd->add_option("--trajectory", flags.trajectory_path, "Checkpoint CSV (t, excess_risk, stage) for the largest n");
  asgd->add_option("--directions", flags.directions_path, "Per-direction CSV (i, lambda, t_ii, bias, var, regime)");
  bind("sweep", "Rate-exponent sweep over n", cmd_sweep);
  bind("emergence", "Worst-case risk curve and knee detection", cmd_emergence);
  bind("verify", "Run the acceptance suite", cmd_verify);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return code;
}
