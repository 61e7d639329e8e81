#include "covshift/experiments.hpp"

#include "covshift/lowerbound.hpp"
#include "covshift/parallel.hpp"
#include "covshift/psdlinalg.hpp"
#include "covshift/riskoracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

namespace covshift {

namespace {

std::vector<std::uint64_t> seed_list(std::uint64_t base, int count) {
  std::vector<std::uint64_t> seeds(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) seeds[static_cast<size_t>(k)] = base * 1000003ULL + static_cast<std::uint64_t>(k) + 1;
  return seeds;
}

std::vector<int> octaves(int lo_exp, int hi_exp) {
  std::vector<int> out;
  for (int e = lo_exp; e <= hi_exp; ++e) out.push_back(1 << e);
  return out;
}

}  // namespace

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Duality:
      return "duality";
    case ExperimentKind::RateSweep:
      return "rate_sweep";
    case ExperimentKind::Emergence:
      return "emergence";
    case ExperimentKind::BoundCheck:
      return "bound_check";
  }
  return "?";
}

ExperimentKind kind_from_name(const std::string& s) {
  if (s == "duality") return ExperimentKind::Duality;
  if (s == "rate_sweep" || s == "sweep") return ExperimentKind::RateSweep;
  if (s == "emergence") return ExperimentKind::Emergence;
  if (s == "bound_check" || s == "asgd") return ExperimentKind::BoundCheck;
  throw InvalidArgument("unknown experiment kind: " + s);
}

void validate(const ExperimentSpec& spec) {
  if (!std::is_sorted(spec.n_grid.begin(), spec.n_grid.end()))
    throw InvalidArgument("experiment spec: n_grid must be sorted ascending");
  if (spec.seeds < 1) throw InvalidArgument("experiment spec: seeds must be at least 1");
  if (spec.kind != ExperimentKind::Duality && !spec.power_law && !spec.instance)
    throw InvalidArgument("experiment spec: an instance is required");
  if (spec.kind == ExperimentKind::Emergence && (!spec.power_law || !spec.power_law->d0))
    throw InvalidArgument("experiment spec: emergence needs a power-law instance with d0");
  if ((spec.kind == ExperimentKind::RateSweep || spec.kind == ExperimentKind::Emergence) && !spec.power_law)
    throw InvalidArgument("experiment spec: this experiment needs a power-law instance");
}

ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentKind fallback) {
  ExperimentSpec spec;
  switch (fallback) {
    case ExperimentKind::Duality:
      spec = default_duality_spec();
      break;
    case ExperimentKind::RateSweep:
      spec = default_rate_spec();
      break;
    case ExperimentKind::Emergence:
      spec = default_emergence_spec();
      break;
    case ExperimentKind::BoundCheck:
      spec = default_bound_spec();
      break;
  }
  spec.source = j;
  // A bare instance document is accepted as the instance of the default spec.
  const bool bare = j.contains("S") || j.value("kind", std::string()) == "powerlaw";
  const nlohmann::json inst = bare ? j : j.value("instance", nlohmann::json());
  if (!bare && j.contains("kind")) spec.kind = kind_from_name(j.at("kind").get<std::string>());
  if (!inst.is_null()) {
    if (inst.contains("S")) {
      spec.instance = instance_from_json(inst);
      spec.power_law.reset();
    } else {
      spec.power_law = power_law_from_json(inst);
      spec.instance.reset();
    }
  }
  if (!bare) {
    if (j.contains("n_grid")) spec.n_grid = j.at("n_grid").get<std::vector<int>>();
    spec.seeds = j.value("seeds", spec.seeds);
    spec.output_path = j.value("output_path", spec.output_path);
    spec.base_seed = j.value("seed", spec.base_seed);
    spec.n = j.value("n", spec.n);
    spec.count = j.value("count", spec.count);
    if (j.contains("dims")) spec.dims = j.at("dims").get<std::vector<int>>();
    spec.step_scale = j.value("step_scale", spec.step_scale);
    spec.kappa_tilde = j.value("kappa_tilde", spec.kappa_tilde);
    spec.tol = j.value("tol", spec.tol);
  }
  validate(spec);
  return spec;
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json j = {{"kind", kind_name(spec.kind)}, {"n_grid", spec.n_grid}, {"seeds", spec.seeds},
                      {"seed", spec.base_seed},       {"n", spec.n},           {"count", spec.count},
                      {"dims", spec.dims},            {"step_scale", spec.step_scale},
                      {"kappa_tilde", spec.kappa_tilde}, {"tol", spec.tol}};
  if (spec.power_law) j["instance"] = to_json(*spec.power_law);
  if (spec.instance) j["instance"] = to_json(*spec.instance);
  return j;
}

std::string spec_hash(const nlohmann::json& j) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProblemInstance build_instance(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.instance) return *spec.instance;
  if (spec.power_law) return make_power_law_instance(*spec.power_law, seed);
  throw InvalidArgument("build_instance: spec carries no instance");
}

ProblemInstance make_random_instance(int d, std::uint64_t seed, double sigma2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto gram = [&](double ridge) {
    Matrix G(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) G(i, k) = normal(rng);
    return symmetrize(G * G.transpose() / d + ridge * Matrix::Identity(d, d));
  };
  ProblemInstance inst;
  inst.S = gram(0.1);
  inst.T = gram(0.01);
  inst.M = gram(0.5);
  Vector w(d);
  for (int i = 0; i < d; ++i) w(i) = normal(rng);
  inst.w_star = w / std::sqrt(w.dot(inst.M * w));
  inst.sigma2 = sigma2;
  inst.psi = 3.0;
  inst.c_finite = spectral_norm(whiten(inst).S_prime);
  return inst;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& columns, std::string hash)
    : out_(out), width_(columns.size()), hash_(std::move(hash)) {
  out_ << "# spec_hash " << hash_ << "\n# ";
  for (const auto& c : columns) out_ << c << ",";
  out_ << "spec_hash\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw InvalidArgument("CsvWriter: row width mismatch");
  char buf[64];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out_ << buf << ",";
  }
  out_ << hash_ << "\n";
}

DualityRow certify_duality(const ProblemInstance& inst, int n, double tol, double epsilon_reg) {
  PrecondProgram prog = make_matching_program(inst, n);
  prog.epsilon_reg = epsilon_reg;
  SolverOptions opts;
  opts.tol = std::min(tol, 1e-6);
  const PrecondSolution sol = solve_general(prog, opts);
  AscentOptions aopts;
  aopts.tol = 1e-3 * opts.tol;
  const LowerBoundCertificate cert = maximize_F(prog.triple, inst.sigma2, n, aopts);
  DualityRow row;
  row.d = inst.d();
  row.lower_value = cert.value;
  row.upper_value = sol.objective;
  row.relative_gap = cert.value > 0.0 ? std::abs(sol.objective - cert.value) / cert.value : sol.objective;
  row.iterations = cert.iterations + sol.iterations;
  row.epsilon_reg = sol.epsilon_reg;
  return row;
}

DualityReport run_duality(const ExperimentSpec& spec) {
  DualityReport rep;
  std::vector<ProblemInstance> insts;
  if (spec.instance || spec.power_law) {
    insts.push_back(build_instance(spec, spec.base_seed));
  } else {
    for (int k = 0; k < spec.count; ++k) {
      const int d = spec.dims[static_cast<size_t>(k) % spec.dims.size()];
      insts.push_back(make_random_instance(d, spec.base_seed * 7919ULL + static_cast<std::uint64_t>(k)));
    }
  }
  rep.rows.resize(insts.size());
  parallel_for(static_cast<int>(insts.size()), resolve_threads(spec.threads), [&](int k) {
    rep.rows[static_cast<size_t>(k)] = certify_duality(insts[static_cast<size_t>(k)], spec.n, spec.tol);
  });
  for (const auto& r : rep.rows) rep.max_gap = std::max(rep.max_gap, r.relative_gap);
  rep.passed = rep.max_gap <= spec.tol;
  return rep;
}

RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_loglog: need at least two points");
  const size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < m; ++i) {
    const double lx = std::log2(x[i]), ly = std::log2(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double mx = sx / m, my = sy / m;
  const double cxx = sxx - m * mx * mx, cxy = sxy - m * mx * my, cyy = syy - m * my * my;
  RateFit f;
  f.slope = cxy / cxx;
  f.intercept = my - f.slope * mx;
  f.r2 = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  return f;
}

double predicted_rate_exponent(double a, double s, double r) { return -std::min(1.0, (r + s) * a / (s * a + 1.0)); }

double log_correction_exponent(double a, double r) { return 3.0 * ((1.0 + r) * a - 1.0) / a; }

double sgd_step_exponent(double a, double s, double nu) {
  const double b = s * a;
  return (a - b + nu - 1.0) / (b - nu + 1.0);
}

namespace {

double step_cap(const ProblemInstance& inst) { return 1.0 / (inst.psi * inst.S.trace()); }

ASGDConfig sgd_config(int n, double step) { return make_config(n, step, step, 0.5, 1.0); }

}  // namespace

ASGDConfig sweep_config(const ProblemInstance& inst, const PowerLawSpec& pl, int n, double scale) {
  const double nn = n;
  const double step = scale * std::pow(nn, sgd_step_exponent(pl.a, pl.s, pl.nu)) / std::log(nn);
  return sgd_config(n, std::min(step_cap(inst), step));
}

ASGDConfig emergence_config(const ProblemInstance& inst, double a, int n, double scale) {
  const double step = scale * std::pow(static_cast<double>(n), -1.0 / (a + 1.0));
  return sgd_config(n, std::min(step_cap(inst), step));
}

RiskEstimate asgd_mc_risk(const ProblemInstance& inst, const ASGDConfig& cfg, const std::vector<std::uint64_t>& seeds,
                          int threads) {
  std::vector<double> risks(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), threads, [&](int k) {
    const Trajectory tr = run(inst, cfg, seeds[static_cast<size_t>(k)]);
    risks[static_cast<size_t>(k)] = excess_risk(inst, tr.final_w);
  });
  return summarize(risks);
}

RateSweepReport run_rate_sweep(const ExperimentSpec& spec) {
  validate(spec);
  const PowerLawSpec& pl = *spec.power_law;
  const ProblemInstance inst = build_instance(spec, spec.base_seed);
  const int threads = resolve_threads(spec.threads);
  const bool diagonal = pl.nu == 0.0;
  RateSweepReport rep;
  rep.predicted_exponent = predicted_rate_exponent(pl.a, pl.s, pl.r);
  const double corr = log_correction_exponent(pl.a, pl.r);
  std::vector<double> xs, raw, corrected, lower, lower_corr;
  for (size_t k = 0; k < spec.n_grid.size(); ++k) {
    const int n = spec.n_grid[k];
    RatePoint p;
    p.n = n;
    const ASGDConfig cfg = sweep_config(inst, pl, n, spec.step_scale);
    p.risk = asgd_mc_risk(inst, cfg, seed_list(spec.base_seed + 17 * (k + 1), spec.seeds), threads);
    if (diagonal) {
      p.lower_value = solve_diagonal(inst.S.diagonal(), inst.M.diagonal(), inst.T.diagonal(),
                                     1.0 / (std::numbers::pi * std::numbers::pi), inst.sigma2 / n)
                          .objective;
    } else {
      p.lower_value = maximize_F(whiten(inst), inst.sigma2, n).value;
    }
    const double lc = std::pow(std::log(static_cast<double>(n)), corr);
    xs.push_back(n);
    raw.push_back(p.risk.mean);
    corrected.push_back(p.risk.mean / lc);
    lower.push_back(p.lower_value);
    lower_corr.push_back(p.lower_value / lc);
    rep.points.push_back(p);
  }
  rep.asgd_raw = fit_loglog(xs, raw);
  rep.asgd_corrected = fit_loglog(xs, corrected);
  rep.lower_raw = fit_loglog(xs, lower);
  rep.lower_corrected = fit_loglog(xs, lower_corr);
  for (RateFit* f : {&rep.asgd_raw, &rep.asgd_corrected, &rep.lower_raw, &rep.lower_corrected}) {
    f->predicted_exponent = rep.predicted_exponent;
    f->gap = f->slope - rep.predicted_exponent;
  }
  return rep;
}

WorstCaseRisk worst_case_risk(const ProblemInstance& inst, const ASGDConfig& cfg,
                              const std::vector<std::uint64_t>& seeds, int threads) {
  const int d = inst.d();
  const size_t m = seeds.size();
  std::vector<Matrix> B(m);
  std::vector<double> var(m);
  parallel_for(static_cast<int>(m), threads, [&](int k) {
    SourceSampler sampler(inst, seeds[static_cast<size_t>(k)]);
    Vector x(d), r(d), ru(d);
    Matrix Ew = -Matrix::Identity(d, d), Ev = Ew, Eu(d, d);
    Vector zw = Vector::Zero(d), zv = zw, zu(d);
    const double a = cfg.alpha, b = cfg.beta;
    for (int stage = 1; stage <= cfg.stages; ++stage) {
      const double ds = cfg.stage_delta(stage), gs = cfg.stage_gamma(stage);
      for (int t = 0; t < cfg.stage_len; ++t) {
        sampler.next_x(x);
        const double eps = sampler.next_noise();
        if (cfg.vanilla_sgd) {
          // With gamma == delta the v sequence equals w.
          r.noalias() = Ew.transpose() * x;
          Ew.noalias() -= (ds * x) * r.transpose();
          const double res = x.dot(zw) - eps;
          zw -= (ds * res) * x;
        } else {
          Eu = a * Ew + (1.0 - a) * Ev;
          ru.noalias() = Eu.transpose() * x;
          Ew = Eu;
          Ew.noalias() -= (ds * x) * ru.transpose();
          Ev = b * Eu + (1.0 - b) * Ev;
          Ev.noalias() -= (gs * x) * ru.transpose();
          zu = a * zw + (1.0 - a) * zv;
          const double res = x.dot(zu) - eps;
          zw = zu - (ds * res) * x;
          zv = b * zu + (1.0 - b) * zv - (gs * res) * x;
        }
      }
    }
    B[static_cast<size_t>(k)] = Ew.transpose() * inst.T * Ew;
    var[static_cast<size_t>(k)] = zw.dot(inst.T * zw);
  });
  const Matrix Mi = pd_inv_sqrt(inst.M);
  Matrix mean = Matrix::Zero(d, d);
  for (const auto& Bk : B) mean += Bk;
  mean /= static_cast<double>(m);
  const EigenDecomposition e = eigh(symmetrize(Mi * mean * Mi));
  const Vector v = Mi * e.eigenvectors.col(0);
  std::vector<double> per_seed(m);
  double var_mean = 0.0;
  for (size_t k = 0; k < m; ++k) {
    per_seed[k] = v.dot(B[k] * v) + var[k];
    var_mean += var[k];
  }
  WorstCaseRisk out;
  out.bias = e.eigenvalues(0);
  out.variance = var_mean / m;
  out.risk = out.bias + out.variance;
  out.std_error = summarize(per_seed).std_error;
  return out;
}

int detect_knee(const std::vector<int>& ns, const std::vector<double>& risk) {
  if (ns.size() != risk.size() || ns.size() < 3) throw InvalidArgument("detect_knee: need at least three points");
  int knee = ns[1];
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i + 1 < ns.size(); ++i) {
    const double sd = std::log2(risk[i + 1]) - 2.0 * std::log2(risk[i]) + std::log2(risk[i - 1]);
    if (sd < best) {
      best = sd;
      knee = ns[i];
    }
  }
  return knee;
}

std::vector<double> isotonic_nonincreasing(const std::vector<double>& y) {
  // Pool adjacent violators for a nonincreasing fit.
  std::vector<double> level;
  std::vector<int> weight;
  for (double v : y) {
    level.push_back(v);
    weight.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] < level.back()) {
      const double w1 = weight[weight.size() - 2], w2 = weight.back();
      const double merged = (level[level.size() - 2] * w1 + level.back() * w2) / (w1 + w2);
      level.pop_back();
      weight.pop_back();
      level.back() = merged;
      weight.back() += static_cast<int>(w2);
    }
  }
  std::vector<double> out;
  for (size_t k = 0; k < level.size(); ++k)
    for (int j = 0; j < weight[k]; ++j) out.push_back(level[k]);
  return out;
}

EmergenceCurve run_emergence(const ExperimentSpec& spec) {
  validate(spec);
  const PowerLawSpec& pl = *spec.power_law;
  const ProblemInstance inst = build_instance(spec, spec.base_seed);
  const int threads = resolve_threads(spec.threads);
  EmergenceCurve c;
  c.ns = spec.n_grid;
  c.threshold = static_cast<int>(std::lround(std::pow(static_cast<double>(*pl.d0), pl.a + 1.0)));
  std::vector<double> risk;
  for (size_t k = 0; k < c.ns.size(); ++k) {
    const ASGDConfig cfg = emergence_config(inst, pl.a, c.ns[k], spec.step_scale);
    c.points.push_back(worst_case_risk(inst, cfg, seed_list(spec.base_seed + 31 * (k + 1), spec.seeds), threads));
    risk.push_back(c.points.back().risk);
  }
  auto at = [&](int n) -> std::optional<double> {
    for (size_t k = 0; k < c.ns.size(); ++k)
      if (c.ns[k] == n) return risk[k];
    return std::nullopt;
  };
  const auto r_lo = at(c.threshold / 64), r_mid = at(c.threshold / 8), r_hi = at(8 * c.threshold);
  if (r_lo && r_mid) {
    c.plateau_ratio = *r_mid / *r_lo;
    c.plateau_ok = c.plateau_ratio >= 0.5 && c.plateau_ratio <= 2.0;
  }
  if (r_mid && r_hi) {
    c.drop_ratio = *r_hi / *r_mid;
    c.drop_ok = c.drop_ratio <= 0.25;
  }
  if (c.ns.size() >= 3) {
    c.knee = detect_knee(c.ns, risk);
    c.knee_ok = std::abs(std::log2(static_cast<double>(c.knee) / c.threshold)) <= 1.0 + 1e-12;
  }
  const std::vector<double> iso = isotonic_nonincreasing(risk);
  c.monotone_ok = true;
  for (size_t k = 0; k < risk.size(); ++k)
    if (std::abs(risk[k] - iso[k]) > 2.0 * c.points[k].std_error + 1e-15) c.monotone_ok = false;
  return c;
}

BoundReport run_bound_check(const ExperimentSpec& spec) {
  validate(spec);
  const ProblemInstance inst = build_instance(spec, spec.base_seed);
  const int threads = resolve_threads(spec.threads);
  const int kappa = spec.kappa_tilde > 0 ? spec.kappa_tilde : std::max(1, inst.d() / 2);
  BoundReport rep;
  rep.passed = true;
  for (size_t k = 0; k < spec.n_grid.size(); ++k) {
    const int n = spec.n_grid[k];
    BoundRow row;
    row.n = n;
    ParameterOptions popts;
    popts.strict = false;
    row.config = choose_parameters(inst, n, kappa, popts);
    row.risk = asgd_mc_risk(inst, row.config, seed_list(spec.base_seed + 101 * (k + 1), spec.seeds), threads);
    row.bound = theorem4_bound(inst, row.config, n);
    row.semi_bias = semi_stochastic_bias(inst, row.config).total;
    row.semi_variance = semi_stochastic_variance(inst, row.config).total;
    if (!(row.risk.mean <= row.bound.total)) rep.passed = false;
    rep.rows.push_back(row);
  }
  return rep;
}

ExperimentSpec default_duality_spec() {
  ExperimentSpec s;
  s.kind = ExperimentKind::Duality;
  s.n = 100;
  s.count = 50;
  s.dims = {2, 5, 10, 20};
  s.tol = 1e-4;
  return s;
}

ExperimentSpec default_rate_spec() {
  ExperimentSpec s;
  s.kind = ExperimentKind::RateSweep;
  PowerLawSpec pl;
  pl.d = 200;
  pl.a = 2.0;
  pl.s = 1.0;
  pl.r = 0.0;
  pl.sigma2 = 1.0;
  s.power_law = pl;
  s.n_grid = octaves(8, 14);
  s.seeds = 100;
  s.step_scale = 1.0;
  return s;
}

ExperimentSpec default_emergence_spec() {
  ExperimentSpec s;
  s.kind = ExperimentKind::Emergence;
  PowerLawSpec pl;
  pl.d = 64;
  pl.a = 2.0;
  pl.s = 1.0;
  pl.r = 0.0;
  pl.d0 = 8;
  pl.sigma2 = 0.01;
  s.power_law = pl;
  s.n_grid = octaves(3, 15);
  s.seeds = 100;
  s.step_scale = 2.5;
  return s;
}

ExperimentSpec default_bound_spec() {
  ExperimentSpec s;
  s.kind = ExperimentKind::BoundCheck;
  PowerLawSpec pl;
  pl.d = 100;
  pl.a = 2.0;
  pl.s = 1.0;
  pl.r = 0.0;
  pl.sigma2 = 1.0;
  s.power_law = pl;
  s.n_grid = {1 << 8, 1 << 10, 1 << 12};
  s.seeds = 200;
  return s;
}

void write_csv(const DualityReport& r, const ExperimentSpec& spec, std::ostream& out) {
  CsvWriter w(out, {"d", "lower_value", "upper_value", "relative_gap", "iterations", "epsilon_reg"},
              spec_hash(to_json(spec)));
  for (const auto& row : r.rows)
    w.row({double(row.d), row.lower_value, row.upper_value, row.relative_gap, double(row.iterations), row.epsilon_reg});
}

void write_csv(const RateSweepReport& r, const ExperimentSpec& spec, std::ostream& out) {
  const double corr = log_correction_exponent(spec.power_law->a, spec.power_law->r);
  CsvWriter w(out, {"n", "mean_risk", "median_risk", "std_error", "corrected_mean", "lower_value"},
              spec_hash(to_json(spec)));
  for (const auto& p : r.points)
    w.row({double(p.n), p.risk.mean, p.risk.median, p.risk.std_error,
           p.risk.mean / std::pow(std::log(double(p.n)), corr), p.lower_value});
}

void write_csv(const EmergenceCurve& r, const ExperimentSpec& spec, std::ostream& out) {
  CsvWriter w(out, {"n", "worst_risk", "std_error", "bias", "variance"}, spec_hash(to_json(spec)));
  for (size_t k = 0; k < r.ns.size(); ++k)
    w.row({double(r.ns[k]), r.points[k].risk, r.points[k].std_error, r.points[k].bias, r.points[k].variance});
}

void write_csv(const BoundReport& r, const ExperimentSpec& spec, std::ostream& out) {
  CsvWriter w(out,
              {"n", "mean_risk", "median_risk", "std_error", "bound_total", "effective_variance", "effective_bias",
               "k_star", "semi_bias", "semi_variance"},
              spec_hash(to_json(spec)));
  for (const auto& row : r.rows)
    w.row({double(row.n), row.risk.mean, row.risk.median, row.risk.std_error, row.bound.total,
           row.bound.effective_variance, row.bound.effective_bias, double(row.bound.k_star), row.semi_bias,
           row.semi_variance});
}

void write_trajectory_csv(const ProblemInstance& inst, const ASGDConfig& cfg, const Trajectory& tr,
                          const std::string& hash, std::ostream& out) {
  CsvWriter w(out, {"t", "excess_risk", "stage"}, hash);
  for (size_t k = 0; k < tr.checkpoints.size(); ++k) {
    const int t = tr.checkpoint_t[k];
    w.row({double(t), excess_risk(inst, tr.checkpoints[k]), double(t == 0 ? 0 : cfg.stage_of(t))});
  }
}

void write_direction_csv(const ProblemInstance& inst, const ASGDConfig& cfg, const std::string& hash,
                         std::ostream& out) {
  CsvWriter w(out, {"i", "lambda", "t_ii", "bias", "var", "regime"}, hash);
  for (const auto& r : direction_diagnostics(inst, cfg))
    w.row({double(r.i), r.lambda, r.t_ii, r.bias, r.variance, double(static_cast<int>(r.regime) + 1)});
}

}  // namespace covshift
