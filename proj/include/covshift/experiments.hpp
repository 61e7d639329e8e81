#pragma once

#include "covshift/asgd.hpp"
#include "covshift/estimators.hpp"
#include "covshift/model.hpp"
#include "covshift/precond.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace covshift {

enum class ExperimentKind { Duality, RateSweep, Emergence, BoundCheck };

std::string kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& s);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Duality;
  std::optional<PowerLawSpec> power_law;
  std::optional<ProblemInstance> instance;
  std::vector<int> n_grid;
  int seeds = 100;
  std::string output_path;
  std::uint64_t base_seed = 0;
  int threads = 1;
  // Sample size used by the duality runs.
  int n = 100;
  // Random duality instances: count and dimensions, cycled.
  int count = 50;
  std::vector<int> dims{2, 5, 10, 20};
  // Multiplier in the step-size rules of the sweep and emergence runs.
  double step_scale = 1.0;
  int kappa_tilde = 0;
  double tol = 1e-4;
  nlohmann::json source;
};

void validate(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentKind fallback);
nlohmann::json to_json(const ExperimentSpec& spec);

// FNV-1a hash of the canonical JSON dump, as 16 hex digits.
std::string spec_hash(const nlohmann::json& j);

ProblemInstance build_instance(const ExperimentSpec& spec, std::uint64_t seed);

// Random positive definite instance with ||w*||_M = 1.
ProblemInstance make_random_instance(int d, std::uint64_t seed, double sigma2 = 1.0);

// Comma-separated table with a '#'-prefixed header; each row ends with the spec hash.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& columns, std::string hash);
  void row(const std::vector<double>& values);

 private:
  std::ostream& out_;
  size_t width_;
  std::string hash_;
};

// Duality certification.
struct DualityRow {
  int d = 0;
  double lower_value = 0.0;
  double upper_value = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  double epsilon_reg = 0.0;
};

struct DualityReport {
  std::vector<DualityRow> rows;
  double max_gap = 0.0;
  bool passed = false;
};

DualityRow certify_duality(const ProblemInstance& inst, int n, double tol, double epsilon_reg = 0.0);
DualityReport run_duality(const ExperimentSpec& spec);

// Rate sweep.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double predicted_exponent = 0.0;
  double gap = 0.0;
};

// Ordinary least squares of log2 y on log2 x.
RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// -min(1, (r + s) a / (s a + 1)).
double predicted_rate_exponent(double a, double s, double r);
// 3 ((1 + r) a - 1) / a.
double log_correction_exponent(double a, double r);
// Step exponent (a - b + nu - 1) / (b - nu + 1) with b = s a.
double sgd_step_exponent(double a, double s, double nu);

// delta = gamma = min(1/(psi tr S), scale n^{e} / ln n) with e from sgd_step_exponent.
ASGDConfig sweep_config(const ProblemInstance& inst, const PowerLawSpec& pl, int n, double scale);

struct RatePoint {
  int n = 0;
  RiskEstimate risk;
  double lower_value = 0.0;
};

struct RateSweepReport {
  std::vector<RatePoint> points;
  RateFit asgd_raw;
  RateFit asgd_corrected;
  RateFit lower_raw;
  RateFit lower_corrected;
  double predicted_exponent = 0.0;
};

RiskEstimate asgd_mc_risk(const ProblemInstance& inst, const ASGDConfig& cfg, const std::vector<std::uint64_t>& seeds,
                          int threads);
RateSweepReport run_rate_sweep(const ExperimentSpec& spec);

// Emergence.
struct WorstCaseRisk {
  double risk = 0.0;
  double std_error = 0.0;
  double bias = 0.0;
  double variance = 0.0;
};

// Monte Carlo estimate of sup_{w* in W} E||w_n - w*||_T^2: the top eigenvalue of
// M^{-1/2} E[E_n^T T E_n] M^{-1/2}, where E_n is the linear map w* -> bias error,
// plus the mean noise-driven risk.
WorstCaseRisk worst_case_risk(const ProblemInstance& inst, const ASGDConfig& cfg,
                              const std::vector<std::uint64_t>& seeds, int threads);

// delta = gamma = min(1/(psi tr S), scale n^{-1/(a+1)}).
ASGDConfig emergence_config(const ProblemInstance& inst, double a, int n, double scale);

// n at the most negative second difference of log2 risk over interior grid points.
int detect_knee(const std::vector<int>& ns, const std::vector<double>& risk);

// Nonincreasing least-squares fit (pool adjacent violators).
std::vector<double> isotonic_nonincreasing(const std::vector<double>& y);

struct EmergenceCurve {
  std::vector<int> ns;
  std::vector<WorstCaseRisk> points;
  int knee = 0;
  int threshold = 0;
  double plateau_ratio = 0.0;
  double drop_ratio = 0.0;
  bool plateau_ok = false;
  bool drop_ok = false;
  bool knee_ok = false;
  bool monotone_ok = false;
};

EmergenceCurve run_emergence(const ExperimentSpec& spec);

// Closed-form bound check.
struct BoundRow {
  int n = 0;
  RiskEstimate risk;
  Theorem4Bound bound;
  double semi_bias = 0.0;
  double semi_variance = 0.0;
  ASGDConfig config;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  bool passed = false;
};

BoundReport run_bound_check(const ExperimentSpec& spec);

// Default specs used by the acceptance suite.
ExperimentSpec default_duality_spec();
ExperimentSpec default_rate_spec();
ExperimentSpec default_emergence_spec();
ExperimentSpec default_bound_spec();

void write_csv(const DualityReport& r, const ExperimentSpec& spec, std::ostream& out);
void write_csv(const RateSweepReport& r, const ExperimentSpec& spec, std::ostream& out);
void write_csv(const EmergenceCurve& r, const ExperimentSpec& spec, std::ostream& out);
void write_csv(const BoundReport& r, const ExperimentSpec& spec, std::ostream& out);

// Checkpoint trajectory rows (t, excess_risk, stage).
void write_trajectory_csv(const ProblemInstance& inst, const ASGDConfig& cfg, const Trajectory& tr,
                          const std::string& hash, std::ostream& out);
// Per-direction rows (i, lambda_i, t_ii, bias_i, var_i, regime).
void write_direction_csv(const ProblemInstance& inst, const ASGDConfig& cfg, const std::string& hash,
                         std::ostream& out);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  int threads = 1;
  std::vector<int> only;
};

// Runs the acceptance criteria and prints one line per criterion to out.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts, std::ostream& out);

}  // namespace covshift
