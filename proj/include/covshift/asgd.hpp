#pragma once

#include "covshift/model.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace covshift {

class InfeasibleSchedule : public Error {
 public:
  explicit InfeasibleSchedule(double ratio)
      : Error("parameter choice violates n(1 - alpha(1 - beta)) / (log2 n ln n) >= 16 (ratio " +
              std::to_string(ratio) + ")"),
        ratio_(ratio) {}
  double ratio() const { return ratio_; }

 private:
  double ratio_;
};

// Hyperparameters of accelerated SGD with a 4^{-(l-1)} step ladder.
// delta and gamma are the first-stage step sizes.
struct ASGDConfig {
  int n = 0;
  int stages = 0;
  int stage_len = 0;
  double delta = 0.0;
  double gamma = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  // Auxiliary steps of the parameter-choice procedure; zero when unset.
  double delta_aux = 0.0;
  double gamma_aux = 0.0;
  int kappa_tilde = 0;
  double admissibility_ratio = 0.0;
  bool admissible = false;
  bool vanilla_sgd = false;

  // Momentum constant alpha (1 - beta).
  double c_mom() const { return alpha * (1.0 - beta); }
  // alpha delta + (1 - alpha) gamma.
  double q() const { return alpha * delta + (1.0 - alpha) * gamma; }
  // 1-based stage index.
  double stage_delta(int stage) const { return delta / std::pow(4.0, stage - 1); }
  double stage_gamma(int stage) const { return gamma / std::pow(4.0, stage - 1); }
  double stage_q(int stage) const { return alpha * stage_delta(stage) + (1.0 - alpha) * stage_gamma(stage); }
  // Stage of the 1-based iterate t.
  int stage_of(int t) const { return (t - 1) / stage_len + 1; }
  int total_steps() const { return stages * stage_len; }
};

// stages = floor(log2 n), stage_len = floor(n / stages).
ASGDConfig make_config(int n, double delta, double gamma, double alpha, double beta);

// n (1 - alpha (1 - beta)) / (log2 n ln n).
double admissibility_ratio(int n, double alpha, double beta);

struct ParameterOptions {
  std::optional<double> delta_aux;
  std::optional<double> gamma_aux;
  // Throw InfeasibleSchedule when the admissibility ratio is below 16.
  bool strict = true;
};

ASGDConfig choose_parameters(const ProblemInstance& inst, int n, int kappa_tilde, const ParameterOptions& opts = {});

struct RunOptions {
  // Record w every checkpoint_every iterates; 0 selects stage_len.
  bool record = false;
  int checkpoint_every = 0;
};

struct Trajectory {
  Vector final_w;
  // 1-based iterate index at which each stage ends.
  std::vector<int> stage_boundaries;
  std::vector<int> checkpoint_t;
  std::vector<Vector> checkpoints;
};

// Generic driver; draw(x, y) supplies the next sample.
template <class Draw>
Trajectory run_with(const ASGDConfig& cfg, int d, Draw&& draw, const RunOptions& opts = {}) {
  Trajectory tr;
  Vector w = Vector::Zero(d), v = Vector::Zero(d), u(d), x(d);
  double y = 0.0;
  const double a = cfg.alpha, b = cfg.beta;
  const int every = opts.checkpoint_every > 0 ? opts.checkpoint_every : cfg.stage_len;
  int t = 0;
  if (opts.record) {
    tr.checkpoint_t.push_back(0);
    tr.checkpoints.push_back(w);
  }
  for (int stage = 1; stage <= cfg.stages; ++stage) {
    const double ds = cfg.stage_delta(stage), gs = cfg.stage_gamma(stage);
    for (int k = 0; k < cfg.stage_len; ++k) {
      draw(x, y);
      u = a * w + (1.0 - a) * v;
      const double r = x.dot(u) - y;
      w = u - (ds * r) * x;
      v = b * u + (1.0 - b) * v - (gs * r) * x;
      ++t;
      if (opts.record && t % every == 0) {
        tr.checkpoint_t.push_back(t);
        tr.checkpoints.push_back(w);
      }
    }
    tr.stage_boundaries.push_back(t);
  }
  tr.final_w = w;
  return tr;
}

// Algorithm run on Gaussian samples from the instance.
Trajectory run(const ProblemInstance& inst, const ASGDConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});

// Deterministic variant with the exact population gradient S (u - w*).
Trajectory run_full_gradient(const ProblemInstance& inst, const ASGDConfig& cfg, const RunOptions& opts = {});

// max{k : lambda_k > 32 ln n / ((gamma + delta) K)}, 0 if empty.
int effective_dimension(const ASGDConfig& cfg, const Vector& lambda, int n);
// max{k : lambda_k > 16 (1 - c) ln n / ((q - c delta) K)}.
int effective_dimension_momentum(const ASGDConfig& cfg, const Vector& lambda, int n);

struct Theorem4Bound {
  int k_star = 0;
  double effective_variance = 0.0;
  double effective_bias = 0.0;
  double total = 0.0;
  // Components for diagnostics.
  double variance_head = 0.0;
  double variance_tail = 0.0;
  double bias_head = 0.0;
  double bias_tail = 0.0;
  bool admissible = false;
};

Theorem4Bound theorem4_bound(const ProblemInstance& inst, const ASGDConfig& cfg, int n);

nlohmann::json to_json(const ASGDConfig& cfg);
nlohmann::json to_json(const Theorem4Bound& b);

}  // namespace covshift
