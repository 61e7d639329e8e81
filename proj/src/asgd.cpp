#include "covshift/asgd.hpp"

#include "covshift/psdlinalg.hpp"

#include <cmath>

namespace covshift {

ASGDConfig make_config(int n, double delta, double gamma, double alpha, double beta) {
  if (n < 2) throw InvalidArgument("asgd config: n must be at least 2");
  if (!(delta > 0.0) || !(gamma >= delta)) throw InvalidArgument("asgd config: need gamma >= delta > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("asgd config: need 0 < beta <= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("asgd config: need 0 < alpha <= 1");
  ASGDConfig cfg;
  cfg.n = n;
  cfg.stages = static_cast<int>(std::floor(std::log2(static_cast<double>(n))));
  cfg.stage_len = n / cfg.stages;
  cfg.delta = delta;
  cfg.gamma = gamma;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.vanilla_sgd = gamma == delta;
  cfg.admissibility_ratio = admissibility_ratio(n, alpha, beta);
  cfg.admissible = cfg.admissibility_ratio >= 16.0;
  return cfg;
}

double admissibility_ratio(int n, double alpha, double beta) {
  const double nn = n;
  return nn * (1.0 - alpha * (1.0 - beta)) / (std::log2(nn) * std::log(nn));
}

ASGDConfig choose_parameters(const ProblemInstance& inst, int n, int kappa_tilde, const ParameterOptions& opts) {
  const int d = inst.d();
  if (n < 16) throw InvalidArgument("choose_parameters: n must be at least 16");
  if (kappa_tilde < 1 || kappa_tilde >= d) throw InvalidArgument("choose_parameters: need 1 <= kappa_tilde < d");
  const Vector lambda = eigh(inst.S).eigenvalues;
  const double trace = lambda.sum();
  const double tail = lambda.tail(d - kappa_tilde).sum();
  const double psi = inst.psi;
  const double delta_max = 1.0 / (psi * trace);
  const double gamma_max = 1.0 / (psi * tail);
  const double dp = opts.delta_aux.value_or(delta_max);
  const double gp = opts.gamma_aux.value_or(gamma_max);
  if (!(dp > 0.0) || dp > delta_max * (1.0 + 1e-12))
    throw InvalidArgument("choose_parameters: delta' must lie in (0, 1/(psi tr S)]");
  if (gp < dp || gp > gamma_max * (1.0 + 1e-12))
    throw InvalidArgument("choose_parameters: gamma' must lie in [delta', 1/(psi sum_{i>kappa} lambda_i)]");
  const double ln_n = std::log(static_cast<double>(n));
  const double beta = dp / (4376.0 * psi * kappa_tilde * gp * ln_n);
  const double alpha = 1.0 / (1.0 + beta);
  ASGDConfig cfg = make_config(n, dp / (2188.0 * ln_n), gp / (2188.0 * ln_n), alpha, beta);
  cfg.delta_aux = dp;
  cfg.gamma_aux = gp;
  cfg.kappa_tilde = kappa_tilde;
  if (opts.strict && !cfg.admissible) throw InfeasibleSchedule(cfg.admissibility_ratio);
  return cfg;
}

Trajectory run(const ProblemInstance& inst, const ASGDConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  SourceSampler sampler(inst, seed);
  return run_with(cfg, inst.d(), [&](Vector& x, double& y) { sampler.next_into(x, y); }, opts);
}

Trajectory run_full_gradient(const ProblemInstance& inst, const ASGDConfig& cfg, const RunOptions& opts) {
  const int d = inst.d();
  Trajectory tr;
  Vector w = Vector::Zero(d), v = Vector::Zero(d), u(d), g(d);
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
      u = a * w + (1.0 - a) * v;
      g.noalias() = inst.S * (u - inst.w_star);
      w = u - ds * g;
      v = b * u + (1.0 - b) * v - gs * g;
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

namespace {

int count_above(const Vector& lambda, double threshold) {
  int k = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > threshold) k = static_cast<int>(i) + 1;
  return k;
}

}  // namespace

int effective_dimension(const ASGDConfig& cfg, const Vector& lambda, int n) {
  const double thr = 32.0 * std::log(static_cast<double>(n)) / ((cfg.gamma + cfg.delta) * cfg.stage_len);
  return count_above(lambda, thr);
}

int effective_dimension_momentum(const ASGDConfig& cfg, const Vector& lambda, int n) {
  const double c = cfg.c_mom();
  const double thr =
      16.0 * (1.0 - c) * std::log(static_cast<double>(n)) / ((cfg.q() - c * cfg.delta) * cfg.stage_len);
  return count_above(lambda, thr);
}

Theorem4Bound theorem4_bound(const ProblemInstance& inst, const ASGDConfig& cfg, int n) {
  if (n < 16) throw InvalidArgument("theorem4_bound: n must be at least 16");
  const int d = inst.d();
  const EigenDecomposition es = eigh(inst.S);
  const Vector& lambda = es.eigenvalues;
  const Matrix& U = es.eigenvectors;
  const Vector tii = (U.transpose() * inst.T * U).diagonal();
  const double K = cfg.stage_len;
  const double nn = n;
  const double log2n = std::log2(nn);

  Theorem4Bound b;
  b.admissible = cfg.admissible;
  b.k_star = effective_dimension(cfg, lambda, n);
  const int k = b.k_star;
  for (int i = 0; i < k; ++i) b.variance_head += 2.0 * tii(i) / (K * lambda(i));
  double tail = 0.0;
  for (int i = k; i < d; ++i) tail += lambda(i) * tii(i);
  const double gd = cfg.gamma + cfg.delta;
  b.variance_tail = (128.0 / 15.0) * K * gd * gd * tail;
  b.effective_variance = (inst.sigma2 + 2.0 * inst.c_finite) * (b.variance_head + b.variance_tail);

  const Matrix Mi = pd_inv_sqrt(inst.M);
  const Matrix P_head = U.leftCols(k) * U.leftCols(k).transpose();
  const Matrix P_tail = U.rightCols(d - k) * U.rightCols(d - k).transpose();
  auto block_norm = [&](const Matrix& P) {
    if (P.size() == 0 || P.norm() == 0.0) return 0.0;
    return spectral_norm(symmetrize(Mi * (P * inst.T * P) * Mi));
  };
  b.bias_head = block_norm(P_head) / (8.0 * nn * nn * std::pow(log2n, 4));
  b.bias_tail = 4.0 * block_norm(P_tail);
  b.effective_bias = b.bias_head + b.bias_tail;
  b.total = b.effective_variance + b.effective_bias;
  return b;
}

nlohmann::json to_json(const ASGDConfig& cfg) {
  return {{"n", cfg.n},
          {"stages", cfg.stages},
          {"stage_len", cfg.stage_len},
          {"delta", cfg.delta},
          {"gamma", cfg.gamma},
          {"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"c_mom", cfg.c_mom()},
          {"q", cfg.q()},
          {"delta_aux", cfg.delta_aux},
          {"gamma_aux", cfg.gamma_aux},
          {"kappa_tilde", cfg.kappa_tilde},
          {"admissibility_ratio", cfg.admissibility_ratio},
          {"admissible", cfg.admissible},
          {"vanilla_sgd", cfg.vanilla_sgd}};
}

nlohmann::json to_json(const Theorem4Bound& b) {
  return {{"k_star", b.k_star},
          {"effective_variance", b.effective_variance},
          {"effective_bias", b.effective_bias},
          {"total", b.total},
          {"variance_head", b.variance_head},
          {"variance_tail", b.variance_tail},
          {"bias_head", b.bias_head},
          {"bias_tail", b.bias_tail},
          {"admissible", b.admissible}};
}

}  // namespace covshift
