#include "covshift/estimators.hpp"

#include "covshift/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace covshift {

UpperObjective eval_upper_objective(const SpectralTriple& triple, const Matrix& A, double noise_coeff,
                                    double bias_coeff) {
  const int d = triple.d();
  if (A.rows() != d || A.cols() != d) throw InvalidArgument("eval_upper_objective: dimension mismatch");
  const Matrix S_inv = pd_inverse(triple.S_prime);
  const Matrix IA = Matrix::Identity(d, d) - A;
  UpperObjective out;
  out.bias_term = bias_coeff * std::max(0.0, max_eigenvalue(symmetrize(IA.transpose() * triple.T_prime * IA)));
  out.variance_term = noise_coeff * (triple.T_prime.cwiseProduct(A * S_inv * A.transpose())).sum();
  out.total = out.bias_term + out.variance_term;
  return out;
}

double upper_bound_noise_coeff(const ProblemInstance& inst, const SpectralTriple& triple, int n) {
  if (n < 1) throw InvalidArgument("noise coefficient: n must be at least 1");
  return (2.0 * inst.sigma2 + 2.0 * inst.psi * spectral_norm(triple.S_prime)) / n;
}

double matching_noise_coeff(const ProblemInstance& inst, int n) {
  if (n < 1) throw InvalidArgument("noise coefficient: n must be at least 1");
  return inst.sigma2 / n;
}

Preconditioner make_preconditioner(const SpectralTriple& triple, const Matrix& A, double noise_coeff, int n) {
  Preconditioner p;
  p.A = A;
  p.noise_coeff = noise_coeff;
  p.n = n;
  p.objective_value = eval_upper_objective(triple, A, noise_coeff).total;
  return p;
}

Vector estimate_from_moment(const ProblemInstance& inst, const Matrix& A, const Vector& moment) {
  Eigen::LLT<Matrix> llt(inst.S);
  if (llt.info() != Eigen::Success) throw NotPSD("estimate: S is not positive definite", min_eigenvalue(inst.S));
  const Vector z = llt.solve(moment);
  return pd_inv_sqrt(inst.M) * (A * (psd_sqrt(inst.M) * z));
}

Vector estimate(const ProblemInstance& inst, const Matrix& A, const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidArgument("estimate: need at least one sample");
  Vector moment = Vector::Zero(inst.d());
  for (const auto& s : samples) moment += s.y * s.x;
  moment /= static_cast<double>(samples.size());
  return estimate_from_moment(inst, A, moment);
}

RiskEstimate summarize(const std::vector<double>& values) {
  RiskEstimate r;
  r.seeds = static_cast<int>(values.size());
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std_error = std::sqrt(ss / (values.size() - 1) / values.size());
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const size_t h = sorted.size() / 2;
  r.median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  return r;
}

RiskEstimate mc_risk(const ProblemInstance& inst, const Matrix& A, int n, const std::vector<std::uint64_t>& seeds,
                     int threads) {
  if (seeds.size() < 2) throw InvalidArgument("mc_risk: need at least two seeds");
  if (n < 1) throw InvalidArgument("mc_risk: n must be at least 1");
  const int d = inst.d();
  Eigen::LLT<Matrix> llt(inst.S);
  if (llt.info() != Eigen::Success) throw NotPSD("mc_risk: S is not positive definite", min_eigenvalue(inst.S));
  const Matrix map = pd_inv_sqrt(inst.M) * A * psd_sqrt(inst.M);
  std::vector<double> risks(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), threads, [&](int k) {
    SourceSampler sampler(inst, seeds[static_cast<size_t>(k)]);
    Vector x(d), moment = Vector::Zero(d);
    double y = 0.0;
    for (int i = 0; i < n; ++i) {
      sampler.next_into(x, y);
      moment += y * x;
    }
    moment /= static_cast<double>(n);
    risks[static_cast<size_t>(k)] = excess_risk(inst, map * llt.solve(moment));
  });
  return summarize(risks);
}

}  // namespace covshift
