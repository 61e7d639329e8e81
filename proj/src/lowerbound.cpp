#include "covshift/lowerbound.hpp"

#include "covshift/psdlinalg.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace covshift {

namespace {

constexpr double kPi = std::numbers::pi;

double inner(const Matrix& A, const Matrix& B) { return A.cwiseProduct(B).sum(); }

double kappa_of(double sigma2, int n) {
  if (n < 1) throw InvalidArgument("lower objective: n must be at least 1");
  if (!(sigma2 > 0.0)) throw InvalidArgument("lower objective: sigma2 must be positive");
  return n / sigma2;
}

}  // namespace

double eval_lower_objective_kappa(const SpectralTriple& triple, const Matrix& F, double kappa) {
  const int d = triple.d();
  if (F.rows() != d || F.cols() != d) throw InvalidArgument("eval_lower_objective: dimension mismatch");
  const Matrix R = psd_sqrt(F);
  const Matrix K = Matrix::Identity(d, d) + kappa * symmetrize(R * triple.S_prime * R);
  const Matrix G = R * K.llt().solve(R);
  return inner(triple.T_prime, G);
}

double eval_lower_objective(const SpectralTriple& triple, const Matrix& F, double sigma2, int n) {
  return eval_lower_objective_kappa(triple, F, kappa_of(sigma2, n));
}

Matrix lower_objective_gradient(const SpectralTriple& triple, const Matrix& F, double kappa) {
  const int d = triple.d();
  const Matrix K = Matrix::Identity(d, d) + kappa * F * triple.S_prime;
  const Matrix H = K.partialPivLu().inverse();
  return symmetrize(H.transpose() * triple.T_prime * H);
}

LowerBoundCertificate maximize_F_kappa(const SpectralTriple& triple, double kappa, const AscentOptions& opts) {
  const int d = triple.d();
  if (!(kappa > 0.0)) throw InvalidArgument("maximize_F: kappa must be positive");
  if (min_eigenvalue(triple.S_prime) <= 0.0)
    throw NotPSD("maximize_F: S' is not positive definite", min_eigenvalue(triple.S_prime));
  const double radius = opts.radius;

  LowerBoundCertificate cert;
  Matrix F = Matrix::Identity(d, d) * (radius / d);
  double value = eval_lower_objective_kappa(triple, F, kappa);
  Matrix grad = lower_objective_gradient(triple, F, kappa);
  double step = 1.0;
  Matrix prev_F, prev_grad;

  auto fw_gap = [&](const Matrix& g, const Matrix& X) {
    return std::max(0.0, radius * std::max(0.0, max_eigenvalue(g)) - inner(g, X));
  };

  int it = 0;
  double gap = fw_gap(grad, F);
  for (; it < opts.max_iterations; ++it) {
    if (gap <= opts.tol * std::max(value, std::numeric_limits<double>::min())) {
      cert.converged = true;
      break;
    }
    if (it > 0) {
      const Matrix dF = F - prev_F;
      const Matrix dG = grad - prev_grad;
      const double sy = inner(dF, dG);
      if (sy < 0.0) {
        step = std::clamp(inner(dF, dF) / -sy, 1e-20, 1e20);
      } else {
        step *= 2.0;
      }
    }
    Matrix F_new;
    double value_new = value;
    bool accepted = false;
    for (int bt = 0; bt < 200; ++bt) {
      F_new = project_psd_nuclear_ball(F + step * grad, radius);
      value_new = eval_lower_objective_kappa(triple, F_new, kappa);
      if (value_new >= value + opts.armijo * inner(grad, F_new - F)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || (F_new - F).norm() == 0.0) {
      // No ascent direction at working precision.
      cert.converged = gap <= 1e3 * opts.tol * std::max(value, std::numeric_limits<double>::min());
      break;
    }
    prev_F = F;
    prev_grad = grad;
    F = F_new;
    value = value_new;
    grad = lower_objective_gradient(triple, F, kappa);
    gap = fw_gap(grad, F);
  }
  cert.F = F;
  cert.value = value;
  cert.iterations = it;
  cert.fw_gap = gap;
  cert.grad_norm = (project_psd_nuclear_ball(F + grad, radius) - F).norm();
  return cert;
}

LowerBoundCertificate maximize_F(const SpectralTriple& triple, double sigma2, int n, const AscentOptions& opts) {
  return maximize_F_kappa(triple, kappa_of(sigma2, n), opts);
}

nlohmann::json to_json(const LowerBoundCertificate& cert) {
  return {{"F", matrix_to_json(cert.F)},
          {"value", cert.value},
          {"telemetry",
           {{"iterations", cert.iterations},
            {"grad_norm", cert.grad_norm},
            {"fw_gap", cert.fw_gap},
            {"converged", cert.converged}}}};
}

void validate(const VanTreesPrior& prior) {
  const Eigen::Index d = prior.g.size();
  if (prior.U.rows() != d || prior.U.cols() != d || prior.M.rows() != d || prior.M.cols() != d)
    throw InvalidArgument("prior: dimension mismatch");
  if ((prior.U.transpose() * prior.U - Matrix::Identity(d, d)).norm() > 1e-10)
    throw InvalidArgument("prior: U is not orthogonal");
  if (prior.g.norm() > 1.0 + 1e-12) throw InvalidArgument("prior: ||g|| exceeds 1");
  for (Eigen::Index i = 0; i < d; ++i)
    if (prior.g(i) == 0.0) throw DegeneratePrior("prior: g has a zero coordinate");
}

VanTreesPrior prior_from_F(const Matrix& F, const Matrix& M) {
  const EigenDecomposition e = eigh(F);
  VanTreesPrior p;
  p.U = e.eigenvectors;
  p.M = M;
  p.g = e.eigenvalues.unaryExpr([](double v) { return std::clamp(kPi * std::sqrt(std::max(v, 0.0)), 1e-8, 1.0); });
  const double norm = p.g.norm();
  if (norm > 1.0) p.g /= norm;
  return p;
}

Matrix prior_information_matrix(const VanTreesPrior& prior) {
  for (Eigen::Index i = 0; i < prior.g.size(); ++i)
    if (prior.g(i) == 0.0) throw DegeneratePrior("prior_information_matrix: g has a zero coordinate");
  const Matrix Mh = psd_sqrt(prior.M);
  const Vector inv_g2 = prior.g.array().square().inverse().matrix();
  return kPi * kPi * symmetrize(Mh * prior.U * inv_g2.asDiagonal() * prior.U.transpose() * Mh);
}

double prior_density(const VanTreesPrior& prior, const Vector& w) {
  const Matrix Mh = psd_sqrt(prior.M);
  const Vector t = prior.U.transpose() * (Mh * w);
  double dens = Mh.determinant();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double g = prior.g(i);
    if (std::abs(t(i)) > g) return 0.0;
    const double c = std::cos(kPi * t(i) / (2.0 * g));
    dens *= c * c / g;
  }
  return dens;
}

double cos2_cdf(double t, double g) {
  if (t <= -g) return 0.0;
  if (t >= g) return 1.0;
  return t / (2.0 * g) + 0.5 + std::sin(kPi * t / g) / (2.0 * kPi);
}

double cos2_quantile(double u, double g) {
  double lo = -g, hi = g;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * g; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cos2_cdf(mid, g) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Matrix sample_prior(const VanTreesPrior& prior, int n, std::uint64_t seed) {
  validate(prior);
  const Eigen::Index d = prior.g.size();
  const Matrix map = pd_inv_sqrt(prior.M) * prior.U;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix out(d, n);
  Vector t(d);
  for (int k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) t(i) = cos2_quantile(unif(rng), prior.g(i));
    out.col(k) = map * t;
  }
  return out;
}

Matrix fisher_information_gaussian(const Matrix& S, double sigma2, int n) {
  if (sigma2 == 0.0) throw InfiniteInformation("fisher_information_gaussian: sigma2 is zero");
  if (!(sigma2 > 0.0)) throw InvalidArgument("fisher_information_gaussian: sigma2 must be positive");
  return (static_cast<double>(n) / sigma2) * S;
}

}  // namespace covshift
