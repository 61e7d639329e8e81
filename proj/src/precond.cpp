#include "covshift/precond.hpp"

#include "covshift/psdlinalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace covshift {

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

bool is_diagonal(const Matrix& X) {
  return (X - Matrix(X.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

void validate(const PrecondProgram& prog) {
  if (!(prog.bias_coeff > 0.0) || !(prog.noise_coeff > 0.0))
    throw InvalidArgument("preconditioner program: coefficients must be positive");
  if (!(prog.epsilon_reg >= 0.0)) throw InvalidArgument("preconditioner program: epsilon_reg must be nonnegative");
}

}  // namespace

PrecondProgram make_upper_bound_program(const ProblemInstance& inst, int n) {
  PrecondProgram p;
  p.triple = whiten(inst);
  p.bias_coeff = 1.0;
  p.noise_coeff = upper_bound_noise_coeff(inst, p.triple, n);
  return p;
}

PrecondProgram make_matching_program(const ProblemInstance& inst, int n) {
  PrecondProgram p;
  p.triple = whiten(inst);
  p.bias_coeff = 1.0 / kPi2;
  p.noise_coeff = matching_noise_coeff(inst, n);
  return p;
}

DiagonalSolution solve_diagonal(const Vector& lambda, const Vector& m, const Vector& t, double bias_coeff,
                                double noise_coeff) {
  const Eigen::Index d = lambda.size();
  if (m.size() != d || t.size() != d) throw InvalidArgument("solve_diagonal: dimension mismatch");
  if ((lambda.array() <= 0.0).any() || (m.array() <= 0.0).any() || (t.array() < 0.0).any())
    throw InvalidArgument("solve_diagonal: need lambda, m > 0 and t >= 0");
  if (!(bias_coeff > 0.0) || !(noise_coeff >= 0.0))
    throw InvalidArgument("solve_diagonal: need bias_coeff > 0 and noise_coeff >= 0");

  const Vector sp = lambda.cwiseQuotient(m);
  const Vector tp = t.cwiseQuotient(m);
  const Vector root = tp.cwiseSqrt();

  auto objective = [&](double tau) {
    double v = bias_coeff * tau * tau;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (tp(i) > tau * tau) {
        const double a = 1.0 - tau / root(i);
        v += noise_coeff * a * a * tp(i) / sp(i);
      }
    }
    return v;
  };

  std::vector<double> breaks{0.0};
  for (Eigen::Index i = 0; i < d; ++i)
    if (tp(i) > 0.0) breaks.push_back(root(i));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  double best_tau = breaks.back();
  double best_val = objective(best_tau);
  auto consider = [&](double tau) {
    const double v = objective(tau);
    if (v < best_val) {
      best_val = v;
      best_tau = tau;
    }
  };
  const double scale = std::max(1.0, breaks.back());
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    consider(lo);
    consider(golden_section(objective, lo, hi, 1e-12 * scale));
    // The objective is quadratic on the segment; its stationary point is exact.
    double num = 0.0, den = bias_coeff;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (tp(i) > 0.0 && root(i) >= hi) {
        const double w = noise_coeff * tp(i) / sp(i);
        num += w / root(i);
        den += w / tp(i);
      }
    }
    consider(std::clamp(num / den, lo, hi));
  }

  DiagonalSolution sol;
  sol.tau = best_tau;
  sol.a = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (tp(i) > best_tau * best_tau) {
      sol.a(i) = std::clamp(1.0 - best_tau / root(i), 0.0, 1.0);
      sol.active_set.push_back(static_cast<int>(i));
    }
  }
  double bias = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double e = 1.0 - sol.a(i);
    bias = std::max(bias, tp(i) * e * e);
    var += tp(i) * sol.a(i) * sol.a(i) / sp(i);
  }
  sol.objective = bias_coeff * bias + noise_coeff * var;
  return sol;
}

double default_epsilon_reg(const Matrix& T_prime) {
  const double norm = spectral_norm(T_prime);
  if (norm == 0.0) return 0.0;
  return min_eigenvalue(T_prime) < 1e-10 * norm ? 1e-8 * norm : 0.0;
}

Matrix recover_A_from_F_kappa(const SpectralTriple& triple, const Matrix& F, double kappa, double epsilon_reg) {
  const int d = triple.d();
  if (F.rows() != d || F.cols() != d) throw InvalidArgument("recover_A_from_F: dimension mismatch");
  const Matrix I = Matrix::Identity(d, d);
  const Matrix Te = triple.T_prime + epsilon_reg * I;
  const Matrix Th = psd_sqrt(Te);
  const Matrix Thi = pd_inv_sqrt(Te);
  const Matrix X = (I + kappa * triple.S_prime * F).partialPivLu().inverse();
  const Matrix Delta_half = Th * pd_inverse(triple.S_prime) * X * Th;
  return I - Thi * Delta_half * Thi * triple.S_prime;
}

Matrix recover_A_from_F(const SpectralTriple& triple, const Matrix& F, double sigma2, int n, double epsilon_reg) {
  if (!(sigma2 > 0.0) || n < 1) throw InvalidArgument("recover_A_from_F: need sigma2 > 0 and n >= 1");
  return recover_A_from_F_kappa(triple, F, n / sigma2, epsilon_reg);
}

PrecondSolution solve_general(const PrecondProgram& prog, const SolverOptions& opts) {
  validate(prog);
  const SpectralTriple& tr = prog.triple;
  const int d = tr.d();
  const Matrix I = Matrix::Identity(d, d);
  const double s_min = min_eigenvalue(tr.S_prime);
  if (s_min <= 0.0) throw NotPSD("solve_general: S' is not positive definite", s_min);

  PrecondSolution sol;
  const double t_norm = spectral_norm(tr.T_prime);
  if (t_norm == 0.0) {
    sol.A = Matrix::Zero(d, d);
    sol.converged = true;
    return sol;
  }
  sol.epsilon_reg = prog.epsilon_reg > 0.0 ? prog.epsilon_reg : default_epsilon_reg(tr.T_prime);

  // Rescaled to the matching form: objective = pi^2 b [ ||.||/pi^2 + (nu/(pi^2 b)) <.> ].
  const double kappa = kPi2 * prog.bias_coeff / prog.noise_coeff;
  const double scale = kPi2 * prog.bias_coeff;
  AscentOptions aopts;
  aopts.tol = 1e-3 * opts.tol;
  const LowerBoundCertificate cert = maximize_F_kappa(tr, kappa, aopts);
  sol.lower_value = scale * cert.value;

  Matrix best_A = Matrix::Zero(d, d);
  double best = eval_upper_objective(tr, best_A, prog.noise_coeff, prog.bias_coeff).total;
  auto consider = [&](const Matrix& A) {
    const double v = eval_upper_objective(tr, A, prog.noise_coeff, prog.bias_coeff).total;
    if (v < best || (v == best && A.norm() < best_A.norm())) {
      best = v;
      best_A = A;
    }
  };
  if (is_diagonal(tr.S_prime) && is_diagonal(tr.T_prime)) {
    const DiagonalSolution ds =
        solve_diagonal(tr.S_prime.diagonal(), Vector::Ones(d), tr.T_prime.diagonal(), prog.bias_coeff, prog.noise_coeff);
    consider(Matrix(ds.a.asDiagonal()));
  }
  if (opts.dual_start) consider(recover_A_from_F_kappa(tr, cert.F, kappa, sol.epsilon_reg));

  auto rel_gap = [&](double v) {
    return sol.lower_value > 0.0 ? (v - sol.lower_value) / sol.lower_value : v;
  };

  const Matrix S_inv = pd_inverse(tr.S_prime);
  Matrix A = best_A;
  int it = 0;
  for (; it < opts.max_iterations && rel_gap(best) > opts.tol; ++it) {
    const Matrix IA = I - A;
    const EigenDecomposition e = eigh(symmetrize(IA.transpose() * tr.T_prime * IA));
    const Vector v = e.eigenvectors.col(0);
    Matrix g = -2.0 * prog.bias_coeff * tr.T_prime * IA * v * v.transpose();
    g += 2.0 * prog.noise_coeff * tr.T_prime * A * S_inv;
    const double gn2 = g.squaredNorm();
    if (gn2 == 0.0) break;
    const double value = eval_upper_objective(tr, A, prog.noise_coeff, prog.bias_coeff).total;
    // Polyak step toward the certified lower value, damped by 1/sqrt(k).
    const double c0 = std::max(value - sol.lower_value, 1e-3 * opts.tol * t_norm);
    A -= (c0 / std::sqrt(it + 1.0) / gn2) * g;
    consider(A);
  }

  const UpperObjective obj = eval_upper_objective(tr, best_A, prog.noise_coeff, prog.bias_coeff);
  sol.A = best_A;
  sol.objective = obj.total;
  sol.bias_term = obj.bias_term;
  sol.variance_term = obj.variance_term;
  sol.gap = rel_gap(obj.total);
  sol.iterations = it;
  sol.converged = sol.gap <= opts.tol;
  if (!sol.converged && opts.throw_on_max_iterations) throw PrecondMaxIterations(sol);
  return sol;
}

nlohmann::json to_json(const PrecondSolution& sol) {
  return {{"A", matrix_to_json(sol.A)},
          {"objective", sol.objective},
          {"bias_term", sol.bias_term},
          {"variance_term", sol.variance_term},
          {"gap", sol.gap},
          {"lower_value", sol.lower_value},
          {"iterations", sol.iterations},
          {"epsilon_reg", sol.epsilon_reg},
          {"converged", sol.converged}};
}

}  // namespace covshift
