#pragma once

#include "covshift/estimators.hpp"
#include "covshift/lowerbound.hpp"
#include "covshift/model.hpp"

#include <vector>

namespace covshift {

// min_A bias_coeff ||(I-A)^T T' (I-A)|| + noise_coeff <T', A S'^{-1} A^T>.
struct PrecondProgram {
  SpectralTriple triple;
  double bias_coeff = 1.0;
  double noise_coeff = 0.0;
  double epsilon_reg = 0.0;
};

// Coefficients (1, (2 sigma^2 + 2 psi ||S'||) / n).
PrecondProgram make_upper_bound_program(const ProblemInstance& inst, int n);
// Coefficients (1 / pi^2, sigma^2 / n), the program matched by the lower bound.
PrecondProgram make_matching_program(const ProblemInstance& inst, int n);

struct DiagonalSolution {
  double tau = 0.0;
  Vector a;
  // 0-based indices with t'_i > tau^2.
  std::vector<int> active_set;
  double objective = 0.0;
};

// Diagonal preconditioner for commuting S = diag(lambda), M = diag(m),
// T = diag(t). Minimizes over tau the piecewise quadratic
// bias_coeff tau^2 + noise_coeff sum_{t'_i > tau^2} (1 - tau / sqrt(t'_i))^2 t'_i / s'_i
// with s' = lambda / m and t' = t / m.
DiagonalSolution solve_diagonal(const Vector& lambda, const Vector& m, const Vector& t, double bias_coeff,
                                double noise_coeff);

struct SolverOptions {
  double tol = 1e-6;
  int max_iterations = 10000;
  // Seed the subgradient method with the preconditioner recovered from the
  // lower-bound maximizer.
  bool dual_start = true;
  bool throw_on_max_iterations = false;
};

struct PrecondSolution {
  Matrix A;
  double objective = 0.0;
  double bias_term = 0.0;
  double variance_term = 0.0;
  // Certified lower bound on the optimum and the relative gap to it.
  double lower_value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double epsilon_reg = 0.0;
  bool converged = false;
};

class PrecondMaxIterations : public Error {
 public:
  explicit PrecondMaxIterations(PrecondSolution best)
      : Error("solve_general: iteration cap reached (gap " + std::to_string(best.gap) + ")"),
        best_(std::move(best)) {}
  const PrecondSolution& best() const { return best_; }

 private:
  PrecondSolution best_;
};

// Projected subgradient method on A with Polyak-style diminishing steps,
// certified against the lower-bound ascent.
PrecondSolution solve_general(const PrecondProgram& prog, const SolverOptions& opts = {});

// A = I - (T'_e)^{-1/2} D (T'_e)^{-1/2} S' with
// D = (T'_e)^{1/2} S'^{-1} (I + n S' F / sigma^2)^{-1} (T'_e)^{1/2} and T'_e = T' + eps I.
Matrix recover_A_from_F(const SpectralTriple& triple, const Matrix& F, double sigma2, int n, double epsilon_reg);
Matrix recover_A_from_F_kappa(const SpectralTriple& triple, const Matrix& F, double kappa, double epsilon_reg);

// 1e-8 ||T'|| when T' has an eigenvalue below 1e-10 ||T'||, else 0.
double default_epsilon_reg(const Matrix& T_prime);

nlohmann::json to_json(const PrecondSolution& sol);

}  // namespace covshift
