#pragma once

#include "covshift/model.hpp"

#include <cstdint>
#include <vector>

namespace covshift {

// Spectral-norm bias term, trace variance term and their weighted sum.
struct UpperObjective {
  double total = 0.0;
  double bias_term = 0.0;
  double variance_term = 0.0;
};

// bias_coeff * ||(I-A)^T T' (I-A)|| + noise_coeff * <T', A S'^{-1} A^T>.
// bias_term and variance_term are reported with their coefficients applied.
UpperObjective eval_upper_objective(const SpectralTriple& triple, const Matrix& A, double noise_coeff,
                                    double bias_coeff = 1.0);

// (2 sigma^2 + 2 psi ||S'||) / n.
double upper_bound_noise_coeff(const ProblemInstance& inst, const SpectralTriple& triple, int n);
// sigma^2 / n.
double matching_noise_coeff(const ProblemInstance& inst, int n);

struct Preconditioner {
  Matrix A;
  double objective_value = 0.0;
  double noise_coeff = 0.0;
  int n = 0;
};

Preconditioner make_preconditioner(const SpectralTriple& triple, const Matrix& A, double noise_coeff, int n);

// w_A = M^{-1/2} A M^{1/2} S^{-1} m where m is the first moment (1/n) sum x_i y_i.
Vector estimate_from_moment(const ProblemInstance& inst, const Matrix& A, const Vector& moment);
Vector estimate(const ProblemInstance& inst, const Matrix& A, const std::vector<Sample>& samples);

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  int seeds = 0;
};

RiskEstimate summarize(const std::vector<double>& values);

// Monte Carlo estimate of E||w_A - w*||_T^2 over the given seeds. Results are
// reduced in seed order.
RiskEstimate mc_risk(const ProblemInstance& inst, const Matrix& A, int n, const std::vector<std::uint64_t>& seeds,
                     int threads = 1);

}  // namespace covshift
