#pragma once

#include "covshift/model.hpp"

#include <cstdint>
#include <numbers>

namespace covshift {

inline constexpr double kTraceBudget = 1.0 / (std::numbers::pi * std::numbers::pi);

class DegeneratePrior : public Error {
 public:
  using Error::Error;
};

class InfiniteInformation : public Error {
 public:
  using Error::Error;
};

// <T', F^{1/2} (I + kappa F^{1/2} S' F^{1/2})^{-1} F^{1/2}> with kappa = n / sigma^2.
// Equals <T', (F^{-1} + kappa S')^{-1}> for positive definite F.
double eval_lower_objective(const SpectralTriple& triple, const Matrix& F, double sigma2, int n);
double eval_lower_objective_kappa(const SpectralTriple& triple, const Matrix& F, double kappa);

// Gradient H^T T' H with H = (I + kappa F S')^{-1}.
Matrix lower_objective_gradient(const SpectralTriple& triple, const Matrix& F, double kappa);

struct AscentOptions {
  // Stop once the Frank-Wolfe duality gap is below tol * value. A stall at
  // working precision still counts as converged if the gap is below 1e3 * tol * value.
  double tol = 1e-10;
  int max_iterations = 5000;
  double radius = kTraceBudget;
  double armijo = 1e-4;
};

struct LowerBoundCertificate {
  Matrix F;
  double value = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  // Upper bound on sup - value implied by concavity.
  double fw_gap = 0.0;
  bool converged = false;
};

class MaxIterations : public Error {
 public:
  MaxIterations(const std::string& what, double gap) : Error(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

// Projected gradient ascent over {F >= 0, tr F <= radius}. Returns the best
// certificate found; converged is false if the iteration cap was hit.
LowerBoundCertificate maximize_F(const SpectralTriple& triple, double sigma2, int n,
                                 const AscentOptions& opts = {});
LowerBoundCertificate maximize_F_kappa(const SpectralTriple& triple, double kappa, const AscentOptions& opts = {});

nlohmann::json to_json(const LowerBoundCertificate& cert);

// Product prior prod_i cos^2(pi t_i / (2 g_i)) / g_i on the box |t_i| <= g_i,
// mapped to w = M^{-1/2} U t.
struct VanTreesPrior {
  Matrix U;
  Vector g;
  Matrix M;
};

void validate(const VanTreesPrior& prior);

// U = eigenvectors of F, g_i = pi sqrt(eig_i(F)) clamped to (0, 1]. Coordinates
// with g_i below 1e-8 are raised to 1e-8.
VanTreesPrior prior_from_F(const Matrix& F, const Matrix& M);

// pi^2 M^{1/2} U diag(1 / g_i^2) U^T M^{1/2}.
Matrix prior_information_matrix(const VanTreesPrior& prior);

// Density of the prior at w.
double prior_density(const VanTreesPrior& prior, const Vector& w);

// Inverse CDF of cos^2(pi t / (2 g)) / g on [-g, g] by bisection.
double cos2_quantile(double u, double g);
double cos2_cdf(double t, double g);

// Columns are i.i.d. prior draws.
Matrix sample_prior(const VanTreesPrior& prior, int n, std::uint64_t seed);

// n S / sigma^2.
Matrix fisher_information_gaussian(const Matrix& S, double sigma2, int n);

}  // namespace covshift
