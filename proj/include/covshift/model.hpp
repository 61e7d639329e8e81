#pragma once

#include "covshift/common.hpp"
#include "covshift/psdlinalg.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace covshift {

enum class NoiseKind { Gaussian, Rademacher };

// One covariate-shift regression problem (S, T, M, w*, sigma^2, psi).
struct ProblemInstance {
  Matrix S;
  Matrix T;
  Matrix M;
  Vector w_star;
  double sigma2 = 1.0;
  double psi = 3.0;
  // Finite-risk constant bounding ||M^{-1/2} S M^{-1/2}||.
  double c_finite = 0.0;
  NoiseKind noise = NoiseKind::Gaussian;
  std::vector<std::string> warnings;

  int d() const { return static_cast<int>(S.rows()); }
};

// Checks shapes, definiteness and ||w*||_M <= 1. Throws on violation.
void validate(const ProblemInstance& inst);

// Whitened pair S' = M^{-1/2} S M^{-1/2}, T' = M^{-1/2} T M^{-1/2}.
struct SpectralTriple {
  Matrix S_prime;
  Matrix T_prime;
  EigenDecomposition eig_S_prime;
  Matrix M_sqrt;
  Matrix M_inv_sqrt;

  int d() const { return static_cast<int>(S_prime.rows()); }
};

SpectralTriple whiten(const ProblemInstance& inst);

enum class WStarPlacement { Spread, Coordinate };

struct PowerLawSpec {
  int d = 100;
  double a = 2.0;
  double s = 1.0;
  double r = 0.0;
  double nu = 0.0;
  std::optional<int> d0;
  double rho = 1.0;
  double sigma2 = 1.0;
  NoiseKind noise = NoiseKind::Gaussian;
  WStarPlacement placement = WStarPlacement::Spread;
  // 1-based coordinate used when placement == Coordinate.
  int w_star_index = 1;
};

void validate(const PowerLawSpec& spec);

// S = diag(i^-a), M = diag(lambda_i^{1-s}), T = diag(i^{-(1+r)a}) or
// diag(max(i, d0)^{-(1+r)a}), or rank one T = w w^T with w_i = i^{-(1+r)a/2}
// when nu == 1. Signs of w* are drawn from the seed.
ProblemInstance make_power_law_instance(const PowerLawSpec& spec, std::uint64_t seed);

// (w - w*)^T T (w - w*).
double excess_risk(const ProblemInstance& inst, const Vector& w);

struct Sample {
  Vector x;
  double y = 0.0;
};

// Gaussian design x = S^{1/2} z, y = x^T w* + eps. Single owner.
class SourceSampler {
 public:
  SourceSampler(const ProblemInstance& inst, std::uint64_t seed);

  Sample next();
  // Fills x and y in place; eps receives the noise draw when non-null.
  void next_into(Vector& x, double& y, double* eps = nullptr);
  // Draws x only.
  void next_x(Vector& x);
  double next_noise();

  int d() const { return static_cast<int>(w_star_.size()); }

 private:
  bool diagonal_;
  Vector sqrt_diag_;
  Matrix sqrt_S_;
  Vector w_star_;
  double sigma_;
  NoiseKind noise_;
  Vector z_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::vector<Sample> sample_source(const ProblemInstance& inst, int n, std::uint64_t seed);

nlohmann::json to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PowerLawSpec& spec);
PowerLawSpec power_law_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& X);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace covshift
