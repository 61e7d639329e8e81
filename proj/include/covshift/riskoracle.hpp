#pragma once

#include "covshift/asgd.hpp"
#include "covshift/model.hpp"

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace covshift {

class DivergentStationaryState : public Error {
 public:
  using Error::Error;
};

using Matrix2 = Eigen::Matrix2d;

// A(lambda) = [[0, 1 - delta lambda], [-c, 1 + c - q lambda]].
struct MomentumMatrix2x2 {
  double lambda = 0.0;
  double c = 0.0;
  double q = 0.0;
  double delta = 0.0;

  Matrix2 entries() const;
  double trace() const { return 1.0 + c - q * lambda; }
  double det() const { return c * (1.0 - delta * lambda); }
};

// Roots of x^2 - tr x + det, ordered so that |x1| <= |x2|.
std::pair<std::complex<double>, std::complex<double>> momentum_eigenvalues(const MomentumMatrix2x2& A);

enum class Regime { I1, I2, I3 };

std::string regime_name(Regime r);

struct RegimeBreakpoints {
  double lambda_dagger = 0.0;
  double lambda_ddagger = 0.0;
};

// (1-c)^2 / (sqrt(q - c delta) +- sqrt(c (q - delta)))^2. lambda_ddagger is
// +inf when the two square roots coincide.
RegimeBreakpoints regime_breakpoints(double c, double q, double delta);
Regime classify_regime(const MomentumMatrix2x2& A);

struct StationaryPair {
  double U11 = 0.0;
  double U12 = 0.0;
  double U22 = 0.0;
  Matrix2 Q = Matrix2::Zero();

  Matrix2 U() const;
};

// Closed-form stationary state of one stage. U22 uses the compact formula,
// U11 and U12 the expanded ones; Q = U / (1 - U22 lambda).
StationaryPair stationary_U(double lambda, double c, double q, double delta);

// All three entries from the expanded formulas.
Matrix2 stationary_U_expanded(double lambda, double c, double q, double delta);

struct DirectionalRisk {
  Vector per_direction;
  double total = 0.0;
};

// Population bias: per eigendirection of S the error pair (w - w*, u - w*)
// evolves by the deterministic stage matrices from (1, 1) (w0 - w*)_i.
DirectionalRisk semi_stochastic_bias(const ProblemInstance& inst, const ASGDConfig& cfg);

// Per-direction recursion C <- A C A^T + sigma^2 lambda [[d^2, d q], [d q, q^2]],
// weighted by the diagonal of T in the eigenbasis of S.
DirectionalRisk semi_stochastic_variance(const ProblemInstance& inst, const ASGDConfig& cfg);

// sigma^2 [sum_{i<=k*} t_ii / (2 K lambda_i) + (128/15) K ((q - c delta)/(1 - c))^2 sum_{i>k*} lambda_i t_ii].
double semi_stochastic_variance_bound(const ProblemInstance& inst, const ASGDConfig& cfg);

struct DirectionDiagnostic {
  int i = 0;
  double lambda = 0.0;
  double t_ii = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  Regime regime = Regime::I1;
};

std::vector<DirectionDiagnostic> direction_diagnostics(const ProblemInstance& inst, const ASGDConfig& cfg);

}  // namespace covshift
