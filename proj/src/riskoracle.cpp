#include "covshift/riskoracle.hpp"

#include "covshift/psdlinalg.hpp"

#include <cmath>
#include <limits>

namespace covshift {

Matrix2 MomentumMatrix2x2::entries() const {
  Matrix2 A;
  A << 0.0, 1.0 - delta * lambda, -c, 1.0 + c - q * lambda;
  return A;
}

std::pair<std::complex<double>, std::complex<double>> momentum_eigenvalues(const MomentumMatrix2x2& A) {
  const double tr = A.trace();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * A.det(), 0.0));
  std::complex<double> x1 = 0.5 * (tr - disc);
  std::complex<double> x2 = 0.5 * (tr + disc);
  if (std::abs(x1) > std::abs(x2)) std::swap(x1, x2);
  return {x1, x2};
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::I1:
      return "I1";
    case Regime::I2:
      return "I2";
    case Regime::I3:
      return "I3";
  }
  return "?";
}

RegimeBreakpoints regime_breakpoints(double c, double q, double delta) {
  const double a = std::sqrt(std::max(q - c * delta, 0.0));
  const double b = std::sqrt(std::max(c * (q - delta), 0.0));
  const double num = (1.0 - c) * (1.0 - c);
  RegimeBreakpoints bp;
  bp.lambda_dagger = num / ((a + b) * (a + b));
  bp.lambda_ddagger = a == b ? std::numeric_limits<double>::infinity() : num / ((a - b) * (a - b));
  return bp;
}

Regime classify_regime(const MomentumMatrix2x2& A) {
  const RegimeBreakpoints bp = regime_breakpoints(A.c, A.q, A.delta);
  if (A.lambda <= bp.lambda_dagger) return Regime::I1;
  if (A.lambda < bp.lambda_ddagger) return Regime::I2;
  return Regime::I3;
}

Matrix2 StationaryPair::U() const {
  Matrix2 u;
  u << U11, U12, U12, U22;
  return u;
}

namespace {

double stationary_denominator(double lambda, double c, double q, double delta) {
  const double D = 1.0 - c * c + c * lambda * (q + c * delta);
  if (!(D > 0.0)) throw InvalidArgument("stationary_U: need 1 - c^2 + c lambda (q + c delta) > 0");
  return D;
}

}  // namespace

Matrix2 stationary_U_expanded(double lambda, double c, double q, double delta) {
  const double D2 = 2.0 * stationary_denominator(lambda, c, q, delta);
  const double qc = q - c * delta;
  const double u11 = ((1.0 + c - c * delta * lambda) * qc - 2.0 * delta * lambda * qc + 2.0 * delta * delta * lambda) / D2;
  const double u12 = ((1.0 + c - lambda * (q + c * delta)) * qc + delta * lambda * (q + c * delta)) / D2;
  const double u22 = ((1.0 + c - c * delta * lambda) * qc + 2.0 * c * q * delta * lambda) / D2;
  Matrix2 u;
  u << u11, u12, u12, u22;
  return u;
}

StationaryPair stationary_U(double lambda, double c, double q, double delta) {
  const double D = stationary_denominator(lambda, c, q, delta);
  const Matrix2 ex = stationary_U_expanded(lambda, c, q, delta);
  StationaryPair sp;
  sp.U22 = delta / 2.0 + (1.0 + c) * (q - delta) / (2.0 * D);
  sp.U11 = ex(0, 0);
  sp.U12 = ex(0, 1);
  const double denom = 1.0 - sp.U22 * lambda;
  if (!(denom > 0.0)) throw DivergentStationaryState("stationary_U: U22 lambda >= 1");
  sp.Q = sp.U() / denom;
  return sp;
}

namespace {

struct Basis {
  Vector lambda;
  Matrix U;
  Matrix T_tilde;
};

Basis s_basis(const ProblemInstance& inst) {
  const EigenDecomposition e = eigh(inst.S);
  return {e.eigenvalues, e.eigenvectors, symmetrize(e.eigenvectors.transpose() * inst.T * e.eigenvectors)};
}

}  // namespace

DirectionalRisk semi_stochastic_bias(const ProblemInstance& inst, const ASGDConfig& cfg) {
  const Basis b = s_basis(inst);
  const int d = inst.d();
  const Vector xi = -(b.U.transpose() * inst.w_star);
  const double c = cfg.c_mom();
  Vector first(d);
  for (int i = 0; i < d; ++i) {
    Eigen::Vector2d e(xi(i), xi(i));
    for (int stage = 1; stage <= cfg.stages; ++stage) {
      const Matrix2 A = MomentumMatrix2x2{b.lambda(i), c, cfg.stage_q(stage), cfg.stage_delta(stage)}.entries();
      for (int k = 0; k < cfg.stage_len; ++k) e = A * e;
    }
    first(i) = e(0);
  }
  DirectionalRisk out;
  out.per_direction = b.T_tilde.diagonal().cwiseProduct(first.cwiseAbs2());
  out.total = first.dot(b.T_tilde * first);
  return out;
}

DirectionalRisk semi_stochastic_variance(const ProblemInstance& inst, const ASGDConfig& cfg) {
  const Basis b = s_basis(inst);
  const int d = inst.d();
  const double c = cfg.c_mom();
  DirectionalRisk out;
  out.per_direction = Vector::Zero(d);
  if (inst.sigma2 == 0.0) return out;
  for (int i = 0; i < d; ++i) {
    Matrix2 C = Matrix2::Zero();
    for (int stage = 1; stage <= cfg.stages; ++stage) {
      const double ds = cfg.stage_delta(stage), qs = cfg.stage_q(stage);
      const Matrix2 A = MomentumMatrix2x2{b.lambda(i), c, qs, ds}.entries();
      Matrix2 N;
      N << ds * ds, ds * qs, ds * qs, qs * qs;
      N *= inst.sigma2 * b.lambda(i);
      for (int k = 0; k < cfg.stage_len; ++k) C = A * C * A.transpose() + N;
    }
    out.per_direction(i) = b.T_tilde(i, i) * C(0, 0);
  }
  out.total = out.per_direction.sum();
  return out;
}

double semi_stochastic_variance_bound(const ProblemInstance& inst, const ASGDConfig& cfg) {
  const Basis b = s_basis(inst);
  const int d = inst.d();
  const int k = effective_dimension_momentum(cfg, b.lambda, cfg.n);
  const double K = cfg.stage_len;
  const double c = cfg.c_mom();
  const double eff = (cfg.q() - c * cfg.delta) / (1.0 - c);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < k; ++i) head += b.T_tilde(i, i) / (2.0 * K * b.lambda(i));
  for (int i = k; i < d; ++i) tail += b.lambda(i) * b.T_tilde(i, i);
  return inst.sigma2 * (head + (128.0 / 15.0) * K * eff * eff * tail);
}

std::vector<DirectionDiagnostic> direction_diagnostics(const ProblemInstance& inst, const ASGDConfig& cfg) {
  const Basis b = s_basis(inst);
  const DirectionalRisk bias = semi_stochastic_bias(inst, cfg);
  const DirectionalRisk var = semi_stochastic_variance(inst, cfg);
  std::vector<DirectionDiagnostic> rows;
  for (int i = 0; i < inst.d(); ++i) {
    DirectionDiagnostic r;
    r.i = i + 1;
    r.lambda = b.lambda(i);
    r.t_ii = b.T_tilde(i, i);
    r.bias = bias.per_direction(i);
    r.variance = var.per_direction(i);
    r.regime = classify_regime({b.lambda(i), cfg.c_mom(), cfg.q(), cfg.delta});
    rows.push_back(r);
  }
  return rows;
}

}  // namespace covshift
