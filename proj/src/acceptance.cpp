#include "covshift/experiments.hpp"
#include "covshift/lowerbound.hpp"
#include "covshift/parallel.hpp"
#include "covshift/psdlinalg.hpp"
#include "covshift/riskoracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace covshift {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Matrix random_orthogonal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix G(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) G(i, k) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ();
}

// 1. d = 1 closed form.
CriterionResult check_scalar(int) {
  CriterionResult r{1, "scalar duality closed form", true, "", 0.0};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logu(-2.0, 2.0);
  std::uniform_int_distribution<int> nd(1, 10000);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    ProblemInstance inst;
    inst.S = Matrix::Constant(1, 1, std::pow(10.0, logu(rng)));
    inst.T = Matrix::Constant(1, 1, std::pow(10.0, logu(rng)));
    inst.M = Matrix::Constant(1, 1, std::pow(10.0, logu(rng)));
    inst.w_star = Vector::Constant(1, 1.0 / std::sqrt(inst.M(0, 0)));
    inst.sigma2 = std::pow(10.0, logu(rng));
    const int n = nd(rng);
    const double sp = inst.S(0, 0) / inst.M(0, 0), tp = inst.T(0, 0) / inst.M(0, 0);
    const double exact = tp * inst.sigma2 / (n * sp + kPi * kPi * inst.sigma2);
    const double lower = maximize_F(whiten(inst), inst.sigma2, n).value;
    const double upper = solve_general(make_matching_program(inst, n)).objective;
    worst = std::max({worst, rel_err(lower, exact), rel_err(upper, exact)});
  }
  r.passed = worst <= 1e-8;
  r.detail = "max relative error " + fmt(worst) + " (tol 1e-8, 50 draws)";
  return r;
}

// 2. Duality gap on random instances.
CriterionResult check_duality(int threads) {
  CriterionResult r{2, "duality gap", true, "", 0.0};
  ExperimentSpec spec = default_duality_spec();
  spec.threads = threads;
  const DualityReport rep = run_duality(spec);
  r.passed = rep.rows.size() == 50 && rep.max_gap <= 1e-4;
  r.detail = "max relative gap " + fmt(rep.max_gap) + " over " + std::to_string(rep.rows.size()) +
             " instances (tol 1e-4)";
  return r;
}

// 3. General solver against the diagonal oracle on commuting instances.
CriterionResult check_diagonal(int) {
  CriterionResult r{3, "diagonal oracle equivalence", true, "", 0.0};
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> logu(-2.0, 1.0);
  double worst = 0.0;
  int count = 0;
  for (int d : {2, 3, 5, 8, 12}) {
    for (int rot = 0; rot < 2; ++rot) {
      for (int rep = 0; rep < 2; ++rep) {
        Vector lam(d), m(d), t(d);
        for (int i = 0; i < d; ++i) {
          lam(i) = std::pow(10.0, logu(rng));
          m(i) = std::pow(10.0, logu(rng));
          t(i) = std::pow(10.0, logu(rng));
        }
        const Matrix Qm = rot ? random_orthogonal(d, rng) : Matrix::Identity(d, d);
        ProblemInstance inst;
        inst.S = symmetrize(Qm * lam.asDiagonal() * Qm.transpose());
        inst.M = symmetrize(Qm * m.asDiagonal() * Qm.transpose());
        inst.T = symmetrize(Qm * t.asDiagonal() * Qm.transpose());
        inst.w_star = Qm.col(0) / std::sqrt(m(0));
        inst.sigma2 = 1.0;
        const int n = 100;
        const double b = 1.0 / (kPi * kPi), nu = inst.sigma2 / n;
        const double oracle = solve_diagonal(lam, m, t, b, nu).objective;
        const double general = solve_general(make_matching_program(inst, n)).objective;
        worst = std::max(worst, rel_err(general, oracle));
        ++count;
      }
    }
  }
  r.passed = worst <= 1e-6;
  r.detail = "max relative difference " + fmt(worst) + " over " + std::to_string(count) +
             " commuting instances (tol 1e-6)";
  return r;
}

// 4. gamma == delta reduces to SGD.
CriterionResult check_sgd(int) {
  CriterionResult r{4, "SGD reduction", true, "", 0.0};
  PowerLawSpec pl;
  pl.d = 50;
  const ProblemInstance inst = make_power_law_instance(pl, 4);
  const int n = 1 << 12;
  const double delta = 0.5 / inst.S.trace();
  double worst = 0.0;
  for (auto [alpha, beta] : {std::pair{0.5, 1.0}, std::pair{0.7, 0.4}}) {
    const ASGDConfig cfg = make_config(n, delta, delta, alpha, beta);
    const Vector w_asgd = run(inst, cfg, 99).final_w;
    SourceSampler sampler(inst, 99);
    Vector w = Vector::Zero(pl.d), x(pl.d);
    double y = 0.0;
    for (int stage = 1; stage <= cfg.stages; ++stage) {
      const double step = delta / std::pow(4.0, stage - 1);
      for (int k = 0; k < cfg.stage_len; ++k) {
        sampler.next_into(x, y);
        w -= step * (x.dot(w) - y) * x;
      }
    }
    worst = std::max(worst, (w - w_asgd).cwiseAbs().maxCoeff());
  }
  r.passed = worst <= 1e-12;
  r.detail = "max coordinate drift " + fmt(worst) + " at n = 4096, d = 50 (tol 1e-12)";
  return r;
}

// 5. Full-gradient dynamics against the semi-stochastic bias.
CriterionResult check_population(int) {
  CriterionResult r{5, "population dynamics equivalence", true, "", 0.0};
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> dd(2, 50), ne(4, 10);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int d = dd(rng), n = 1 << ne(rng);
    const ProblemInstance inst = make_random_instance(d, 500 + k);
    const double lmax = max_eigenvalue(inst.S);
    const double beta = std::pow(10.0, -3.0 * u01(rng));
    const double alpha = 1.0 / (1.0 + beta);
    const double delta = (0.2 + 0.7 * u01(rng)) / lmax;
    const double gamma = delta * std::pow(10.0, 2.0 * u01(rng));
    ASGDConfig cfg = make_config(n, delta, gamma, alpha, beta);
    // Keep the first stage stable: lambda_max <= (1 + c) / q.
    const double qmax = (1.0 + cfg.c_mom()) / lmax;
    if (cfg.q() > qmax) cfg = make_config(n, delta, std::max(delta, gamma * 0.9 * qmax / cfg.q()), alpha, beta);
    const double risk = excess_risk(inst, run_full_gradient(inst, cfg).final_w);
    const double semi = semi_stochastic_bias(inst, cfg).total;
    worst = std::max(worst, std::abs(risk - semi) / std::max(semi, 1.0));
  }
  r.passed = worst <= 1e-10;
  r.detail = "max discrepancy " + fmt(worst) + " over 20 configs (tol 1e-10)";
  return r;
}

// 6. Closed-form ASGD bound on the power-law instance.
CriterionResult check_bound(int threads) {
  CriterionResult r{6, "ASGD risk bound", true, "", 0.0};
  ExperimentSpec spec = default_bound_spec();
  spec.threads = threads;
  const BoundReport rep = run_bound_check(spec);
  std::ostringstream os;
  for (const auto& row : rep.rows)
    os << "n=" << row.n << " risk=" << fmt(row.risk.mean) << " bound=" << fmt(row.bound.total) << " k*="
       << row.bound.k_star << "; ";
  r.passed = rep.passed && rep.rows.size() == 3;
  r.detail = os.str();
  return r;
}

// 7. Rate exponent after the log correction.
CriterionResult check_rate(int threads) {
  CriterionResult r{7, "rate exponent", true, "", 0.0};
  ExperimentSpec spec = default_rate_spec();
  spec.threads = threads;
  const RateSweepReport rep = run_rate_sweep(spec);
  const double target = -2.0 / 3.0;
  r.passed = std::abs(rep.asgd_corrected.slope - target) <= 0.15;
  r.detail = "corrected slope " + fmt(rep.asgd_corrected.slope) + " (raw " + fmt(rep.asgd_raw.slope) +
             ", lower bound " + fmt(rep.lower_raw.slope) + "), target -0.6667 +- 0.15";
  return r;
}

// 8. Emergence curve shape.
CriterionResult check_emergence(int threads) {
  CriterionResult r{8, "emergence shape", true, "", 0.0};
  ExperimentSpec spec = default_emergence_spec();
  spec.threads = threads;
  const EmergenceCurve c = run_emergence(spec);
  r.passed = c.plateau_ok && c.drop_ok && c.knee_ok;
  r.detail = "plateau ratio " + fmt(c.plateau_ratio) + " (in [0.5, 2]), drop ratio " + fmt(c.drop_ratio) +
             " (<= 0.25), knee " + std::to_string(c.knee) + " (512 within one octave)";
  return r;
}

struct MomentumDraw {
  double lambda, c, q, delta, gamma;
};

MomentumDraw draw_momentum(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double beta = std::pow(10.0, -4.0 + 4.0 * u01(rng));
  const double alpha = 1.0 / (1.0 + beta);
  const double c = alpha * (1.0 - beta);
  const double delta = std::pow(10.0, -4.0 + 4.0 * u01(rng));
  const double gamma = delta * std::pow(10.0, 3.0 * u01(rng));
  const double q = alpha * delta + (1.0 - alpha) * gamma;
  const double lambda = u01(rng) * std::min(1.0 / delta, (1.0 + c) / q);
  return {lambda, c, q, delta, gamma};
}

// Stationary U from the 4x4 system X = V X V^T - V X G^T - G X V^T + N,
// vectorized row-major. The system is badly conditioned when c is near 1, so
// it is solved in extended precision.
Matrix2 stationary_by_solve(double l, double c, double q, double d) {
  using M2 = Eigen::Matrix<long double, 2, 2>;
  using M4 = Eigen::Matrix<long double, 4, 4>;
  const long double L = l, C = c, Qs = q, D = d;
  M2 V, G, N;
  V << 0.0L, 1.0L, -C, 1.0L + C;
  G << 0.0L, D * L, 0.0L, Qs * L;
  N << D * D, D * Qs, D * Qs, Qs * Qs;
  N *= L;
  auto kron = [](const M2& A, const M2& B) {
    M4 K;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) K.template block<2, 2>(2 * i, 2 * j) = A(i, j) * B;
    return K;
  };
  const M4 Tm = M4::Identity() - kron(V, V) + kron(V, G) + kron(G, V);
  const Eigen::Matrix<long double, 4, 1> rhs(N(0, 0), N(0, 1), N(1, 0), N(1, 1));
  const Eigen::Matrix<long double, 4, 1> x = Tm.fullPivLu().solve(rhs);
  Matrix2 U;
  U << double(x(0)), double(x(1)), double(x(2)), double(x(3));
  return U;
}

// 9. Momentum-matrix property suite.
CriterionResult check_momentum(int) {
  CriterionResult r{9, "momentum property suite", true, "", 0.0};
  std::mt19937_64 rng(99);
  const int draws = 10000;
  int fail_radius = 0, fail_norm = 0, fail_bias = 0, fail_tf = 0, fail_fixed = 0, fail_u = 0;
  int tf_tested = 0, fixed_tested = 0;
  double worst_bias = 0.0;
  for (int k = 0; k < draws; ++k) {
    const MomentumDraw p = draw_momentum(rng);
    const MomentumMatrix2x2 A{p.lambda, p.c, p.q, p.delta};
    const Matrix2 Am = A.entries();
    const auto [x1, x2] = momentum_eigenvalues(A);
    const double rho = std::abs(x2);
    switch (classify_regime(A)) {
      case Regime::I1:
        if (rho > 1.0 - p.lambda * (p.q - p.c * p.delta) / (1.0 - p.c) + 1e-12) ++fail_radius;
        break;
      case Regime::I2:
        if (std::abs(std::abs(x1) - std::sqrt(A.det())) > 1e-12 || std::abs(rho - std::sqrt(A.det())) > 1e-12)
          ++fail_radius;
        break;
      case Regime::I3:
        if (x2.real() > p.c * p.delta / p.q + 1e-12) ++fail_radius;
        break;
    }
    Matrix2 P = Matrix2::Identity();
    for (int j = 1; j <= 50; ++j) {
      P = P * Am;
      if (P.norm() > std::sqrt(6.0) * j * std::pow(rho, j - 1) * (1.0 + 1e-12) + 1e-300) {
        ++fail_norm;
        break;
      }
    }
    Eigen::Vector2d e(1.0, 1.0);
    double mb = 0.0;
    for (int j = 1; j <= 1000; ++j) {
      e = Am * e;
      mb = std::max(mb, std::abs(e(1)));
    }
    worst_bias = std::max(worst_bias, mb);
    if (mb > 2.0 + 1e-12) ++fail_bias;
    if (p.lambda <= (1.0 - p.c) * (1.0 - p.c) / (p.q - p.c * p.delta)) {
      ++tf_tested;
      Matrix2 Pm;
      Pm << 1.0, -1.0, 1.0, -p.c;
      const Matrix2 Tm = Pm.inverse() * Am * Pm;
      if (Eigen::JacobiSVD<Matrix2>(Tm).singularValues()(0) > 1.0 + 1e-12) ++fail_tf;
    }
    const Matrix2 Ue = stationary_U_expanded(p.lambda, p.c, p.q, p.delta);
    const double scale = Ue.cwiseAbs().maxCoeff();
    bool bad_u = false;
    try {
      const StationaryPair sp = stationary_U(p.lambda, p.c, p.q, p.delta);
      ++fixed_tested;
      Matrix2 N;
      N << p.delta * p.delta, p.delta * p.q, p.delta * p.q, p.q * p.q;
      N *= p.lambda;
      const Matrix2 res = Am * sp.Q * Am.transpose() + N - sp.Q;
      if (res.cwiseAbs().maxCoeff() > 1e-10 * sp.Q.cwiseAbs().maxCoeff()) ++fail_fixed;
      if (std::abs(sp.U22 - Ue(1, 1)) > 1e-10 * scale) bad_u = true;
      if (std::abs(sp.U11 - ((1.0 - 2.0 * p.delta * p.lambda) * sp.U22 + p.delta * p.delta * p.lambda)) > 1e-10 * scale)
        bad_u = true;
    } catch (const DivergentStationaryState&) {
    }
    const Matrix2 Us = stationary_by_solve(p.lambda, p.c, p.q, p.delta);
    if ((Ue - Us).cwiseAbs().maxCoeff() > 1e-6 * Us.cwiseAbs().maxCoeff()) bad_u = true;
    if (bad_u) ++fail_u;
  }
  r.passed = fail_radius + fail_norm + fail_bias + fail_tf + fail_fixed + fail_u == 0 && tf_tested > 0 &&
             fixed_tested > 0;
  std::ostringstream os;
  os << draws << " draws; failures radius=" << fail_radius << " norm=" << fail_norm << " bias=" << fail_bias
     << " (max " << fmt(worst_bias) << ") tf=" << fail_tf << "/" << tf_tested << " fixed=" << fail_fixed << "/"
     << fixed_tested << " U=" << fail_u;
  r.detail = os.str();
  return r;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Golub-Welsch.
std::pair<Vector, Vector> gauss_legendre(int m) {
  Matrix J = Matrix::Zero(m, m);
  for (int k = 1; k < m; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  Vector w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

// Fisher information of the prior by tensor quadrature in t-coordinates, with
// the density evaluated in w-coordinates through prior_density.
Matrix quadrature_information(const VanTreesPrior& prior, int m, double& mass) {
  const int d = static_cast<int>(prior.g.size());
  const auto [x, wq] = gauss_legendre(m);
  const Matrix Mh = psd_sqrt(prior.M), Mi = pd_inv_sqrt(prior.M);
  const double jac = 1.0 / Mh.determinant();
  Matrix J = Matrix::Zero(d, d);
  mass = 0.0;
  std::vector<int> idx(static_cast<size_t>(d), 0);
  const long total = static_cast<long>(std::pow(m, d));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Vector t(d), score_t(d);
    double weight = 1.0;
    for (int i = 0; i < d; ++i) {
      const int k = static_cast<int>(rem % m);
      rem /= m;
      const double g = prior.g(i);
      t(i) = g * x(k);
      weight *= g * wq(k);
      score_t(i) = -(kPi / g) * std::tan(kPi * t(i) / (2.0 * g));
    }
    const Vector w = Mi * prior.U * t;
    const double dens = prior_density(prior, w) * jac;
    const Vector score_w = Mh * prior.U * score_t;
    mass += weight * dens;
    J += weight * dens * score_w * score_w.transpose();
  }
  return J;
}

// 10. Prior support and information matrix.
CriterionResult check_prior(int) {
  CriterionResult r{10, "prior support and information", true, "", 0.0};
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Support on a d = 5 instance.
  const ProblemInstance inst = make_random_instance(5, 1011);
  const SpectralTriple tr = whiten(inst);
  const LowerBoundCertificate cert = maximize_F(tr, inst.sigma2, 100);
  const VanTreesPrior prior5 = prior_from_F(cert.F, inst.M);
  const Matrix W = sample_prior(prior5, 1000000, 1012);
  double max_norm = 0.0;
  for (int k = 0; k < W.cols(); ++k) max_norm = std::max(max_norm, std::sqrt(W.col(k).dot(inst.M * W.col(k))));
  const bool support_ok = W.cols() == 1000000 && max_norm <= 1.0 + 1e-12;
  double worst = 0.0, worst_mass = 0.0;
  for (int d : {1, 2}) {
    for (int rep = 0; rep < 3; ++rep) {
      const ProblemInstance base = make_random_instance(d, 1020 + 10 * d + rep);
      VanTreesPrior p;
      p.M = base.M;
      p.U = random_orthogonal(d, rng);
      p.g = Vector(d);
      for (int i = 0; i < d; ++i) p.g(i) = (0.2 + 0.5 * u01(rng)) / std::sqrt(static_cast<double>(d));
      double mass = 0.0;
      const Matrix J = quadrature_information(p, 200, mass);
      const Matrix closed = prior_information_matrix(p);
      worst = std::max(worst, (J - closed).norm() / closed.norm());
      worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    }
  }
  r.passed = support_ok && worst <= 1e-6 && worst_mass <= 1e-6;
  r.detail = "max ||w||_M " + fmt(max_norm) + " over 1e6 draws; quadrature relative error " + fmt(worst) +
             " (tol 1e-6), mass error " + fmt(worst_mass);
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts, std::ostream& out) {
  const std::vector<std::function<CriterionResult(int)>> checks = {
      check_scalar, check_duality, check_diagonal, check_sgd,       check_population,
      check_bound,  check_rate,    check_emergence, check_momentum, check_prior};
  const int threads = resolve_threads(opts.threads);
  std::vector<CriterionResult> results;
  for (size_t k = 0; k < checks.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = checks[k](threads);
    } catch (const std::exception& e) {
      res = CriterionResult{id, "criterion " + std::to_string(id), false, std::string("exception: ") + e.what(), 0.0};
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << (res.passed ? "PASS" : "FAIL") << " [" << res.id << "] " << res.name << ": " << res.detail << " ("
        << fmt(res.seconds) << " s)" << std::endl;
    results.push_back(res);
  }
  return results;
}

}  // namespace covshift
