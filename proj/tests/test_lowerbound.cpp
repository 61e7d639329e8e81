#include "covshift/estimators.hpp"
#include "covshift/lowerbound.hpp"
#include "covshift/precond.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace covshift;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemInstance dense_instance(int d, std::uint64_t seed, double sigma2 = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto gram = [&](double ridge) {
    Matrix G(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) G(i, j) = normal(rng);
    return symmetrize(G * G.transpose() / d + ridge * Matrix::Identity(d, d));
  };
  ProblemInstance inst;
  inst.S = gram(0.3);
  inst.T = gram(0.05);
  inst.M = gram(0.5);
  Vector w(d);
  for (int i = 0; i < d; ++i) w(i) = normal(rng);
  inst.w_star = w / std::sqrt(w.dot(inst.M * w));
  inst.sigma2 = sigma2;
  inst.c_finite = spectral_norm(whiten(inst).S_prime);
  return inst;
}

ProblemInstance scalar_instance(double s, double t, double m, double sigma2) {
  ProblemInstance inst;
  inst.S = Matrix::Constant(1, 1, s);
  inst.T = Matrix::Constant(1, 1, t);
  inst.M = Matrix::Constant(1, 1, m);
  inst.w_star = Vector::Constant(1, 0.5 / std::sqrt(m));
  inst.sigma2 = sigma2;
  return inst;
}

Matrix random_feasible(int d, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Matrix G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = normal(rng);
  const Matrix P = G * G.transpose();
  return symmetrize(P * (radius * u01(rng) / P.trace()));
}

}  // namespace

TEST(LowerObjective, ZeroPrior) {
  const ProblemInstance inst = dense_instance(3, 1);
  EXPECT_EQ(eval_lower_objective(whiten(inst), Matrix::Zero(3, 3), 1.0, 10), 0.0);
}

TEST(LowerObjective, ScalarFormula) {
  const ProblemInstance inst = scalar_instance(2.0, 3.0, 1.0, 0.5);
  const double f = 0.07, n = 10;
  const double expected = 3.0 * f * 0.5 / (0.5 + n * 2.0 * f);
  EXPECT_NEAR(eval_lower_objective(whiten(inst), Matrix::Constant(1, 1, f), 0.5, 10), expected, 1e-15);
  const double at_budget = 3.0 * 0.5 / (kPi * kPi * 0.5 + n * 2.0);
  EXPECT_NEAR(eval_lower_objective(whiten(inst), Matrix::Constant(1, 1, 1 / (kPi * kPi)), 0.5, 10), at_budget, 1e-15);
}

TEST(LowerObjective, LargeNoiseLimit) {
  const ProblemInstance inst = dense_instance(3, 2);
  const SpectralTriple t = whiten(inst);
  const double c = 0.02;
  const double v = eval_lower_objective(t, c * Matrix::Identity(3, 3), 1e12, 1);
  EXPECT_NEAR(v, c * t.T_prime.trace(), 1e-9 * c * t.T_prime.trace());
}

TEST(LowerObjective, MatchesInverseFormForDefiniteF) {
  const ProblemInstance inst = dense_instance(4, 3, 0.7);
  const SpectralTriple t = whiten(inst);
  std::mt19937_64 rng(4);
  const Matrix F = random_feasible(4, kTraceBudget, rng) + 1e-3 * Matrix::Identity(4, 4);
  const double n = 25;
  const double expected = (t.T_prime * (F.inverse() + (n / 0.7) * t.S_prime).inverse()).trace();
  EXPECT_NEAR(eval_lower_objective(t, F, 0.7, 25), expected, 1e-12 * expected);
}

TEST(LowerObjective, ConcaveInF) {
  const ProblemInstance inst = dense_instance(4, 5);
  const SpectralTriple t = whiten(inst);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const Matrix F1 = random_feasible(4, kTraceBudget, rng), F2 = random_feasible(4, kTraceBudget, rng);
    const double mid = eval_lower_objective(t, 0.5 * (F1 + F2), 1.0, 30);
    const double avg = 0.5 * (eval_lower_objective(t, F1, 1.0, 30) + eval_lower_objective(t, F2, 1.0, 30));
    EXPECT_GE(mid, avg - 1e-10);
  }
}

TEST(LowerObjective, GradientMatchesFiniteDifferences) {
  const ProblemInstance inst = dense_instance(3, 7);
  const SpectralTriple t = whiten(inst);
  std::mt19937_64 rng(8);
  const Matrix F = random_feasible(3, kTraceBudget, rng) + 1e-2 * Matrix::Identity(3, 3);
  const double kappa = 12.0;
  const Matrix G = lower_objective_gradient(t, F, kappa);
  const Matrix D = random_feasible(3, 1.0, rng);
  const double h = 1e-6;
  const double fd = (eval_lower_objective_kappa(t, F + h * D, kappa) - eval_lower_objective_kappa(t, F - h * D, kappa)) /
                    (2.0 * h);
  EXPECT_NEAR((G.array() * D.array()).sum(), fd, 1e-7 * std::abs(fd));
}

TEST(MaximizeF, ScalarSaturatesBudget) {
  const ProblemInstance inst = scalar_instance(0.8, 1.7, 2.0, 0.3);
  const int n = 40;
  const LowerBoundCertificate c = maximize_F(whiten(inst), inst.sigma2, n);
  const double sp = 0.4, tp = 0.85;
  EXPECT_NEAR(c.F(0, 0), kTraceBudget, 1e-12);
  EXPECT_NEAR(c.value, tp * 0.3 / (n * sp + kPi * kPi * 0.3), 1e-10);
}

TEST(MaximizeF, NullTarget) {
  ProblemInstance inst = dense_instance(3, 9);
  inst.T = Matrix::Zero(3, 3);
  EXPECT_EQ(maximize_F(whiten(inst), 1.0, 10).value, 0.0);
}

TEST(MaximizeF, DiagonalPowerLawMatchesOracle) {
  PowerLawSpec p;
  p.d = 3;
  const ProblemInstance inst = make_power_law_instance(p, 0);
  const int n = 50;
  const LowerBoundCertificate c = maximize_F(whiten(inst), inst.sigma2, n);
  const double oracle =
      solve_diagonal(inst.S.diagonal(), inst.M.diagonal(), inst.T.diagonal(), kTraceBudget, inst.sigma2 / n).objective;
  EXPECT_NEAR(c.value, oracle, 1e-4 * oracle);
}

TEST(MaximizeF, CertificateInvariants) {
  for (int d : {2, 6, 12}) {
    const ProblemInstance inst = dense_instance(d, 10 + d);
    const SpectralTriple t = whiten(inst);
    const LowerBoundCertificate c = maximize_F(t, inst.sigma2, 100);
    EXPECT_TRUE(c.converged);
    EXPECT_GE(min_eigenvalue(c.F), -1e-10);
    EXPECT_LE(c.F.trace(), kTraceBudget + 1e-10);
    EXPECT_NEAR(c.value, eval_lower_objective(t, c.F, inst.sigma2, 100), 1e-12 * c.value);
    EXPECT_LE(c.fw_gap, 1e-7 * c.value);
  }
}

TEST(MaximizeF, MonotoneInBudget) {
  const ProblemInstance inst = dense_instance(4, 20);
  const SpectralTriple t = whiten(inst);
  double prev = 0.0;
  for (double radius : {0.01, 0.03, 0.06, kTraceBudget, 0.2}) {
    AscentOptions o;
    o.radius = radius;
    const double v = maximize_F(t, 1.0, 50, o).value;
    EXPECT_GE(v, prev - 1e-12);
    prev = v;
  }
}

TEST(MaximizeF, JsonTelemetry) {
  const ProblemInstance inst = dense_instance(2, 21);
  const nlohmann::json j = to_json(maximize_F(whiten(inst), 1.0, 10));
  EXPECT_TRUE(j.contains("F"));
  EXPECT_TRUE(j.contains("value"));
  EXPECT_TRUE(j.contains("telemetry"));
}

TEST(Prior, InformationMatrixExamples) {
  VanTreesPrior p{Matrix::Identity(1, 1), Vector::Ones(1), Matrix::Identity(1, 1)};
  EXPECT_NEAR(prior_information_matrix(p)(0, 0), kPi * kPi, 1e-14);
  VanTreesPrior q{Matrix::Identity(2, 2), Eigen::Vector2d(0.5, 1.0 / 3.0), Matrix::Identity(2, 2)};
  const Matrix J = prior_information_matrix(q);
  EXPECT_NEAR(J(0, 0), 4 * kPi * kPi, 1e-12);
  EXPECT_NEAR(J(1, 1), 9 * kPi * kPi, 1e-12);
  EXPECT_NEAR(J(0, 1), 0.0, 1e-14);
}

TEST(Prior, DegenerateWidthThrows) {
  VanTreesPrior p{Matrix::Identity(2, 2), Eigen::Vector2d(0.5, 0.0), Matrix::Identity(2, 2)};
  EXPECT_THROW(prior_information_matrix(p), DegeneratePrior);
}

TEST(Prior, OneDimensionalQuadrature) {
  // Composite Gauss-Legendre on the defining integral of (d/dt log p)^2 p over [-g, g];
  // nodes are interior, where the score is finite.
  const double g = 0.7;
  const VanTreesPrior p{Matrix::Identity(1, 1), Vector::Constant(1, g), Matrix::Identity(1, 1)};
  const int m = 40, panels = 8;
  Matrix J = Matrix::Zero(m, m);
  for (int k = 1; k < m; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  const Vector x = es.eigenvalues();
  const Vector w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  double sum = 0.0;
  const double width = 2.0 * g / panels;
  for (int panel = 0; panel < panels; ++panel) {
    const double mid = -g + (panel + 0.5) * width;
    for (int k = 0; k < m; ++k) {
      const double t = mid + 0.5 * width * x(k);
      const double dens = prior_density(p, Vector::Constant(1, t));
      const double score = -(kPi / g) * std::tan(kPi * t / (2.0 * g));
      sum += 0.5 * width * w(k) * dens * score * score;
    }
  }
  EXPECT_NEAR(sum, kPi * kPi / (g * g), 1e-6);
}

TEST(Prior, CdfAndQuantile) {
  EXPECT_DOUBLE_EQ(cos2_cdf(-1.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(cos2_cdf(0.0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(cos2_cdf(0.6, 0.5), 1.0);
  for (double u : {0.01, 0.3, 0.5, 0.77, 0.999}) EXPECT_NEAR(cos2_cdf(cos2_quantile(u, 0.8), 0.8), u, 1e-12);
}

TEST(Prior, SamplesStayInsideConstraintSet) {
  const ProblemInstance inst = dense_instance(3, 22);
  const VanTreesPrior p = prior_from_F(maximize_F(whiten(inst), 1.0, 20).F, inst.M);
  EXPECT_LE(p.g.norm(), 1.0 + 1e-12);
  const Matrix W = sample_prior(p, 20000, 23);
  for (int k = 0; k < W.cols(); ++k) EXPECT_LE(W.col(k).dot(inst.M * W.col(k)), 1.0 + 1e-12);
}

TEST(Prior, SampleMeanIsZero) {
  const ProblemInstance inst = dense_instance(2, 24);
  const VanTreesPrior p = prior_from_F(0.05 * Matrix::Identity(2, 2), inst.M);
  const int n = 100000;
  const Matrix W = sample_prior(p, n, 25);
  const Vector mean = W.rowwise().mean();
  for (int i = 0; i < 2; ++i) {
    const double sd = std::sqrt((W.row(i).array() - mean(i)).square().sum() / (n - 1));
    EXPECT_LE(std::abs(mean(i)), 4.0 * sd / std::sqrt(n));
  }
}

TEST(Prior, SecondMomentUnitWidth) {
  const VanTreesPrior p{Matrix::Identity(1, 1), Vector::Ones(1), Matrix::Identity(1, 1)};
  const int n = 200000;
  const Matrix W = sample_prior(p, n, 26);
  const Eigen::ArrayXd sq = W.row(0).array().square();
  const double m2 = sq.mean();
  const double se = std::sqrt((sq - m2).square().sum() / (n - 1) / n);
  EXPECT_NEAR(m2, 1.0 / 3.0 - 2.0 / (kPi * kPi), 3.0 * se);
}

TEST(Prior, FromFMatchesInformationFamily) {
  const ProblemInstance inst = dense_instance(3, 27);
  std::mt19937_64 rng(28);
  const Matrix F = random_feasible(3, kTraceBudget, rng) + 1e-3 * Matrix::Identity(3, 3);
  const VanTreesPrior p = prior_from_F(F, inst.M);
  const Matrix Mh = psd_sqrt(inst.M);
  EXPECT_LE((prior_information_matrix(p) - Mh * F.inverse() * Mh).norm(), 1e-8 * (Mh * F.inverse() * Mh).norm());
}

TEST(Fisher, GaussianInformation) {
  const Matrix S = Vector(Eigen::Vector2d(1.0, 3.0)).asDiagonal();
  EXPECT_EQ(fisher_information_gaussian(S, 1.0, 1), S);
  EXPECT_EQ(fisher_information_gaussian(S, 1.0, 2), 2.0 * S);
  EXPECT_DOUBLE_EQ(fisher_information_gaussian(Matrix::Constant(1, 1, 2.0), 4.0, 8)(0, 0), 4.0);
  EXPECT_THROW(fisher_information_gaussian(S, 0.0, 1), InfiniteInformation);
}

TEST(Prior, BayesRiskSandwich) {
  // Bayes risk of the optimal linear estimator under the implied prior stays above the certificate.
  for (int d : {1, 2, 3}) {
    const ProblemInstance inst = dense_instance(d, 30 + d, 0.5);
    const SpectralTriple t = whiten(inst);
    const int n = 20;
    const LowerBoundCertificate cert = maximize_F(t, inst.sigma2, n);
    const PrecondSolution sol = solve_general(make_matching_program(inst, n));
    const VanTreesPrior prior = prior_from_F(cert.F, inst.M);
    const int draws = 4000;
    const Matrix W = sample_prior(prior, draws, 40 + d);
    std::vector<double> risks;
    for (int k = 0; k < draws; ++k) {
      ProblemInstance draw = inst;
      draw.w_star = W.col(k);
      risks.push_back(excess_risk(draw, estimate(draw, sol.A, sample_source(draw, n, 1000 + k))));
    }
    const RiskEstimate r = summarize(risks);
    EXPECT_GE(r.mean, cert.value - 3.0 * r.std_error) << "d=" << d;
  }
}
