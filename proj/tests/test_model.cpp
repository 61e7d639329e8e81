#include "covshift/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace covshift;

namespace {

PowerLawSpec spec_of(int d, double a, double s, double r) {
  PowerLawSpec p;
  p.d = d;
  p.a = a;
  p.s = s;
  p.r = r;
  return p;
}

ProblemInstance dense_instance(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto gram = [&](double ridge) {
    Matrix G(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) G(i, j) = normal(rng);
    return symmetrize(G * G.transpose() / d + ridge * Matrix::Identity(d, d));
  };
  ProblemInstance inst;
  inst.S = gram(0.2);
  inst.T = gram(0.0);
  inst.M = gram(0.5);
  Vector w(d);
  for (int i = 0; i < d; ++i) w(i) = normal(rng);
  inst.w_star = 0.9 * w / std::sqrt(w.dot(inst.M * w));
  inst.c_finite = spectral_norm(whiten(inst).S_prime);
  return inst;
}

}  // namespace

TEST(PowerLaw, IdentityMetricExample) {
  const ProblemInstance inst = make_power_law_instance(spec_of(4, 2, 1, 0), 0);
  const Eigen::Vector4d s(1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0);
  EXPECT_LE((inst.S.diagonal() - s).norm(), 1e-15);
  EXPECT_LE((inst.M - Matrix::Identity(4, 4)).norm(), 1e-15);
  EXPECT_LE((inst.T - inst.S).norm(), 1e-15);
  EXPECT_TRUE(inst.S.isDiagonal());
}

TEST(PowerLaw, EmergenceTarget) {
  PowerLawSpec p = spec_of(3, 2, 1, 0);
  p.d0 = 2;
  const ProblemInstance inst = make_power_law_instance(p, 0);
  EXPECT_NEAR(inst.T(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(inst.T(1, 1), 0.25, 1e-15);
  EXPECT_NEAR(inst.T(2, 2), 1.0 / 9.0, 1e-15);
}

TEST(PowerLaw, WStarOnShellAndDeterministic) {
  for (double s : {0.5, 1.0, 1.5}) {
    PowerLawSpec p = spec_of(30, 2, s, 0.2);
    p.rho = 0.8;
    const ProblemInstance a = make_power_law_instance(p, 17), b = make_power_law_instance(p, 17);
    EXPECT_NEAR(a.w_star.dot(a.M * a.w_star), 0.64, 1e-12);
    EXPECT_EQ(a.w_star, b.w_star);
    EXPECT_NO_THROW(validate(a));
  }
}

TEST(PowerLaw, CoordinatePlacement) {
  PowerLawSpec p = spec_of(5, 2, 0.5, 0);
  p.placement = WStarPlacement::Coordinate;
  p.w_star_index = 3;
  const ProblemInstance inst = make_power_law_instance(p, 0);
  for (int i = 0; i < 5; ++i)
    if (i != 2) EXPECT_EQ(inst.w_star(i), 0.0);
  EXPECT_NEAR(inst.w_star.dot(inst.M * inst.w_star), 1.0, 1e-12);
}

TEST(PowerLaw, RankOneTarget) {
  PowerLawSpec p = spec_of(6, 2, 1, 0.5);
  p.nu = 1.0;
  const ProblemInstance inst = make_power_law_instance(p, 0);
  EXPECT_EQ(eigh(inst.T).eigenvalues.tail(5).cwiseAbs().maxCoeff() < 1e-14, true);
  EXPECT_NEAR(inst.T(1, 2), std::pow(2.0, -1.5) * std::pow(3.0, -1.5), 1e-15);
}

TEST(PowerLaw, WarningOutsideOptimalityRegion) {
  EXPECT_TRUE(make_power_law_instance(spec_of(5, 2, 1, 0), 0).warnings.empty());
  EXPECT_FALSE(make_power_law_instance(spec_of(5, 2, 0.5, -0.6), 0).warnings.empty());
}

TEST(PowerLaw, InvalidSpecsRejected) {
  EXPECT_THROW(make_power_law_instance(spec_of(5, 1.0, 1, 0), 0), InvalidArgument);
  PowerLawSpec p = spec_of(5, 2, 1, 0);
  p.nu = 0.5;
  EXPECT_THROW(make_power_law_instance(p, 0), InvalidArgument);
}

TEST(PowerLaw, FiniteRiskConstantHolds) {
  for (double s : {0.3, 1.0, 2.0}) {
    const ProblemInstance inst = make_power_law_instance(spec_of(20, 1.5, s, 0), 0);
    EXPECT_LE(spectral_norm(whiten(inst).S_prime), inst.c_finite * (1 + 1e-12));
  }
}

TEST(Whiten, IdentityMetric) {
  ProblemInstance inst = dense_instance(4, 1);
  inst.M = Matrix::Identity(4, 4);
  inst.w_star = inst.w_star.normalized() * 0.5;
  const SpectralTriple t = whiten(inst);
  EXPECT_LE((t.S_prime - inst.S).norm(), 1e-12);
  EXPECT_LE((t.T_prime - inst.T).norm(), 1e-12);
}

TEST(Whiten, Scalar) {
  ProblemInstance inst;
  inst.S = Matrix::Constant(1, 1, 2.0);
  inst.T = Matrix::Constant(1, 1, 1.0);
  inst.M = Matrix::Constant(1, 1, 4.0);
  inst.w_star = Vector::Constant(1, 0.1);
  EXPECT_NEAR(whiten(inst).S_prime(0, 0), 0.5, 1e-15);
}

TEST(Whiten, DiagonalCommuting) {
  const ProblemInstance inst = make_power_law_instance(spec_of(8, 2, 0.5, 0), 0);
  const SpectralTriple t = whiten(inst);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(t.S_prime(i, i), inst.S(i, i) / inst.M(i, i), 1e-14);
  EXPECT_LE((t.S_prime - Matrix(t.S_prime.diagonal().asDiagonal())).norm(), 1e-15);
}

TEST(Whiten, RoundTripAndInvariant) {
  const ProblemInstance inst = dense_instance(6, 2);
  const SpectralTriple t = whiten(inst);
  EXPECT_LE((t.M_sqrt * t.S_prime * t.M_sqrt - inst.S).norm(), 1e-10 * inst.S.norm());
  EXPECT_LE((t.S_prime - t.M_inv_sqrt * inst.S * t.M_inv_sqrt).norm(), 1e-10 * t.S_prime.norm());
  EXPECT_TRUE(is_symmetric(t.S_prime));
}

TEST(Whiten, SingularMetricThrows) {
  ProblemInstance inst = dense_instance(3, 3);
  inst.M = Matrix::Zero(3, 3);
  inst.M(0, 0) = 1.0;
  EXPECT_THROW(whiten(inst), NotPSD);
}

TEST(ExcessRisk, Examples) {
  ProblemInstance inst;
  inst.S = inst.M = Matrix::Identity(1, 1);
  inst.T = Matrix::Constant(1, 1, 2.0);
  inst.w_star = Vector::Constant(1, 0.5);
  EXPECT_DOUBLE_EQ(excess_risk(inst, inst.w_star), 0.0);
  EXPECT_DOUBLE_EQ(excess_risk(inst, Vector::Constant(1, 3.5)), 18.0);
}

TEST(ExcessRisk, MatchesEigenExpansion) {
  const ProblemInstance inst = dense_instance(7, 4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Vector w(7);
  for (int i = 0; i < 7; ++i) w(i) = normal(rng);
  const EigenDecomposition e = eigh(inst.T);
  const Vector c = e.eigenvectors.transpose() * (w - inst.w_star);
  double expansion = 0.0;
  for (int i = 0; i < 7; ++i) expansion += e.eigenvalues(i) * c(i) * c(i);
  EXPECT_NEAR(excess_risk(inst, w), expansion, 1e-12 * std::max(1.0, expansion));
}

TEST(ExcessRisk, ZeroOnKernelOfT) {
  ProblemInstance inst = make_power_law_instance(spec_of(3, 2, 1, 0), 0);
  inst.T(2, 2) = 0.0;
  Vector w = inst.w_star;
  w(2) += 5.0;
  EXPECT_EQ(excess_risk(inst, w), 0.0);
  w(1) += 1e-3;
  EXPECT_GT(excess_risk(inst, w), 0.0);
}

TEST(Sampler, NoiselessResponses) {
  ProblemInstance inst = dense_instance(3, 6);
  inst.sigma2 = 0.0;
  for (const Sample& s : sample_source(inst, 100, 7)) EXPECT_EQ(s.y, s.x.dot(inst.w_star));
}

TEST(Sampler, IdentityCovarianceWithinFivePercent) {
  ProblemInstance inst;
  inst.S = inst.T = inst.M = Matrix::Identity(2, 2);
  inst.w_star = Vector::Zero(2);
  Matrix C = Matrix::Zero(2, 2);
  for (const Sample& s : sample_source(inst, 100000, 8)) C += s.x * s.x.transpose();
  C /= 100000.0;
  EXPECT_LE(spectral_norm(C - Matrix::Identity(2, 2)), 0.05);
}

TEST(Sampler, SecondMomentMatchesDenseS) {
  const ProblemInstance inst = dense_instance(4, 9);
  SourceSampler sampler(inst, 10);
  Vector x(4);
  Matrix C = Matrix::Zero(4, 4);
  const int n = 1000000;
  for (int k = 0; k < n; ++k) {
    sampler.next_x(x);
    C.noalias() += x * x.transpose();
  }
  C /= n;
  EXPECT_LE(spectral_norm(C - inst.S), 0.02 * spectral_norm(inst.S));
}

TEST(Sampler, ReplayIsIdentical) {
  const ProblemInstance inst = dense_instance(3, 11);
  const auto a = sample_source(inst, 50, 12), b = sample_source(inst, 50, 12);
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].x, b[k].x);
    EXPECT_EQ(a[k].y, b[k].y);
  }
}

TEST(Sampler, RademacherNoiseHasFixedMagnitude) {
  ProblemInstance inst = dense_instance(2, 13);
  inst.sigma2 = 0.25;
  inst.noise = NoiseKind::Rademacher;
  for (const Sample& s : sample_source(inst, 200, 14)) EXPECT_NEAR(std::abs(s.y - s.x.dot(inst.w_star)), 0.5, 1e-12);
}

TEST(Json, InstanceRoundTrip) {
  const ProblemInstance inst = dense_instance(3, 15);
  const nlohmann::json j = to_json(inst);
  EXPECT_EQ(j.at("d").get<int>(), 3);
  const ProblemInstance back = instance_from_json(j);
  EXPECT_EQ(back.S, inst.S);
  EXPECT_EQ(back.w_star, inst.w_star);
  EXPECT_EQ(back.sigma2, inst.sigma2);
}

TEST(Json, PowerLawRoundTrip) {
  PowerLawSpec p = spec_of(10, 2.5, 0.5, 0.1);
  p.d0 = 4;
  const nlohmann::json j = to_json(p);
  EXPECT_EQ(j.at("kind").get<std::string>(), "powerlaw");
  const PowerLawSpec back = power_law_from_json(j);
  EXPECT_EQ(back.d, 10);
  EXPECT_EQ(back.a, 2.5);
  EXPECT_EQ(*back.d0, 4);
}

TEST(Validate, RejectsOutsideConstraintSet) {
  ProblemInstance inst = dense_instance(3, 16);
  inst.w_star *= 2.0;
  EXPECT_THROW(validate(inst), InvalidArgument);
}
