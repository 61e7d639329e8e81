#include "covshift/psdlinalg.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace covshift;

namespace {

Matrix random_symmetric(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix X(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
  return symmetrize(X);
}

// Largest |eigenvalue| by power iteration on X^2.
double power_iteration_norm(const Matrix& X) {
  Vector v = Vector::Ones(X.rows()).normalized();
  for (int k = 0; k < 5000; ++k) v = (X * (X * v)).normalized();
  return std::sqrt(v.dot(X * (X * v)));
}

}  // namespace

TEST(Eigh, IdentityHasUnitEigenvalues) {
  const EigenDecomposition e = eigh(Matrix::Identity(3, 3));
  EXPECT_TRUE(e.eigenvalues.isApprox(Vector::Ones(3)));
  EXPECT_LE((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(Eigh, DiagonalSortedDescending) {
  Matrix X = Vector(Eigen::Vector3d(3, 1, 2)).asDiagonal();
  const EigenDecomposition e = eigh(X);
  EXPECT_DOUBLE_EQ(e.eigenvalues(0), 3.0);
  EXPECT_DOUBLE_EQ(e.eigenvalues(1), 2.0);
  EXPECT_DOUBLE_EQ(e.eigenvalues(2), 1.0);
  Matrix P = Matrix::Zero(3, 3);
  P(0, 0) = P(2, 1) = P(1, 2) = 1.0;
  EXPECT_LE((e.eigenvectors - P).norm(), 1e-12);
}

TEST(Eigh, GramEigenvaluesMatchSingularValues) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix G(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) G(i, j) = normal(rng);
  const EigenDecomposition e = eigh(symmetrize(G.transpose() * G));
  const Vector sv = Eigen::BDCSVD<Matrix>(G).singularValues();
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(e.eigenvalues(i), sv(i) * sv(i), 1e-9);
}

TEST(Eigh, ReconstructionAndOrthogonality) {
  std::mt19937_64 rng(2);
  for (int d : {1, 2, 7, 30}) {
    const Matrix X = random_symmetric(d, rng);
    const EigenDecomposition e = eigh(X);
    EXPECT_LE((e.reconstruct() - X).norm(), 1e-9 * std::max(1.0, X.norm()));
    EXPECT_LE((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(d, d)).norm(), 1e-9 * std::sqrt(d));
    for (int i = 1; i < d; ++i) EXPECT_GE(e.eigenvalues(i - 1), e.eigenvalues(i));
  }
}

TEST(Eigh, SignConventionIsDeterministic) {
  std::mt19937_64 rng(3);
  const Matrix X = random_symmetric(6, rng);
  const EigenDecomposition e = eigh(X);
  for (int k = 0; k < 6; ++k) {
    int i = 0;
    while (std::abs(e.eigenvectors(i, k)) == 0.0) ++i;
    EXPECT_GT(e.eigenvectors(i, k), 0.0);
  }
  const EigenDecomposition e2 = eigh(X);
  EXPECT_EQ(e.eigenvectors, e2.eigenvectors);
}

TEST(Symmetrize, ProducesExactSymmetry) {
  Matrix X(2, 2);
  X << 1.0, 2.0, 3.0, 4.0;
  const Matrix S = symmetrize(X);
  EXPECT_TRUE(is_symmetric(S));
  EXPECT_DOUBLE_EQ(S(0, 1), 2.5);
}

TEST(PsdSqrt, DiagonalRoots) {
  const Matrix X = Vector(Eigen::Vector2d(4, 9)).asDiagonal();
  const Matrix R = psd_sqrt(X);
  EXPECT_NEAR(R(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(R(1, 1), 3.0, 1e-12);
  EXPECT_NEAR(R(0, 1), 0.0, 1e-12);
}

TEST(PsdSqrt, Identity) { EXPECT_LE((psd_sqrt(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm(), 1e-12); }

TEST(PsdSqrt, RankDeficient) {
  Matrix X(2, 2);
  X << 1, 1, 1, 1;
  const Matrix expected = Matrix::Constant(2, 2, 0.5 * std::sqrt(2.0));
  EXPECT_LE((psd_sqrt(X) - expected).norm(), 1e-12);
}

TEST(PsdSqrt, NegativeEigenvalueThrows) {
  Matrix X = Vector(Eigen::Vector2d(1, -0.5)).asDiagonal();
  EXPECT_THROW(psd_sqrt(X), NotPSD);
  try {
    psd_sqrt(X);
  } catch (const NotPSD& e) {
    EXPECT_DOUBLE_EQ(e.eigenvalue(), -0.5);
  }
}

TEST(PsdSqrt, SmallNegativeEigenvalueIsClamped) {
  Matrix X = Vector(Eigen::Vector2d(1, -1e-14)).asDiagonal();
  const Matrix R = psd_sqrt(X);
  EXPECT_NEAR(R(1, 1), 0.0, 1e-15);
}

TEST(PsdSqrt, SquareMatchesClampedInput) {
  std::mt19937_64 rng(4);
  for (int d : {2, 5, 20}) {
    Matrix X = random_symmetric(d, rng);
    X = X * X.transpose();
    const Matrix R = psd_sqrt(X);
    EXPECT_LE((R * R - X).norm(), 1e-8 * std::max(1.0, X.norm()));
    EXPECT_GE(min_eigenvalue(R), -1e-12);
  }
}

TEST(PdInverse, InverseAndInverseSqrt) {
  std::mt19937_64 rng(5);
  Matrix X = random_symmetric(6, rng);
  X = X * X.transpose() + Matrix::Identity(6, 6);
  EXPECT_LE((pd_inverse(X) * X - Matrix::Identity(6, 6)).norm(), 1e-10);
  const Matrix R = pd_inv_sqrt(X);
  EXPECT_LE((R * X * R - Matrix::Identity(6, 6)).norm(), 1e-10);
  EXPECT_THROW(pd_inv_sqrt(Matrix::Zero(2, 2)), NotPSD);
}

TEST(Norms, SpectralNormMatchesPowerIteration) {
  std::mt19937_64 rng(6);
  for (int d : {2, 6, 15}) {
    const Matrix X = random_symmetric(d, rng);
    EXPECT_NEAR(spectral_norm(X), power_iteration_norm(X), 1e-10 * spectral_norm(X));
  }
}

TEST(Norms, NuclearAndOperatorNorms) {
  const Matrix X = Vector(Eigen::Vector3d(2, -3, 0.5)).asDiagonal();
  EXPECT_DOUBLE_EQ(nuclear_norm(X), 5.5);
  EXPECT_DOUBLE_EQ(spectral_norm(X), 3.0);
  EXPECT_DOUBLE_EQ(max_eigenvalue(X), 2.0);
  EXPECT_DOUBLE_EQ(min_eigenvalue(X), -3.0);
  Matrix A(2, 2);
  A << 0, 2, 0, 0;
  EXPECT_NEAR(operator_norm(A), 2.0, 1e-14);
}

TEST(CappedSimplex, KnownProjections) {
  EXPECT_TRUE(project_capped_simplex(Eigen::Vector2d(0.2, 0.3), 1.0).isApprox(Eigen::Vector2d(0.2, 0.3)));
  const Vector p = project_capped_simplex(Eigen::Vector3d(1.0, 1.0, -1.0), 1.0);
  EXPECT_NEAR(p(0), 0.5, 1e-14);
  EXPECT_NEAR(p(1), 0.5, 1e-14);
  EXPECT_NEAR(p(2), 0.0, 1e-14);
}

TEST(NuclearBall, FeasibleInputUnchanged) {
  const Matrix X = Vector(Eigen::Vector2d(0.01, 0.02)).asDiagonal();
  const double radius = 1.0 / (std::numbers::pi * std::numbers::pi);
  EXPECT_LE((project_psd_nuclear_ball(X, radius) - X).norm(), 1e-15);
}

TEST(NuclearBall, DiagonalExampleMatchesGridSearch) {
  const Matrix X = Vector(Eigen::Vector2d(2, -1)).asDiagonal();
  const Matrix P = project_psd_nuclear_ball(X, 1.0);
  double best = 1e300, ba = 0, bb = 0;
  const int grid = 400;
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; i + j <= grid; ++j) {
      const double a = double(i) / grid, b = double(j) / grid;
      const double dist = (a - 2) * (a - 2) + (b + 1) * (b + 1);
      if (dist < best) {
        best = dist;
        ba = a;
        bb = b;
      }
    }
  EXPECT_NEAR(ba, 1.0, 1e-12);
  EXPECT_NEAR(bb, 0.0, 1e-12);
  EXPECT_NEAR(P(0, 0), ba, 1e-12);
  EXPECT_NEAR(P(1, 1), bb, 1e-12);
  EXPECT_NEAR(P(0, 1), 0.0, 1e-12);
}

TEST(NuclearBall, Idempotent) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const Matrix X = random_symmetric(4, rng);
    const Matrix P = project_psd_nuclear_ball(X, 1.0);
    EXPECT_LE((project_psd_nuclear_ball(P, 1.0) - P).norm(), 1e-12);
  }
}

TEST(NuclearBall, NearestAmongRandomFeasiblePoints) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int d = 4;
  const double radius = 0.7;
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix X = random_symmetric(d, rng);
    const Matrix P = project_psd_nuclear_ball(X, radius);
    EXPECT_GE(min_eigenvalue(P), -1e-12);
    EXPECT_LE(P.trace(), radius + 1e-10);
    const double dist = (P - X).norm();
    for (int k = 0; k < 1000; ++k) {
      Matrix G = random_symmetric(d, rng);
      G = G * G.transpose();
      const Matrix Fk = G * (radius * u01(rng) / G.trace());
      EXPECT_LE(dist, (Fk - X).norm() + 1e-12);
    }
  }
}
