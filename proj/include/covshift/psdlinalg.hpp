#pragma once

#include "covshift/common.hpp"

namespace covshift {

// Eigenvalues sorted non-increasing, eigenvectors stored as columns.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const;
};

// Returns (X + X^T) / 2.
Matrix symmetrize(const Matrix& X);

bool is_symmetric(const Matrix& X, double tol = 0.0);

// Symmetric eigendecomposition. Each eigenvector is signed so that its first
// nonzero component is positive.
EigenDecomposition eigh(const Matrix& X);

// Spectral norm of a symmetric matrix: max |eigenvalue|.
double spectral_norm(const Matrix& X);

// Largest singular value of an arbitrary matrix.
double operator_norm(const Matrix& X);

// Sum of |eigenvalues| of a symmetric matrix.
double nuclear_norm(const Matrix& X);

double min_eigenvalue(const Matrix& X);
double max_eigenvalue(const Matrix& X);

// Default clamp tolerance 1e-10 * ||X||.
double default_clamp_tol(const Matrix& X);

// Applies f to the eigenvalues of the symmetric matrix X.
template <class F>
Matrix spectral_apply(const EigenDecomposition& e, F&& f) {
  Vector v = e.eigenvalues.unaryExpr(f);
  return e.eigenvectors * v.asDiagonal() * e.eigenvectors.transpose();
}

// Eigenvalues below -tol raise NotPSD; the rest are clamped at zero.
// A negative tol selects default_clamp_tol(X).
Matrix clamp_psd(const Matrix& X, double tol = -1.0);
Matrix psd_sqrt(const Matrix& X, double tol = -1.0);

// Inverse square root of a positive definite matrix. Eigenvalues at or below
// tol raise NotPSD.
Matrix pd_inv_sqrt(const Matrix& X, double tol = -1.0);
Matrix pd_inverse(const Matrix& X, double tol = -1.0);

// Euclidean projection of v onto {u >= 0, sum(u) <= radius}.
Vector project_capped_simplex(const Vector& v, double radius);

// Frobenius projection onto {P >= 0, tr P <= radius}.
Matrix project_psd_nuclear_ball(const Matrix& X, double radius);

}  // namespace covshift
