#include "covshift/psdlinalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace covshift {

Matrix EigenDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

Matrix symmetrize(const Matrix& X) {
  if (X.rows() != X.cols()) throw InvalidArgument("symmetrize: matrix is not square");
  return 0.5 * (X + X.transpose());
}

bool is_symmetric(const Matrix& X, double tol) {
  if (X.rows() != X.cols()) return false;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.cols(); ++j)
      if (std::abs(X(i, j) - X(j, i)) > tol) return false;
  return true;
}

EigenDecomposition eigh(const Matrix& X) {
  if (X.rows() != X.cols() || X.rows() == 0)
    throw InvalidArgument("eigh: expected a nonempty square matrix");
  const Matrix Xs = symmetrize(X);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Xs);
  if (solver.info() != Eigen::Success) {
    double residual = std::numeric_limits<double>::infinity();
    if (solver.eigenvectors().allFinite()) {
      residual = (solver.eigenvectors() * solver.eigenvalues().asDiagonal() *
                      solver.eigenvectors().transpose() -
                  Xs)
                     .norm();
    }
    throw EigenNonConvergence(residual);
  }
  const Eigen::Index d = Xs.rows();
  std::vector<Eigen::Index> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  // Eigen returns ascending order; reverse it, stable on ties.
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });
  EigenDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    out.eigenvalues(k) = solver.eigenvalues()(order[static_cast<size_t>(k)]);
    Vector v = solver.eigenvectors().col(order[static_cast<size_t>(k)]);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (v(i) != 0.0) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    out.eigenvectors.col(k) = v;
  }
  return out;
}

double spectral_norm(const Matrix& X) {
  const Vector ev = eigh(X).eigenvalues;
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double operator_norm(const Matrix& X) {
  if (X.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(X);
  return svd.singularValues()(0);
}

double nuclear_norm(const Matrix& X) { return eigh(X).eigenvalues.cwiseAbs().sum(); }

double min_eigenvalue(const Matrix& X) {
  const Vector ev = eigh(X).eigenvalues;
  return ev(ev.size() - 1);
}

double max_eigenvalue(const Matrix& X) { return eigh(X).eigenvalues(0); }

double default_clamp_tol(const Matrix& X) { return 1e-10 * spectral_norm(X); }

namespace {

double resolve_tol(const EigenDecomposition& e, double tol) {
  if (tol >= 0.0) return tol;
  const Vector& ev = e.eigenvalues;
  return 1e-10 * std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

Matrix clamp_psd(const Matrix& X, double tol) {
  const EigenDecomposition e = eigh(X);
  tol = resolve_tol(e, tol);
  const double lo = e.eigenvalues(e.eigenvalues.size() - 1);
  if (lo < -tol) throw NotPSD("clamp_psd: matrix is not PSD", lo);
  return spectral_apply(e, [](double v) { return std::max(v, 0.0); });
}

Matrix psd_sqrt(const Matrix& X, double tol) {
  const EigenDecomposition e = eigh(X);
  tol = resolve_tol(e, tol);
  const double lo = e.eigenvalues(e.eigenvalues.size() - 1);
  if (lo < -tol) throw NotPSD("psd_sqrt: matrix is not PSD", lo);
  return spectral_apply(e, [](double v) { return std::sqrt(std::max(v, 0.0)); });
}

Matrix pd_inv_sqrt(const Matrix& X, double tol) {
  const EigenDecomposition e = eigh(X);
  tol = resolve_tol(e, tol);
  const double lo = e.eigenvalues(e.eigenvalues.size() - 1);
  if (lo <= tol) throw NotPSD("pd_inv_sqrt: matrix is not positive definite", lo);
  return spectral_apply(e, [](double v) { return 1.0 / std::sqrt(v); });
}

Matrix pd_inverse(const Matrix& X, double tol) {
  const EigenDecomposition e = eigh(X);
  tol = resolve_tol(e, tol);
  const double lo = e.eigenvalues(e.eigenvalues.size() - 1);
  if (lo <= tol) throw NotPSD("pd_inverse: matrix is not positive definite", lo);
  return spectral_apply(e, [](double v) { return 1.0 / v; });
}

Vector project_capped_simplex(const Vector& v, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("project_capped_simplex: radius must be positive");
  Vector u = v.cwiseMax(0.0);
  if (u.sum() <= radius) return u;
  // Water-filling: find theta with sum(max(v - theta, 0)) == radius.
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (size_t k = 0; k < s.size(); ++k) {
    cumsum += s[k];
    const double t = (cumsum - radius) / static_cast<double>(k + 1);
    if (k + 1 == s.size() || s[k + 1] <= t) {
      theta = t;
      break;
    }
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Matrix project_psd_nuclear_ball(const Matrix& X, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("project_psd_nuclear_ball: radius must be positive");
  const EigenDecomposition e = eigh(X);
  const Vector p = project_capped_simplex(e.eigenvalues, radius);
  return symmetrize(e.eigenvectors * p.asDiagonal() * e.eigenvectors.transpose());
}

}  // namespace covshift
