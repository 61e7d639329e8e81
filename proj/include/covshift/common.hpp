#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace covshift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPSD : public Error {
 public:
  NotPSD(const std::string& what, double eigenvalue)
      : Error(what + " (eigenvalue " + std::to_string(eigenvalue) + ")"),
        eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class EigenNonConvergence : public Error {
 public:
  explicit EigenNonConvergence(double residual)
      : Error("eigensolver did not converge (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace covshift
