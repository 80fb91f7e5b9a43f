#pragma once

#include <Eigen/Dense>

namespace chfield {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws ContractError unless m is square and symmetric to 1e-12 relative.
void require_symmetric(const Matrix& m, const char* what);

// Smallest and largest-magnitude eigenvalues of a symmetric matrix.
struct EigenRange {
  double min;
  double max_abs;
};
EigenRange eigen_range(const Matrix& m);

bool is_psd(const Matrix& m, double tol = 1e-10);

// x'mx <= tol * scale(m) for every x summing to zero.
bool is_cnsd(const Matrix& m, double tol = 1e-10);

// Largest eigenvalue of m restricted to the sum-zero subspace.
double max_eigen_sum_zero(const Matrix& m);

// p x (p-1) orthonormal basis of {x : sum x = 0}.
Matrix sum_zero_basis(int p);

}  // namespace chfield
