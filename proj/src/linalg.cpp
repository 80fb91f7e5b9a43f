#include "chfield/linalg.hpp"

#include <cmath>
#include <string>

#include "chfield/errors.hpp"

namespace chfield {

void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw ContractError(std::string(what) + ": matrix is not square");
  const double scale = m.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale || std::isnan(m(i, j)) || std::isnan(m(j, i)))
        throw ContractError(std::string(what) + ": matrix is not symmetric");
}

EigenRange eigen_range(const Matrix& m) {
  if (m.rows() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.cwiseAbs().maxCoeff()};
}

bool is_psd(const Matrix& m, double tol) {
  require_symmetric(m, "is_psd");
  const auto r = eigen_range(m);
  return r.min >= -tol * r.max_abs;
}

Matrix sum_zero_basis(int p) {
  Matrix b = Matrix::Zero(p, std::max(p - 1, 0));
  // Helmert contrasts: column k is (1,...,1,-k,0,...)/sqrt(k(k+1)).
  for (int k = 1; k < p; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) b(i, k - 1) = s;
    b(k, k - 1) = -k * s;
  }
  return b;
}

double max_eigen_sum_zero(const Matrix& m) {
  const int p = static_cast<int>(m.rows());
  if (p < 2) return 0.0;
  const Matrix b = sum_zero_basis(p);
  const Matrix r = b.transpose() * m * b;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r + r.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_cnsd(const Matrix& m, double tol) {
  require_symmetric(m, "is_cnsd");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return max_eigen_sum_zero(m) <= tol * scale;
}

}  // namespace chfield
