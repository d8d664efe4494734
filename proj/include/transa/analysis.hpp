#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "transa/matrix.hpp"

namespace transa {

inline constexpr double kPivotTolerance = 1e-10;

/// W = L^T diag(d) L with L unit lower triangular.
struct LdlFactors {
  Matrix lower;
  std::vector<double> weights;
  bool perturbed = false;  // some pivot was below 1e-10 in magnitude and was pushed away from zero
};

/// Factorizes a symmetric matrix as L^T D L. Eliminates from the last index
/// down, so L^T is the unit upper factor of a U D U^T factorization. No
/// pivoting.
inline LdlFactors ldl_decompose(const Matrix& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("ldl_decompose: matrix is not square");
  const std::size_t k = w.rows();
  Matrix upper = Matrix::identity(k);  // U = L^T
  std::vector<double> d(k, 0.0);
  bool perturbed = false;
  for (std::size_t jj = k; jj-- > 0;) {
    double pivot = w(jj, jj);
    for (std::size_t m = jj + 1; m < k; ++m) pivot -= upper(jj, m) * upper(jj, m) * d[m];
    if (std::abs(pivot) < kPivotTolerance) {
      pivot += pivot < 0.0 ? -kPivotTolerance : kPivotTolerance;
      perturbed = true;
    }
    d[jj] = pivot;
    for (std::size_t i = 0; i < jj; ++i) {
      double s = w(i, jj);
      for (std::size_t m = jj + 1; m < k; ++m) s -= upper(i, m) * upper(jj, m) * d[m];
      upper(i, jj) = s / pivot;
    }
  }
  return {transpose(upper), std::move(d), perturbed};
}

/// L^T D L
inline Matrix ldl_reconstruct(const LdlFactors& f) {
  const std::size_t k = f.weights.size();
  Matrix dl(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) dl(i, j) = f.weights[i] * f.lower(i, j);
  return multiply(transpose(f.lower), dl);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// (max - median) / median of the diagonal weights; nullopt when the median
/// is at or below 1e-12.
inline std::optional<double> weight_difference(const std::vector<double>& weights) {
  if (weights.empty()) return std::nullopt;
  const double med = median(weights);
  if (med <= 1e-12) return std::nullopt;
  const double mx = *std::max_element(weights.begin(), weights.end());
  return (mx - med) / med;
}

inline std::optional<double> weight_difference(const LdlFactors& f) { return weight_difference(f.weights); }

struct PcaProjection {
  Matrix coords;      // n x dims
  Matrix components;  // dims x k, unit rows
  std::vector<double> explained_variance;
  bool zero_variance = false;
};

/// Centers the rows of `vectors` and projects them onto the leading
/// principal directions. Each direction's largest-magnitude coordinate is
/// made positive so the output does not depend on the eigensolver's signs.
inline PcaProjection pca_project(const Matrix& vectors, std::size_t dims = 2) {
  const std::size_t n = vectors.rows(), k = vectors.cols();
  if (n < 2) throw std::invalid_argument("pca_project: need at least two vectors");
  if (dims == 0) throw std::invalid_argument("pca_project: dims must be positive");

  Eigen::MatrixXd x(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) x(i, j) = vectors(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);

  PcaProjection out;
  out.coords = Matrix(n, dims);
  out.components = Matrix(dims, k);
  out.explained_variance.assign(dims, 0.0);
  const double total = cov.trace();
  if (!(total > 0.0)) {
    out.zero_variance = true;
    return out;
  }
  for (std::size_t c = 0; c < dims && c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(k - 1 - c);  // eigenvalues ascend
    Eigen::VectorXd dir = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    dir.cwiseAbs().maxCoeff(&arg);
    if (dir(arg) < 0.0) dir = -dir;
    out.explained_variance[c] = std::max(0.0, solver.eigenvalues()(col));
    for (std::size_t j = 0; j < k; ++j) out.components(c, j) = dir(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd proj = x * dir;
    for (std::size_t i = 0; i < n; ++i) out.coords(i, c) = proj(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace transa
