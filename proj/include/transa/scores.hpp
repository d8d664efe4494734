#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "transa/matrix.hpp"

namespace transa {

inline constexpr std::size_t kMaxDimension = 1024;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-9;

/// e = h + r - t together with its entry-wise absolute value.
struct LossVector {
  std::vector<double> e;
  std::vector<double> abs_e;
};

namespace detail {

inline void check_same_dim(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  if (h.size() != r.size() || h.size() != t.size())
    throw std::invalid_argument("score: vector dimensions differ");
}

inline void check_metric_shape(const Matrix& w, std::size_t k) {
  if (w.rows() != k || w.cols() != k) throw std::invalid_argument("score: weight matrix shape does not match k");
}

/// x^T W x for symmetric W, reading only the upper triangle.
inline double symmetric_quadratic(std::span<const double> x, const Matrix& w) noexcept {
  const std::size_t k = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = w.row(i);
    double off = 0.0;
    for (std::size_t j = i + 1; j < k; ++j) off += row[j] * x[j];
    s += x[i] * (row[i] * x[i] + 2.0 * off);
  }
  return s;
}

/// out = W x for symmetric W.
inline void symmetric_matvec(std::span<const double> x, const Matrix& w, std::span<double> out) noexcept {
  const std::size_t k = x.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = w.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

}  // namespace detail

inline LossVector loss_vector(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  detail::check_same_dim(h, r, t);
  LossVector lv{std::vector<double>(h.size()), std::vector<double>(h.size())};
  for (std::size_t i = 0; i < h.size(); ++i) {
    lv.e[i] = h[i] + r[i] - t[i];
    lv.abs_e[i] = std::abs(lv.e[i]);
  }
  return lv;
}

/// Throws unless W is square, symmetric within 1e-12 and entry-wise non-negative.
inline void validate_nonnegative_metric(const Matrix& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("weight matrix is not square");
  if (w.rows() > kMaxDimension) throw std::invalid_argument("weight matrix exceeds the maximum dimension");
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      if (!(w(i, j) >= 0.0)) throw std::invalid_argument("weight matrix has a negative or NaN entry");
      if (std::abs(w(i, j) - w(j, i)) > kSymmetryTolerance) throw std::invalid_argument("weight matrix is not symmetric");
    }
}

inline double min_eigenvalue(const Matrix& w) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      w.data().data(), static_cast<Eigen::Index>(w.rows()), static_cast<Eigen::Index>(w.cols()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Throws unless W is square, symmetric within 1e-12 and has no eigenvalue below -1e-9.
inline void validate_psd_metric(const Matrix& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("weight matrix is not square");
  if (w.rows() > kMaxDimension) throw std::invalid_argument("weight matrix exceeds the maximum dimension");
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = i + 1; j < w.cols(); ++j)
      if (std::abs(w(i, j) - w(j, i)) > kSymmetryTolerance) throw std::invalid_argument("weight matrix is not symmetric");
  if (w.rows() > 0 && min_eigenvalue(w) < -kPsdTolerance)
    throw std::invalid_argument("weight matrix is not positive semidefinite");
}

/// ||h + r - t||^2
inline double score_transe(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  detail::check_same_dim(h, r, t);
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double e = h[i] + r[i] - t[i];
    s += e * e;
  }
  return s;
}

/// |e|^T W |e| on a precomputed absolute loss vector, no validation.
inline double transa_quadratic(std::span<const double> abs_e, const Matrix& w) noexcept {
  return detail::symmetric_quadratic(abs_e, w);
}

/// Adaptive metric score |h + r - t|^T W |h + r - t|.
inline double score_transa(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                           const Matrix& w) {
  detail::check_same_dim(h, r, t);
  detail::check_metric_shape(w, h.size());
  validate_nonnegative_metric(w);
  return transa_quadratic(loss_vector(h, r, t).abs_e, w);
}

/// Quadratic score (h + r - t)^T W (h + r - t) with PSD W.
inline double score_psd(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                        const Matrix& w) {
  detail::check_same_dim(h, r, t);
  detail::check_metric_shape(w, h.size());
  validate_psd_metric(w);
  return detail::symmetric_quadratic(loss_vector(h, r, t).e, w);
}

/// sqrt(|e|^T W |e|), a norm on e whenever W is symmetric and non-negative.
inline double induced_norm(std::span<const double> e, const Matrix& w) {
  detail::check_metric_shape(w, e.size());
  validate_nonnegative_metric(w);
  std::vector<double> a(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) a[i] = std::abs(e[i]);
  return std::sqrt(transa_quadratic(a, w));
}

struct TripleGradient {
  std::vector<double> head;
  std::vector<double> relation;
  std::vector<double> tail;
};

namespace detail {

inline TripleGradient from_loss_gradient(std::vector<double> de) {
  TripleGradient g;
  g.head = de;
  g.relation = de;
  g.tail = std::move(de);
  for (double& v : g.tail) v = -v;
  return g;
}

inline double sign(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// Writes df/de = 2 sign(e) (W |e|) into `out`; sign(0) is 0.
inline void transa_loss_gradient(std::span<const double> e, std::span<const double> abs_e, const Matrix& w,
                                 std::span<double> out) noexcept {
  detail::symmetric_matvec(abs_e, w, out);
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = 2.0 * detail::sign(e[i]) * out[i];
}

inline TripleGradient grad_transa(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                                  const Matrix& w) {
  detail::check_same_dim(h, r, t);
  detail::check_metric_shape(w, h.size());
  validate_nonnegative_metric(w);
  const auto lv = loss_vector(h, r, t);
  std::vector<double> de(h.size());
  transa_loss_gradient(lv.e, lv.abs_e, w, de);
  return detail::from_loss_gradient(std::move(de));
}

inline TripleGradient grad_transe(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  auto lv = loss_vector(h, r, t);
  for (double& v : lv.e) v *= 2.0;
  return detail::from_loss_gradient(std::move(lv.e));
}

inline TripleGradient grad_psd(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                               const Matrix& w) {
  detail::check_same_dim(h, r, t);
  detail::check_metric_shape(w, h.size());
  validate_psd_metric(w);
  const auto lv = loss_vector(h, r, t);
  std::vector<double> de(h.size());
  detail::symmetric_matvec(lv.e, w, de);
  for (double& v : de) v *= 2.0;
  return detail::from_loss_gradient(std::move(de));
}

}  // namespace transa
