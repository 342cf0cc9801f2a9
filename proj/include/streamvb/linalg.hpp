#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace streamvb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a precision matrix cannot be factorized even after jitter.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse of a symmetric positive-definite matrix via LLT. On failure one
/// retry is made with 1e-10 * mean(diag) added to the diagonal.
inline Mat spd_inverse(const Mat& precision, const char* where = "spd_inverse") {
  const auto n = precision.rows();
  if (n == 0) return Mat(0, 0);
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().allFinite()) {
    const double jitter = 1e-10 * precision.diagonal().mean();
    Mat bumped = precision;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() != Eigen::Success || !llt.matrixLLT().allFinite()) {
      throw NumericalError(std::string(where) + ": precision matrix is not positive definite (dimension " +
                           std::to_string(n) + ", mean diagonal " + std::to_string(precision.diagonal().mean()) +
                           ")");
    }
  }
  Mat inv = llt.solve(Mat::Identity(n, n));
  // Symmetrize away solver round-off.
  return 0.5 * (inv + inv.transpose());
}

/// log|S| for symmetric positive-definite S.
inline double spd_log_det(const Mat& s) {
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("spd_log_det: matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Adds w * c c^T into the upper triangle of m, then mirrors it.
inline void rank_one_update_symmetric(Mat& m, const Vec& c, double w) {
  const auto p = c.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double cj = w * c(j);
    if (cj == 0.0) continue;
    for (Eigen::Index i = 0; i <= j; ++i) m(i, j) += c(i) * cj;
  }
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j + 1; i < p; ++i) m(i, j) = m(j, i);
}

/// Largest per-block relative change ||new - old||_inf / max(||old||_inf, floor).
inline double block_relative_change(const Eigen::Ref<const Mat>& older, const Eigen::Ref<const Mat>& newer,
                                    double floor = 1e-300) {
  if (older.size() == 0) return 0.0;
  const double num = (newer - older).cwiseAbs().maxCoeff();
  const double den = std::max(older.cwiseAbs().maxCoeff(), floor);
  return num / den;
}

inline double scalar_relative_change(double older, double newer) {
  return std::abs(newer - older) / std::max(std::abs(older), 1e-300);
}

}  // namespace streamvb
