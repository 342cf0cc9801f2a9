#pragma once

// Streaming sufficient statistics. Each accumulator is updated by exact
// rank-one recursions; symmetric matrices are stored full and updated on one
// triangle then mirrored. Summation is plain (non-compensated).

#include <cstdint>
#include <stdexcept>
#include <string>

#include "linalg.hpp"
#include "special_functions.hpp"

namespace streamvb {

namespace detail {
inline void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                                ", expected " + std::to_string(want) + ")");
}
}  // namespace detail

/// n, y'y, C'y, C'C for Gaussian-response models.
struct StreamingMoments {
  std::int64_t n = 0;
  double yty = 0.0;
  Vec cty;
  Mat ctc;

  StreamingMoments() = default;
  explicit StreamingMoments(Eigen::Index p) : cty(Vec::Zero(p)), ctc(Mat::Zero(p, p)) {}

  Eigen::Index dim() const { return cty.size(); }
};

/// n, C'(y - 1/2), C' diag(lambda(xi)) C for the logistic model.
struct LogisticMoments {
  std::int64_t n = 0;
  Vec cty_half;
  Mat ct_lam_c;

  LogisticMoments() = default;
  explicit LogisticMoments(Eigen::Index p) : cty_half(Vec::Zero(p)), ct_lam_c(Mat::Zero(p, p)) {}

  Eigen::Index dim() const { return cty_half.size(); }
};

/// Statistics of the sparse model, with C = [1 Z]. ctc embeds ztz as its
/// lower-right K x K block and cty embeds zty in entries 1..K.
struct SparseMoments {
  std::int64_t n = 0;
  double yty = 0.0;
  Vec zt1;
  Vec zty;
  Mat ztz;
  Vec cty;
  Mat ctc;

  SparseMoments() = default;
  explicit SparseMoments(Eigen::Index k)
      : zt1(Vec::Zero(k)), zty(Vec::Zero(k)), ztz(Mat::Zero(k, k)), cty(Vec::Zero(k + 1)), ctc(Mat::Zero(k + 1, k + 1)) {}

  Eigen::Index num_basis() const { return zt1.size(); }
};

inline StreamingMoments& update_gaussian(StreamingMoments& s, double y_new, const Vec& c_new) {
  detail::check_dim(c_new.size(), s.dim(), "update_gaussian");
  ++s.n;
  s.yty += y_new * y_new;
  s.cty += c_new * y_new;
  rank_one_update_symmetric(s.ctc, c_new, 1.0);
  return s;
}

inline StreamingMoments updated_gaussian(StreamingMoments s, double y_new, const Vec& c_new) {
  update_gaussian(s, y_new, c_new);
  return s;
}

inline LogisticMoments& update_logistic(LogisticMoments& s, int y_new, const Vec& c_new, double xi_new) {
  detail::check_dim(c_new.size(), s.dim(), "update_logistic");
  if (y_new != 0 && y_new != 1) throw std::invalid_argument("update_logistic: response must be 0 or 1");
  if (!(xi_new >= 0.0)) throw std::invalid_argument("update_logistic: xi must be non-negative");
  ++s.n;
  s.cty_half += c_new * (static_cast<double>(y_new) - 0.5);
  rank_one_update_symmetric(s.ct_lam_c, c_new, lambda_jj(xi_new));
  return s;
}

inline SparseMoments& update_sparse(SparseMoments& s, double y_new, const Vec& z_new) {
  const auto k = s.num_basis();
  detail::check_dim(z_new.size(), k, "update_sparse");
  Vec c_new(k + 1);
  c_new(0) = 1.0;
  c_new.tail(k) = z_new;
  ++s.n;
  s.yty += y_new * y_new;
  s.zt1 += z_new;
  s.zty += z_new * y_new;
  rank_one_update_symmetric(s.ztz, z_new, 1.0);
  s.cty += c_new * y_new;
  rank_one_update_symmetric(s.ctc, c_new, 1.0);
  return s;
}

/// Dense batch statistics for warm-up handoff.
inline StreamingMoments from_batch(const Vec& y, const Mat& c) {
  detail::check_dim(c.rows(), y.size(), "from_batch rows");
  StreamingMoments s(c.cols());
  s.n = y.size();
  if (s.n == 0) return s;
  s.yty = y.squaredNorm();
  s.cty.noalias() = c.transpose() * y;
  s.ctc.noalias() = c.transpose() * c;
  s.ctc = 0.5 * (s.ctc + s.ctc.transpose()).eval();
  return s;
}

inline LogisticMoments logistic_from_batch(const Vec& y, const Mat& c, const Vec& xi) {
  detail::check_dim(c.rows(), y.size(), "logistic_from_batch rows");
  detail::check_dim(xi.size(), y.size(), "logistic_from_batch xi");
  LogisticMoments s(c.cols());
  s.n = y.size();
  if (s.n == 0) return s;
  Vec lam = xi.unaryExpr([](double x) { return lambda_jj(x); });
  s.cty_half.noalias() = c.transpose() * (y.array() - 0.5).matrix();
  s.ct_lam_c.noalias() = c.transpose() * lam.asDiagonal() * c;
  s.ct_lam_c = 0.5 * (s.ct_lam_c + s.ct_lam_c.transpose()).eval();
  return s;
}

inline SparseMoments sparse_from_batch(const Vec& y, const Mat& z) {
  detail::check_dim(z.rows(), y.size(), "sparse_from_batch rows");
  const auto k = z.cols();
  SparseMoments s(k);
  s.n = y.size();
  if (s.n == 0) return s;
  Mat c(z.rows(), k + 1);
  c.col(0).setOnes();
  c.rightCols(k) = z;
  s.yty = y.squaredNorm();
  s.zt1 = z.colwise().sum().transpose();
  s.zty.noalias() = z.transpose() * y;
  s.ztz.noalias() = z.transpose() * z;
  s.ztz = 0.5 * (s.ztz + s.ztz.transpose()).eval();
  s.cty.noalias() = c.transpose() * y;
  s.ctc.noalias() = c.transpose() * c;
  s.ctc = 0.5 * (s.ctc + s.ctc.transpose()).eval();
  return s;
}

}  // namespace streamvb
