#pragma once

#include <Eigen/SparseCore>

#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/potentials.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Continuous-time generator on the point cloud. Only off-diagonal rates are
/// stored; the diagonal is minus the exit rate. Rows iterate neighbors in
/// ascending index order.
class RateMatrix {
 public:
  RateMatrix() = default;
  RateMatrix(SparseRows offdiag, Vec measure);

  Index size() const noexcept { return offdiag_.rows(); }
  const SparseRows& offdiag() const noexcept { return offdiag_; }
  /// Q_ij for i != j, -lambda_i on the diagonal.
  double operator()(Index i, Index j) const;
  /// lambda_i = sum_{j != i} Q_ij.
  double exit_rate(Index i) const { return exit_rates_(i); }
  const Vec& exit_rates() const noexcept { return exit_rates_; }
  /// Reference measure m_i = pi_i |C_i| for which the chain is reversible.
  const Vec& measure() const noexcept { return measure_; }

  /// Dense copy including the diagonal (test oracles, small n only).
  Mat dense() const;

 private:
  SparseRows offdiag_;
  Vec exit_rates_;
  Vec measure_;
};

struct JumpChain {
  Vec jump_rates;        ///< lambda_i
  SparseRows transition;  ///< P_ij = Q_ij / lambda_i
};

/// Q_ij = (pi_i + pi_j) |Gamma_ij| / (2 pi_i |C_i| |y_i - y_j|).
RateMatrix build_generator(const Tessellation& tess, const Vec& weights, const PointCloud& cloud);

JumpChain jump_chain(const RateMatrix& q);

/// max_i |sum_j m_j Q_ji| / (lambda_i m_i); zero for a stationary measure.
double stationarity_residual(const RateMatrix& q, const Vec& m);

/// max over edges of |m_i Q_ij - m_j Q_ji| / max(m_i Q_ij, m_j Q_ji).
double detailed_balance_defect(const RateMatrix& q, const Vec& m);

}  // namespace cloudtpt
