#include "cloudtpt/generator.hpp"

#include <algorithm>
#include <cmath>

namespace cloudtpt {

RateMatrix::RateMatrix(SparseRows offdiag, Vec measure) : offdiag_(std::move(offdiag)), measure_(std::move(measure)) {
  offdiag_.makeCompressed();
  if (offdiag_.rows() != offdiag_.cols()) throw Error("rate matrix must be square");
  if (measure_.size() != offdiag_.rows()) throw Error("rate matrix measure has wrong length");
  exit_rates_ = Vec::Zero(offdiag_.rows());
  for (Index i = 0; i < offdiag_.outerSize(); ++i) {
    for (SparseRows::InnerIterator it(offdiag_, i); it; ++it) {
      if (it.col() == i) throw StateError("rate matrix has a stored diagonal entry", {i});
      if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
        throw StateError("rate matrix has a negative or non-finite rate", make_index_set({i, it.col()}));
      exit_rates_(i) += it.value();
    }
  }
}

double RateMatrix::operator()(Index i, Index j) const { return i == j ? -exit_rates_(i) : offdiag_.coeff(i, j); }

Mat RateMatrix::dense() const {
  Mat d = Mat(offdiag_);
  for (Index i = 0; i < size(); ++i) d(i, i) = -exit_rates_(i);
  return d;
}

RateMatrix build_generator(const Tessellation& tess, const Vec& weights, const PointCloud& cloud) {
  const Index n = cloud.size();
  if (tess.size() != n || weights.size() != n) throw Error("build_generator: tessellation, weights and cloud sizes differ");
  IndexSet bad;
  for (Index i = 0; i < n; ++i) {
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i))) bad.push_back(i);
  }
  if (!bad.empty()) throw StateError("build_generator: equilibrium weights must be positive", bad);
  bad.clear();
  for (Index i = 0; i < n; ++i) {
    if (!(tess.volume(i) > 0.0)) bad.push_back(i);
  }
  if (!bad.empty()) throw StateError("build_generator: zero cell volume", bad);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(tess.face_count() * 2);
  for (Index i = 0; i < n; ++i) {
    const double pi_i = weights(i);
    for (const auto& f : tess.faces(i)) {
      const Index j = f.neighbor;
      const double dist = cloud.distance(i, j);
      if (!(dist > 0.0)) throw StateError("build_generator: zero distance between adjacent points", make_index_set({i, j}));
      // (pi_i + pi_j) / pi_i written as a ratio so common scaling cancels
      const double ratio = 1.0 + weights(j) / pi_i;
      triplets.emplace_back(i, j, ratio * f.area / (2.0 * tess.volume(i) * dist));
    }
  }
  SparseRows off(n, n);
  off.setFromTriplets(triplets.begin(), triplets.end());
  Vec measure(n);
  for (Index i = 0; i < n; ++i) measure(i) = weights(i) * tess.volume(i);
  return RateMatrix(std::move(off), std::move(measure));
}

JumpChain jump_chain(const RateMatrix& q) {
  JumpChain out;
  out.jump_rates = q.exit_rates();
  IndexSet isolated;
  for (Index i = 0; i < q.size(); ++i) {
    if (!(out.jump_rates(i) > 0.0)) isolated.push_back(i);
  }
  if (!isolated.empty()) throw StateError("jump_chain: isolated state with zero exit rate", isolated);
  out.transition = q.offdiag();
  for (Index i = 0; i < out.transition.outerSize(); ++i) {
    for (SparseRows::InnerIterator it(out.transition, i); it; ++it) it.valueRef() /= out.jump_rates(i);
  }
  return out;
}

double stationarity_residual(const RateMatrix& q, const Vec& m) {
  if (m.size() != q.size()) throw Error("stationarity_residual: dimension mismatch");
  // (Q^T m)_i = sum_j m_j Q_ji
  Vec flux = -q.exit_rates().cwiseProduct(m);
  const auto& off = q.offdiag();
  for (Index j = 0; j < off.outerSize(); ++j) {
    for (SparseRows::InnerIterator it(off, j); it; ++it) flux(it.col()) += m(j) * it.value();
  }
  double worst = 0.0;
  for (Index i = 0; i < q.size(); ++i) {
    const double scale = q.exit_rate(i) * m(i);
    if (scale > 0.0) worst = std::max(worst, std::abs(flux(i)) / scale);
    else if (flux(i) != 0.0) worst = std::max(worst, std::abs(flux(i)));
  }
  return worst;
}

double detailed_balance_defect(const RateMatrix& q, const Vec& m) {
  double worst = 0.0;
  const auto& off = q.offdiag();
  for (Index i = 0; i < off.outerSize(); ++i) {
    for (SparseRows::InnerIterator it(off, i); it; ++it) {
      const double a = m(i) * it.value();
      const double b = m(it.col()) * off.coeff(it.col(), i);
      const double s = std::max(a, b);
      if (s > 0.0) worst = std::max(worst, std::abs(a - b) / s);
    }
  }
  return worst;
}

}  // namespace cloudtpt
