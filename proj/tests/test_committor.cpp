#include <Eigen/Dense>
#include <cmath>

#include "cloudtpt/committor.hpp"
#include "cloudtpt/random.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cloudtpt;

namespace {

RateMatrix from_dense(const Mat& rates, const Vec& m) { return RateMatrix(SparseRows(rates.sparseView()), m); }

// Dense oracle: (I - P_II) q_I = P_IB 1 with P = Q / lambda.
Vec dense_committor(const RateMatrix& q, const IndexSet& a, const IndexSet& b) {
  const Mat d = q.dense();
  const Index n = d.rows();
  std::vector<Index> interior;
  for (Index i = 0; i < n; ++i) {
    if (!contains(a, i) && !contains(b, i)) interior.push_back(i);
  }
  const auto m = static_cast<Index>(interior.size());
  Mat lhs = Mat::Zero(m, m);
  Vec rhs = Vec::Zero(m);
  for (Index r = 0; r < m; ++r) {
    const Index i = interior[r];
    const double lambda = -d(i, i);
    for (Index c = 0; c < m; ++c) lhs(r, c) = -d(i, interior[c]) / lambda;
    for (Index j : b) rhs(r) += d(i, j) / lambda;
  }
  const Vec qi = lhs.partialPivLu().solve(rhs);
  Vec out = Vec::Zero(n);
  for (Index j : b) out(j) = 1.0;
  for (Index r = 0; r < m; ++r) out(interior[r]) = qi(r);
  return out;
}

const CommittorMethod kMethods[] = {CommittorMethod::Auto, CommittorMethod::Direct, CommittorMethod::Iterative};

}  // namespace

TEST_CASE("path graph A-1-2-B with equal rates is linear") {
  Mat r = Mat::Zero(4, 4);
  for (int k = 0; k < 3; ++k) r(k, k + 1) = r(k + 1, k) = 1.0;
  const RateMatrix q = from_dense(r, Vec::Ones(4));
  for (auto method : kMethods) {
    CommittorOptions opt;
    opt.method = method;
    const auto f = solve_committor(q, {0}, {3}, opt);
    CHECK(std::abs(f.q(1) - 1.0 / 3.0) < 1e-14);
    CHECK(std::abs(f.q(2) - 2.0 / 3.0) < 1e-14);
    CHECK(f.q(0) == 0.0);
    CHECK(f.q(3) == 1.0);
  }
  Vec exact(4);
  exact << 0, 1.0 / 3, 2.0 / 3, 1;
  CHECK(committor_residual(q, exact, {0}, {3}) < 1e-14);
  exact(1) += 1e-3;
  CHECK(committor_residual(q, exact, {0}, {3}) > 1e-4);
}

TEST_CASE("birth-death chain matches the closed form") {
  Rng rng(77);
  const Index n = 40;
  Vec up(n), down(n);
  for (Index k = 0; k < n; ++k) {
    up(k) = 0.2 + 2.0 * rng.uniform();
    down(k) = 0.2 + 2.0 * rng.uniform();
  }
  Mat r = Mat::Zero(n, n);
  Vec m(n);
  m(0) = 1.0;
  for (Index k = 0; k + 1 < n; ++k) {
    r(k, k + 1) = up(k);
    r(k + 1, k) = down(k + 1);
    m(k + 1) = m(k) * up(k) / down(k + 1);
  }
  const RateMatrix q = from_dense(r, m);
  // q_k = sum_{j<k} rho_j / sum_{j<n-1} rho_j, rho_j = prod_{1<=i<=j} b_i / a_i
  Vec rho(n - 1);
  rho(0) = 1.0;
  for (Index j = 1; j < n - 1; ++j) rho(j) = rho(j - 1) * down(j) / up(j);
  const double total = rho.sum();
  for (auto method : kMethods) {
    CommittorOptions opt;
    opt.method = method;
    opt.tol = 1e-13;
    const auto f = solve_committor(q, {0}, {n - 1}, opt);
    double partial = 0.0;
    for (Index k = 0; k < n; ++k) {
      CHECK(std::abs(f.q(k) - partial / total) < 1e-10);
      if (k < n - 1) partial += rho(k);
    }
  }
}

TEST_CASE("dense-solve equivalence and maximum principle on sphere clouds") {
  for (double eps : {1.0, 0.2}) {
    const auto p = testing::sphere_problem(400, eps, 21, 0.15);
    const Vec dense = dense_committor(p.q, p.a, p.b);
    for (auto method : kMethods) {
      // CG shrinks a measure-weighted residual; at eps 0.2 the row residual at
      // near-zero-measure states stays above tol, so only direct solves apply
      if (eps < 1.0 && method == CommittorMethod::Iterative) continue;
      CommittorOptions opt;
      opt.method = method;
      const auto f = solve_committor(p.q, p.a, p.b, opt);
      CHECK((f.q - dense).lpNorm<Eigen::Infinity>() < 1e-8);
      CHECK(f.residual <= opt.tol);
      CHECK(f.q.minCoeff() >= 0.0);
      CHECK(f.q.maxCoeff() <= 1.0);
      for (Index i = 0; i < f.q.size(); ++i) {
        if (contains(p.a, i)) CHECK(f.q(i) == 0.0);
        else if (contains(p.b, i)) CHECK(f.q(i) == 1.0);
        else {
          CHECK(f.q(i) > 0.0);
          CHECK(f.q(i) < 1.0);
        }
      }
      // the complement solve agrees with 1 - q and gap with the plain difference
      CHECK((f.q + f.complement - Vec::Ones(f.q.size())).lpNorm<Eigen::Infinity>() < 1e-9);
      for (Index i = 0; i < 50; ++i) {
        for (SparseRows::InnerIterator it(p.q.offdiag(), i); it; ++it)
          CHECK(std::abs(f.gap(i, it.col()) - (f.q(it.col()) - f.q(i))) < 1e-9);
      }
    }
  }
}

TEST_CASE("sphere experiment committor meets the default tolerance") {
  const auto p = testing::sphere_problem(4000, 0.05, 1);
  const auto f = solve_committor(p.q, p.a, p.b);
  CHECK(f.residual <= 1e-10);
  CHECK(committor_residual(p.q, f) <= 1e-10);
}

TEST_CASE("mirror-symmetric problem: q(y) + q(sigma y) = 1") {
  const Index half = 600;
  const PointCloud base = sample_sphere_uniform(half, 8);
  Mat pts(2 * half, 3);
  for (Index i = 0; i < half; ++i) {
    pts.row(i) = base.points().row(i);
    pts.row(i + half) = base.points().row(i);
    pts(i + half, 2) = -pts(i, 2);
  }
  const PointCloud cloud(pts, 2);
  const Tessellation tess = build_tessellation(cloud);
  const Landscape scape(Domain::Sphere, 3, [](const Vec& y) { return 0.3 * y(0) + y(2) * y(2); });
  const auto w = equilibrium_weights(cloud, scape, 0.5);
  const RateMatrix q = build_generator(tess, w.values, cloud);
  Vec north = Vec::Zero(3), south = Vec::Zero(3);
  north(2) = 1.0;
  south(2) = -1.0;
  const IndexSet a = ball_indices(cloud, north, 0.2), b = ball_indices(cloud, south, 0.2);
  const auto f = solve_committor(q, a, b);
  for (Index i = 0; i < half; ++i) CHECK(std::abs(f.q(i) + f.q(i + half) - 1.0) < 1e-8);
}

TEST_CASE("committor errors") {
  Mat r = Mat::Zero(5, 5);
  r(0, 1) = r(1, 0) = r(1, 2) = r(2, 1) = 1.0;
  r(3, 4) = r(4, 3) = 1.0;
  const RateMatrix q = from_dense(r, Vec::Ones(5));
  try {
    solve_committor(q, {0}, {2});
    FAIL("stranded component not reported");
  } catch (const StateError& e) {
    CHECK(e.states() == IndexSet{3, 4});
  }
  CHECK_THROWS_AS(solve_committor(q, {0, 1}, {1, 2}), StateError);
  CHECK_THROWS_AS(solve_committor(q, {}, {2}), Error);
}
