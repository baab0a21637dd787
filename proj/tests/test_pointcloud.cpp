#include <cmath>
#include <numbers>

#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/random.hpp"
#include "doctest.h"

using namespace cloudtpt;

namespace {

using Poly = std::vector<Eigen::Vector2d>;

double polygon_area(const Poly& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const auto& u = p[k];
    const auto& v = p[(k + 1) % p.size()];
    s += u.x() * v.y() - v.x() * u.y();
  }
  return 0.5 * std::abs(s);
}

// Sutherland-Hodgman clip against {x : n.x <= c}.
Poly clip(const Poly& in, const Eigen::Vector2d& n, double c) {
  Poly out;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto& u = in[k];
    const auto& v = in[(k + 1) % in.size()];
    const double du = n.dot(u) - c, dv = n.dot(v) - c;
    if (du <= 0.0) out.push_back(u);
    if ((du < 0.0 && dv > 0.0) || (du > 0.0 && dv < 0.0)) out.push_back(u + (v - u) * (du / (du - dv)));
  }
  return out;
}

// Exact Voronoi cell of site i among all sites, clipped to a large box.
Poly brute_cell(const Mat& pts, Index i) {
  const Eigen::Vector2d y = pts.row(i).transpose();
  Poly cell{{-10, -10}, {10, -10}, {10, 10}, {-10, 10}};
  for (Index j = 0; j < pts.rows(); ++j) {
    if (j == i) continue;
    const Eigen::Vector2d z = pts.row(j).transpose();
    cell = clip(cell, z - y, 0.5 * (z.squaredNorm() - y.squaredNorm()));
  }
  return cell;
}

// Length of the cell edge lying on the bisector of (y, z).
double bisector_edge(const Poly& cell, const Eigen::Vector2d& y, const Eigen::Vector2d& z) {
  const Eigen::Vector2d n = z - y;
  const double c = 0.5 * (z.squaredNorm() - y.squaredNorm());
  double len = 0.0;
  for (std::size_t k = 0; k < cell.size(); ++k) {
    const auto& u = cell[k];
    const auto& v = cell[(k + 1) % cell.size()];
    if (std::abs(n.dot(u) - c) < 1e-12 * n.norm() && std::abs(n.dot(v) - c) < 1e-12 * n.norm()) len += (v - u).norm();
  }
  return len;
}

}  // namespace

TEST_CASE("sphere sampler: unit norm, determinism, vanishing mean") {
  const PointCloud c = sample_sphere_uniform(4000, 42);
  for (Index i = 0; i < c.size(); ++i) CHECK(std::abs(c.points().row(i).norm() - 1.0) < 1e-12);
  const PointCloud again = sample_sphere_uniform(4000, 42);
  CHECK((c.points().array() == again.points().array()).all());
  const PointCloud big = sample_sphere_uniform(100000, 7);
  const Vec mean = big.points().colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 0.02);
  CHECK_THROWS_AS(sample_sphere_uniform(1, 1), Error);
}

TEST_CASE("torus sampler: constraint, bounding box, area density") {
  const double R = 2.0, r = 1.0;
  const PointCloud c = sample_torus_uniform(100000, R, r, 3);
  Index positive = 0;
  for (Index i = 0; i < c.size(); ++i) {
    const Vec y = c.point(i);
    const double rho = std::hypot(y(0), y(1));
    CHECK(std::abs((rho - R) * (rho - R) + y(2) * y(2) - r * r) < 1e-12);
    CHECK(std::abs(y(2)) <= r + 1e-12);
    CHECK(rho >= R - r - 1e-12);
    CHECK(rho <= R + r + 1e-12);
    positive += rho > R;  // cos(theta) > 0
  }
  const double frac = static_cast<double>(positive) / static_cast<double>(c.size());
  CHECK(std::abs(frac - (0.5 + r / (std::numbers::pi * R))) < 0.01);
  const PointCloud angular = sample_torus_uniform(20000, R, r, 3, TorusSampling::Angular);
  positive = 0;
  for (Index i = 0; i < angular.size(); ++i) positive += std::hypot(angular.points()(i, 0), angular.points()(i, 1)) > R;
  CHECK(std::abs(static_cast<double>(positive) / 20000.0 - 0.5) < 0.02);
  CHECK_THROWS_AS(sample_torus_uniform(10, 1.0, 2.0, 1), Error);
}

TEST_CASE("point cloud validation") {
  Mat p(3, 2);
  p << 0, 0, 1, 0, 0, 0;
  CHECK_THROWS_AS(PointCloud(p, 2), StateError);
  p(2, 1) = NAN;
  CHECK_THROWS_AS(PointCloud(p, 2), StateError);
  CHECK_THROWS_AS(PointCloud(Mat::Zero(1, 2), 2), Error);
}

TEST_CASE("hexagonal lattice: interior cells are exact hexagons") {
  const double a = 0.1;
  std::vector<Eigen::Vector2d> pts;
  for (int row = -8; row <= 8; ++row) {
    for (int col = -8; col <= 8; ++col) pts.push_back({a * (col + 0.5 * (row & 1)), a * row * std::sqrt(3.0) / 2.0});
  }
  Mat m(static_cast<Index>(pts.size()), 2);
  for (std::size_t k = 0; k < pts.size(); ++k) m.row(static_cast<Index>(k)) = pts[k].transpose();
  const PointCloud cloud(m, 2);
  const Tessellation t = build_tessellation(cloud);
  const double hex = std::sqrt(3.0) / 2.0 * a * a;
  int checked = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (cloud.point(i).norm() > 0.45) continue;
    ++checked;
    CHECK(std::abs(t.volume(i) - hex) < 1e-9);
    CHECK(t.faces(i).size() == 6u);
    for (const auto& f : t.faces(i)) CHECK(std::abs(f.area - a / std::sqrt(3.0)) < 1e-9);
  }
  CHECK(checked > 50);
}

TEST_CASE("planar clouds match a brute-force exact Voronoi diagram") {
  Rng rng(11);
  Mat m(300, 2);
  for (Index i = 0; i < m.rows(); ++i) m.row(i) << rng.uniform(), rng.uniform();
  const PointCloud cloud(m, 2);
  const Tessellation t = build_tessellation(cloud);
  int checked = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    if ((m.row(i).array() - 0.5).abs().maxCoeff() > 0.2) continue;
    ++checked;
    const Poly cell = brute_cell(m, i);
    CHECK(std::abs(t.volume(i) - polygon_area(cell)) < 1e-9);
    for (Index j = 0; j < cloud.size(); ++j) {
      if (j == i) continue;
      const double exact = bisector_edge(cell, m.row(i).transpose(), m.row(j).transpose());
      CHECK(std::abs(t.face_area(i, j) - exact) < 1e-9);
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("sphere tessellation: symmetric, positive, tiles the sphere") {
  const PointCloud cloud = sample_sphere_uniform(2000, 5);
  const Tessellation t = build_tessellation(cloud);
  CHECK(std::abs(t.total_volume() - 4.0 * std::numbers::pi) / (4.0 * std::numbers::pi) < 0.1);
  for (Index i = 0; i < t.size(); ++i) {
    CHECK(t.volume(i) > 0.0);
    for (const auto& f : t.faces(i)) {
      CHECK(f.area > 0.0);
      CHECK(t.face_area(f.neighbor, i) == f.area);
    }
  }
  CHECK(t.connected());

  // Fibonacci lattice: a regular grid covering the sphere
  const Index n = 1500;
  Mat fib(n, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (Index k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
    const double rho = std::sqrt(1.0 - z * z);
    fib.row(k) << rho * std::cos(golden * static_cast<double>(k)), rho * std::sin(golden * static_cast<double>(k)), z;
  }
  const Tessellation tf = build_tessellation(PointCloud(fib, 2));
  CHECK(std::abs(tf.total_volume() - 4.0 * std::numbers::pi) / (4.0 * std::numbers::pi) < 0.05);
}

TEST_CASE("degenerate local geometry is reported") {
  Mat line(30, 3);
  for (Index i = 0; i < 30; ++i) line.row(i) << 0.1 * static_cast<double>(i), 0.0, 0.0;
  CHECK_THROWS_AS(build_tessellation(PointCloud(line, 2)), StateError);
}

TEST_CASE("neighbor queries and reaction-set balls") {
  Mat m(5, 2);
  m << 0, 0, 1, 0, 2, 0, 3, 0, 0.5, 0.1;
  const NeighborIndex index(m);
  CHECK(index.knn(0, 2) == std::vector<Index>{4, 1});
  CHECK(index.nearest(Vec::Constant(2, 2.9)) == 3);
  const PointCloud cloud(m, 2);
  Vec center(2);
  center << 0.0, 0.0;
  CHECK(ball_indices(cloud, center, 0.6) == IndexSet{0, 4});
  center << 10.0, 0.0;
  CHECK(ball_indices(cloud, center, 0.1) == IndexSet{3});  // empty ball falls back to the nearest point
}
