#include "cloudtpt/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <Eigen/Eigenvalues>

#include "cloudtpt/random.hpp"

namespace cloudtpt {

IndexSet make_index_set(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool contains(const IndexSet& set, Index i) { return std::binary_search(set.begin(), set.end(), i); }

PointCloud::PointCloud(Mat points, int intrinsic_dim) : points_(std::move(points)), intrinsic_dim_(intrinsic_dim) {
  if (points_.rows() < 2) throw Error("point cloud needs at least 2 points, got " + std::to_string(points_.rows()));
  if (intrinsic_dim_ < 1 || intrinsic_dim_ > points_.cols())
    throw Error("intrinsic dimension " + std::to_string(intrinsic_dim_) + " incompatible with ambient dimension " +
                std::to_string(points_.cols()));
  for (Index i = 0; i < points_.rows(); ++i) {
    if (!points_.row(i).allFinite()) throw StateError("non-finite coordinate", {i});
  }
  // Coincident points would give zero-length faces; sort rows lexicographically
  // so duplicates are adjacent.
  std::vector<Index> order(points_.rows());
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index c = 0; c < points_.cols(); ++c) {
      if (points_(a, c) != points_(b, c)) return points_(a, c) < points_(b, c);
    }
    return a < b;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if ((points_.row(order[k]) - points_.row(order[k - 1])).squaredNorm() == 0.0)
      throw StateError("coincident points", make_index_set({order[k - 1], order[k]}));
  }
}

Tessellation::Tessellation(std::vector<double> volumes, std::vector<std::vector<Face>> faces)
    : volumes_(std::move(volumes)), faces_(std::move(faces)) {
  if (volumes_.size() != faces_.size()) throw Error("tessellation: volume and face list sizes differ");
  for (auto& list : faces_) {
    std::sort(list.begin(), list.end(), [](const Face& a, const Face& b) { return a.neighbor < b.neighbor; });
  }
}

double Tessellation::face_area(Index i, Index j) const {
  const auto& list = faces_[i];
  auto it = std::lower_bound(list.begin(), list.end(), j, [](const Face& f, Index v) { return f.neighbor < v; });
  return (it != list.end() && it->neighbor == j) ? it->area : 0.0;
}

IndexSet Tessellation::adjacent(Index i) const {
  IndexSet out;
  out.reserve(faces_[i].size());
  for (const auto& f : faces_[i]) out.push_back(f.neighbor);
  return out;
}

std::size_t Tessellation::face_count() const {
  std::size_t total = 0;
  for (const auto& list : faces_) total += list.size();
  return total / 2;
}

double Tessellation::total_volume() const { return std::accumulate(volumes_.begin(), volumes_.end(), 0.0); }

std::vector<IndexSet> Tessellation::components() const {
  const Index n = size();
  std::vector<int> label(n, -1);
  std::vector<IndexSet> out;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    IndexSet comp;
    std::queue<Index> todo;
    todo.push(s);
    label[s] = static_cast<int>(out.size());
    while (!todo.empty()) {
      const Index v = todo.front();
      todo.pop();
      comp.push_back(v);
      for (const auto& f : faces_[v]) {
        if (label[f.neighbor] < 0) {
          label[f.neighbor] = static_cast<int>(out.size());
          todo.push(f.neighbor);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<Index> NeighborIndex::knn(Index i, int k) const {
  const Index n = points_.rows();
  std::vector<std::pair<double, Index>> d;
  d.reserve(n - 1);
  for (Index j = 0; j < n; ++j) {
    if (j != i) d.emplace_back((points_.row(j) - points_.row(i)).squaredNorm(), j);
  }
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
  std::vector<Index> out(kk);
  for (std::size_t m = 0; m < kk; ++m) out[m] = d[m].second;
  return out;
}

Index NeighborIndex::nearest(const Vec& p) const {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < points_.rows(); ++j) {
    const double d = (points_.row(j).transpose() - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

std::vector<Index> NeighborIndex::within(const Vec& p, double r) const {
  std::vector<Index> out;
  const double r2 = r * r;
  for (Index j = 0; j < points_.rows(); ++j) {
    if ((points_.row(j).transpose() - p).squaredNorm() < r2) out.push_back(j);
  }
  return out;
}

PointCloud sample_sphere_uniform(Index n, std::uint64_t seed) {
  if (n < 2) throw Error("sample_sphere_uniform: n must be >= 2");
  Rng rng(seed);
  Mat pts(n, 3);
  for (Index i = 0; i < n; ++i) {
    Eigen::Vector3d v;
    do {
      v = {rng.normal(), rng.normal(), rng.normal()};
    } while (v.squaredNorm() < 1e-24);
    pts.row(i) = v.normalized().transpose();
  }
  return PointCloud(std::move(pts), 2);
}

PointCloud sample_torus_uniform(Index n, double major_radius, double minor_radius, std::uint64_t seed,
                                TorusSampling mode) {
  if (n < 2) throw Error("sample_torus_uniform: n must be >= 2");
  if (!(minor_radius > 0.0) || !(major_radius > minor_radius))
    throw Error("sample_torus_uniform: need R > r > 0");
  Rng rng(seed);
  Mat pts(n, 3);
  for (Index i = 0; i < n; ++i) {
    double theta;
    for (;;) {
      theta = -M_PI + 2.0 * M_PI * rng.uniform();
      if (mode == TorusSampling::Angular) break;
      // area element is proportional to R + r cos(theta)
      if (rng.uniform() * (major_radius + minor_radius) < major_radius + minor_radius * std::cos(theta)) break;
    }
    const double phi = 2.0 * M_PI * rng.uniform();
    const double rho = major_radius + minor_radius * std::cos(theta);
    pts(i, 0) = rho * std::cos(phi);
    pts(i, 1) = rho * std::sin(phi);
    pts(i, 2) = minor_radius * std::sin(theta);
  }
  return PointCloud(std::move(pts), 2);
}

TangentFrame estimate_tangent_frame(const PointCloud& cloud, Index origin, const std::vector<Index>& neighbors) {
  const Index l = cloud.ambient_dim();
  const int d = cloud.intrinsic_dim();
  Vec mean = cloud.point(origin);
  for (Index j : neighbors) mean += cloud.point(j);
  mean /= static_cast<double>(neighbors.size() + 1);
  Mat cov = Mat::Zero(l, l);
  auto accumulate = [&](Index j) {
    const Vec c = cloud.point(j) - mean;
    cov.noalias() += c * c.transpose();
  };
  accumulate(origin);
  for (Index j : neighbors) accumulate(j);

  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  const Vec& ev = eig.eigenvalues();  // ascending
  const double largest = ev(l - 1);
  if (!(largest > 0.0) || ev(l - d) <= 1e-12 * largest)
    throw StateError("degenerate local geometry: neighbor PCA rank below intrinsic dimension", {origin});
  TangentFrame frame;
  frame.origin = origin;
  frame.basis = eig.eigenvectors().rightCols(d).rowwise().reverse();
  return frame;
}

namespace {

struct LabelledVertex {
  Eigen::Vector2d p;
  int label;  // label of the edge starting at p; -1 for the outer boundary
};

using Polygon = std::vector<LabelledVertex>;

// Keeps {x : n.x <= c}. Edges created along the cut carry `label`.
Polygon clip(const Polygon& poly, const Eigen::Vector2d& n, double c, int label) {
  Polygon out;
  const std::size_t m = poly.size();
  out.reserve(m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& a = poly[k];
    const auto& b = poly[(k + 1) % m];
    const double da = n.dot(a.p) - c;
    const double db = n.dot(b.p) - c;
    const bool ina = da <= 0.0;
    const bool inb = db <= 0.0;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double t = da / (da - db);
      const Eigen::Vector2d x = a.p + t * (b.p - a.p);
      out.push_back({x, ina ? label : a.label});
    }
  }
  return out;
}

Polygon regular_polygon(double radius, int sides) {
  Polygon poly;
  poly.reserve(sides);
  for (int s = 0; s < sides; ++s) {
    const double a = 2.0 * M_PI * s / sides;
    poly.push_back({{radius * std::cos(a), radius * std::sin(a)}, -1});
  }
  return poly;
}

Polygon clip_by_sites(Polygon poly, const std::vector<Eigen::Vector2d>& sites) {
  for (std::size_t s = 0; s < sites.size() && !poly.empty(); ++s) {
    poly = clip(std::move(poly), sites[s], 0.5 * sites[s].squaredNorm(), static_cast<int>(s));
  }
  return poly;
}

}  // namespace

PlanarCell planar_voronoi_cell(const std::vector<Eigen::Vector2d>& sites, double clip_radius,
                               int disk_polygon_sides) {
  PlanarCell cell;
  cell.edge_lengths.assign(sites.size(), 0.0);
  double scale = clip_radius;
  for (const auto& s : sites) scale = std::max(scale, s.norm());
  if (!(scale > 0.0)) throw Error("planar_voronoi_cell: degenerate sites");

  const double box = 1e4 * scale;
  Polygon poly = clip_by_sites({{{-box, -box}, -1}, {{box, -box}, -1}, {{box, box}, -1}, {{-box, box}, -1}}, sites);
  const bool unbounded = std::any_of(poly.begin(), poly.end(), [](const LabelledVertex& v) { return v.label < 0; });
  if (unbounded) {
    cell.clipped = true;
    poly = clip_by_sites(regular_polygon(clip_radius, disk_polygon_sides), sites);
  }
  const std::size_t m = poly.size();
  double twice_area = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& a = poly[k].p;
    const auto& b = poly[(k + 1) % m].p;
    twice_area += a.x() * b.y() - a.y() * b.x();
    cell.reach = std::max(cell.reach, a.norm());
    if (poly[k].label >= 0) cell.edge_lengths[poly[k].label] += (b - a).norm();
  }
  cell.area = 0.5 * std::abs(twice_area);
  return cell;
}

Tessellation build_tessellation(const PointCloud& cloud, const TessellationOptions& options) {
  const Index n = cloud.size();
  const int d = cloud.intrinsic_dim();
  if (d != 2) throw Error("build_tessellation: only intrinsic dimension 2 is supported");
  if (options.neighbors < d + 2) throw Error("build_tessellation: need k >= d + 2");
  const int k = static_cast<int>(std::min<Index>(options.neighbors, n - 1));

  const NeighborIndex index(cloud.points());
  std::vector<double> volumes(n);
  struct Half {
    Index i, j;
    double len;
  };
  std::vector<Half> halves;
  halves.reserve(static_cast<std::size_t>(n) * 8);
  IndexSet clipped;

  for (Index i = 0; i < n; ++i) {
    // Sites beyond twice the cell's reach cannot cut it, so grow k until the
    // nearest excluded candidate is that far away.
    std::vector<Index> nbrs = index.knn(i, k);
    const TangentFrame frame = estimate_tangent_frame(cloud, i, nbrs);
    PlanarCell cell;
    for (int kk = k;; kk = static_cast<int>(std::min<Index>(2 * static_cast<Index>(kk), n - 1))) {
      if (kk > k) nbrs = index.knn(i, kk);
      std::vector<Eigen::Vector2d> sites(nbrs.size());
      double radius = 0.0;
      for (std::size_t m = 0; m < nbrs.size(); ++m) {
        const Vec rel = cloud.point(nbrs[m]) - cloud.point(i);
        sites[m] = frame.basis.transpose() * rel;
        radius = std::max(radius, rel.norm());
      }
      cell = planar_voronoi_cell(sites, radius, options.disk_polygon_sides);
      if (cell.clipped || kk >= n - 1 || 2.0 * cell.reach <= radius) break;
    }
    if (!(cell.area > 0.0)) throw StateError("zero-area tessellation cell", {i});
    if (cell.clipped) clipped.push_back(i);
    volumes[i] = cell.area;
    for (std::size_t m = 0; m < nbrs.size(); ++m) {
      if (cell.edge_lengths[m] > 0.0) halves.push_back({i, nbrs[m], cell.edge_lengths[m]});
    }
  }

  // Symmetrize: average the two one-sided estimates, union of adjacency.
  std::vector<Half> keyed;
  keyed.reserve(halves.size());
  for (const auto& h : halves) keyed.push_back({std::min(h.i, h.j), std::max(h.i, h.j), h.len});
  std::sort(keyed.begin(), keyed.end(), [](const Half& a, const Half& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  std::vector<std::vector<Face>> faces(n);
  for (std::size_t s = 0; s < keyed.size();) {
    std::size_t e = s;
    double sum = 0.0;
    while (e < keyed.size() && keyed[e].i == keyed[s].i && keyed[e].j == keyed[s].j) sum += keyed[e++].len;
    const double area = 0.5 * sum;
    faces[keyed[s].i].push_back({keyed[s].j, area});
    faces[keyed[s].j].push_back({keyed[s].i, area});
    s = e;
  }
  Tessellation tess(std::move(volumes), std::move(faces));
  tess.clipped_cells = std::move(clipped);
  return tess;
}

IndexSet ball_indices(const PointCloud& cloud, const Vec& center, double r) {
  const NeighborIndex index(cloud.points());
  auto in = index.within(center, r);
  if (in.empty()) in.push_back(index.nearest(center));
  return make_index_set(std::move(in));
}

}  // namespace cloudtpt
