#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cloudtpt/types.hpp"

namespace cloudtpt {

/// Sample points embedded in R^l, one per row, on a manifold of intrinsic
/// dimension d. Immutable once constructed; the constructor validates that
/// every coordinate is finite, n >= 2 and no two points coincide.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(Mat points, int intrinsic_dim);

  Index size() const noexcept { return points_.rows(); }
  Index ambient_dim() const noexcept { return points_.cols(); }
  int intrinsic_dim() const noexcept { return intrinsic_dim_; }

  const Mat& points() const noexcept { return points_; }
  Vec point(Index i) const { return points_.row(i).transpose(); }
  double distance(Index i, Index j) const { return (points_.row(i) - points_.row(j)).norm(); }

 private:
  Mat points_;
  int intrinsic_dim_ = 2;
};

/// Approximate Voronoi tessellation. Faces are stored per cell as
/// (neighbor, area) lists sorted by neighbor index.
struct Face {
  Index neighbor;
  double area;
};

class Tessellation {
 public:
  Tessellation() = default;
  Tessellation(std::vector<double> volumes, std::vector<std::vector<Face>> faces);

  Index size() const noexcept { return static_cast<Index>(volumes_.size()); }
  double volume(Index i) const { return volumes_[i]; }
  const std::vector<double>& volumes() const noexcept { return volumes_; }
  const std::vector<Face>& faces(Index i) const { return faces_[i]; }
  /// |Gamma_ij|, zero when i and j are not adjacent.
  double face_area(Index i, Index j) const;
  /// VF(i) in ascending order.
  IndexSet adjacent(Index i) const;
  std::size_t face_count() const;
  double total_volume() const;

  /// Connected components of the adjacency graph (each sorted).
  std::vector<IndexSet> components() const;
  bool connected() const { return components().size() <= 1; }

  /// Cells whose neighbor half-planes left them unbounded and which were
  /// clipped to the k-NN disk.
  IndexSet clipped_cells;

 private:
  std::vector<double> volumes_;
  std::vector<std::vector<Face>> faces_;
};

struct TangentFrame {
  Index origin = 0;
  Mat basis;  ///< l x d, orthonormal columns
};

struct TessellationOptions {
  int neighbors = 20;  ///< initial k; doubled until every cell is certified
  int disk_polygon_sides = 128;
};

/// Brute-force Euclidean neighbor queries over a fixed point set.
class NeighborIndex {
 public:
  explicit NeighborIndex(const Mat& points) : points_(points) {}
  /// k nearest points to row `i` excluding `i`, nearest first (ties by index).
  std::vector<Index> knn(Index i, int k) const;
  /// Nearest row to an arbitrary query point; ties resolved to the lowest index.
  Index nearest(const Vec& p) const;
  /// All rows within distance r of p (strict), ascending index.
  std::vector<Index> within(const Vec& p, double r) const;
  Index size() const { return points_.rows(); }

 private:
  const Mat& points_;
};

PointCloud sample_sphere_uniform(Index n, std::uint64_t seed);

enum class TorusSampling { SurfaceArea, Angular };

PointCloud sample_torus_uniform(Index n, double major_radius, double minor_radius, std::uint64_t seed,
                                TorusSampling mode = TorusSampling::SurfaceArea);

/// PCA tangent frame of `origin` from the given neighbor rows.
TangentFrame estimate_tangent_frame(const PointCloud& cloud, Index origin, const std::vector<Index>& neighbors);

Tessellation build_tessellation(const PointCloud& cloud, const TessellationOptions& options = {});

/// Voronoi cell of the origin among `sites` in the plane, bounded by the
/// bisector half-planes. Returns area and per-site edge length; `clipped` is
/// set when the half-planes alone leave the cell unbounded, in which case the
/// cell is intersected with a regular polygon inscribed in the disk of radius
/// `clip_radius`.
struct PlanarCell {
  double area = 0.0;
  std::vector<double> edge_lengths;  ///< indexed like `sites`
  bool clipped = false;
  double reach = 0.0;  ///< largest vertex distance from the site

};
PlanarCell planar_voronoi_cell(const std::vector<Eigen::Vector2d>& sites, double clip_radius,
                               int disk_polygon_sides = 128);

/// Indices of points within Euclidean distance r of `center`, falling back to
/// the single nearest point when the ball is empty.
IndexSet ball_indices(const PointCloud& cloud, const Vec& center, double r);

}  // namespace cloudtpt
