#pragma once

#include <vector>

#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/sampler.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

/// Discrete path iterate for the mean transition path.
struct MeanPathState {
  Mat points;                 ///< M x l, endpoints are the A and B representatives
  std::vector<Index> nodes;   ///< cloud index of each point (after projection)
  double radius = 0.0;        ///< r0
  int iteration = 0;
  bool converged = false;
  std::vector<char> empty_ball;  ///< per point, set when its last ball was empty
};

struct WeightedSample {
  Index state;
  double weight;  ///< accumulated waiting time over all visits
};

/// Visited states aggregated over one or more trajectories.
class VisitTable {
 public:
  VisitTable(const PointCloud& cloud, const std::vector<TrajectoryRecord>& records);
  VisitTable(const PointCloud& cloud, const TrajectoryRecord& record)
      : VisitTable(cloud, std::vector<TrajectoryRecord>{record}) {}

  const std::vector<Index>& states() const noexcept { return states_; }
  const Vec& time() const noexcept { return time_; }  ///< per entry of states()
  const Mat& points() const noexcept { return points_; }
  double total_time() const { return time_.sum(); }
  bool empty() const { return states_.empty(); }

  /// Visited states within distance r of p with their accumulated waiting time.
  std::vector<WeightedSample> ball(const Vec& p, double r) const;
  /// Cloud index of the visited state nearest to p.
  Index nearest(const Vec& p) const;

 private:
  std::vector<Index> states_;
  Vec time_;
  Mat points_;
};

std::vector<WeightedSample> collect_ball(const VisitTable& visits, const Vec& p, double r0);

/// Time-weighted mean of the samples' cloud positions.
Vec local_mean(const PointCloud& cloud, const std::vector<WeightedSample>& samples);

/// Equal arc-length redistribution of the same number of points by linear
/// interpolation; endpoints preserved.
Mat reparameterize(const Mat& points);

/// Chord from A to B with M points, interior points snapped to the nearest
/// visited state.
MeanPathState init_path(Index a_rep, Index b_rep, int m, const PointCloud& cloud, const VisitTable& visits,
                        double radius);

struct MeanPathDiagnostics {
  int iteration;
  double max_displacement;  ///< between consecutive pre-projection paths
  int empty_balls;
};

struct MeanPathOptions {
  int max_iterations = 20;        ///< L_max
  double tol = 1e-8;
  double max_empty_fraction = 0.2;
};

struct MeanPathResult {
  MeanPathState state;
  Mat last_unprojected;  ///< reparameterized path of the final iteration
  std::vector<MeanPathDiagnostics> history;
};

MeanPathResult iterate_mean_path(const PointCloud& cloud, const VisitTable& visits, MeanPathState state,
                                 const MeanPathOptions& options = {});

/// 5x the median nearest-neighbor distance of the cloud.
double default_ball_radius(const PointCloud& cloud);

/// Symmetric Hausdorff distance between two point sequences.
double hausdorff_distance(const Mat& a, const Mat& b);

}  // namespace cloudtpt
