#include "cloudtpt/meanpath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cloudtpt {

VisitTable::VisitTable(const PointCloud& cloud, const std::vector<TrajectoryRecord>& records) {
  std::map<Index, double> acc;
  for (const auto& rec : records) {
    for (const auto& s : rec.steps) acc[s.state] += s.dt;
  }
  states_.reserve(acc.size());
  time_.resize(static_cast<Index>(acc.size()));
  points_.resize(static_cast<Index>(acc.size()), cloud.ambient_dim());
  Index k = 0;
  for (const auto& [state, t] : acc) {
    states_.push_back(state);
    time_(k) = t;
    points_.row(k) = cloud.points().row(state);
    ++k;
  }
}

std::vector<WeightedSample> VisitTable::ball(const Vec& p, double r) const {
  std::vector<WeightedSample> out;
  const double r2 = r * r;
  for (Index k = 0; k < points_.rows(); ++k) {
    if ((points_.row(k).transpose() - p).squaredNorm() < r2) out.push_back({states_[k], time_(k)});
  }
  return out;
}

Index VisitTable::nearest(const Vec& p) const {
  if (states_.empty()) throw Error("nearest visited state requested from an empty trajectory");
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < points_.rows(); ++k) {
    const double d = (points_.row(k).transpose() - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return states_[best];
}

std::vector<WeightedSample> collect_ball(const VisitTable& visits, const Vec& p, double r0) {
  if (!(r0 > 0.0)) throw Error("collect_ball: radius must be positive");
  return visits.ball(p, r0);
}

Vec local_mean(const PointCloud& cloud, const std::vector<WeightedSample>& samples) {
  if (samples.empty()) throw Error("local_mean: empty sample set");
  Vec acc = Vec::Zero(cloud.ambient_dim());
  double total = 0.0;
  for (const auto& s : samples) {
    acc += s.weight * cloud.point(s.state);
    total += s.weight;
  }
  if (!(total > 0.0)) throw Error("local_mean: samples carry no weight");
  return acc / total;
}

Mat reparameterize(const Mat& points) {
  const Index m = points.rows();
  if (m < 2) throw Error("reparameterize: need at least 2 points");
  std::vector<double> s(m, 0.0);
  for (Index k = 1; k < m; ++k) s[k] = s[k - 1] + (points.row(k) - points.row(k - 1)).norm();
  const double total = s[m - 1];
  if (!(total > 0.0)) throw Error("reparameterize: path has zero length");
  Mat out(m, points.cols());
  out.row(0) = points.row(0);
  out.row(m - 1) = points.row(m - 1);
  Index seg = 0;
  for (Index k = 1; k < m - 1; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(m - 1);
    while (seg + 1 < m - 1 && s[seg + 1] <= target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double w = len > 0.0 ? (target - s[seg]) / len : 0.0;
    out.row(k) = (1.0 - w) * points.row(seg) + w * points.row(seg + 1);
  }
  return out;
}

MeanPathState init_path(Index a_rep, Index b_rep, int m, const PointCloud& cloud, const VisitTable& visits,
                        double radius) {
  if (m < 3) throw Error("init_path: need M >= 3");
  if (a_rep == b_rep) throw Error("init_path: A and B representatives coincide");
  if (visits.empty()) throw Error("init_path: no trajectory data");
  if (!(radius > 0.0)) throw Error("init_path: ball radius must be positive");
  MeanPathState st;
  st.radius = radius;
  st.points.resize(m, cloud.ambient_dim());
  st.nodes.resize(m);
  st.empty_ball.assign(m, 0);
  const Vec a = cloud.point(a_rep), b = cloud.point(b_rep);
  st.points.row(0) = a.transpose();
  st.nodes[0] = a_rep;
  st.points.row(m - 1) = b.transpose();
  st.nodes[m - 1] = b_rep;
  for (int k = 1; k < m - 1; ++k) {
    const Vec chord = a + (b - a) * (static_cast<double>(k) / (m - 1));
    const Index s = visits.nearest(chord);
    st.nodes[k] = s;
    st.points.row(k) = cloud.points().row(s);
  }
  return st;
}

MeanPathResult iterate_mean_path(const PointCloud& cloud, const VisitTable& visits, MeanPathState state,
                                 const MeanPathOptions& options) {
  const Index m = state.points.rows();
  if (m < 3) throw Error("iterate_mean_path: need M >= 3");
  MeanPathResult res;
  Mat previous_hat = state.points;
  state.converged = false;
  for (int l = 1; l <= options.max_iterations; ++l) {
    Mat tilde = state.points;
    int empty = 0;
    for (Index k = 1; k < m - 1; ++k) {
      const auto samples = collect_ball(visits, state.points.row(k).transpose(), state.radius);
      state.empty_ball[k] = samples.empty();
      if (samples.empty()) {
        ++empty;
        continue;
      }
      tilde.row(k) = local_mean(cloud, samples).transpose();
    }
    if (empty == m - 2)
      throw Error("iterate_mean_path: every ball is empty; increase the ball radius r0 (currently " +
                  std::to_string(state.radius) + ")");
    if (empty > options.max_empty_fraction * static_cast<double>(m - 2))
      throw Error("iterate_mean_path: " + std::to_string(empty) + " of " + std::to_string(m - 2) +
                  " balls are empty; increase the ball radius r0 (currently " + std::to_string(state.radius) + ")");
    const Mat hat = reparameterize(tilde);
    const double disp = (hat - previous_hat).rowwise().norm().maxCoeff();
    previous_hat = hat;

    std::vector<Index> nodes = state.nodes;
    for (Index k = 1; k < m - 1; ++k) {
      nodes[k] = visits.nearest(hat.row(k).transpose());
      state.points.row(k) = cloud.points().row(nodes[k]);
    }
    const bool same = nodes == state.nodes;
    state.nodes = std::move(nodes);
    state.iteration = l;
    res.history.push_back({l, disp, empty});
    res.last_unprojected = hat;
    if (same || disp < options.tol) {
      state.converged = true;
      break;
    }
  }
  res.state = std::move(state);
  return res;
}

double default_ball_radius(const PointCloud& cloud) {
  const NeighborIndex index(cloud.points());
  std::vector<double> d(cloud.size());
  for (Index i = 0; i < cloud.size(); ++i) d[i] = cloud.distance(i, index.knn(i, 1).front());
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
  return 5.0 * d[d.size() / 2];
}

double hausdorff_distance(const Mat& a, const Mat& b) {
  auto directed = [](const Mat& x, const Mat& y) {
    double worst = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < y.rows(); ++j) best = std::min(best, (x.row(i) - y.row(j)).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace cloudtpt
