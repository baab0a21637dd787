#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cloudtpt/committor.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

struct ReactiveEdge {
  Index from;
  Index to;
  double current;  ///< J^R_{from,to} > 0
};

/// Directed positive-current graph. Edges go from lower to higher committor,
/// so the graph is acyclic.
class ReactiveGraph {
 public:
  ReactiveGraph() = default;
  /// `complement` is 1 - q with full precision near B; empty means 1 - q.
  ReactiveGraph(Index n, std::vector<ReactiveEdge> edges, Vec committor, IndexSet a, IndexSet b, Vec complement = {});

  Index size() const noexcept { return static_cast<Index>(out_.size()); }
  const std::vector<ReactiveEdge>& edges() const noexcept { return edges_; }
  /// Outgoing edge ids of node i, sorted by target.
  const std::vector<std::size_t>& out(Index i) const { return out_[i]; }
  const Vec& committor() const noexcept { return q_; }
  /// q_j - q_i, from 1 - q where both values are close to 1.
  double gap(Index i, Index j) const;
  const IndexSet& a() const noexcept { return a_; }
  const IndexSet& b() const noexcept { return b_; }
  /// Edge weight, or nullopt when (i, j) is not an edge.
  std::optional<double> current(Index i, Index j) const;

  /// Signed current out of A, filled by reactive_current.
  double rate = 0.0;
  /// Sum of positive currents out of A only (for comparison with `rate`).
  double rate_positive_part = 0.0;

 private:
  std::vector<ReactiveEdge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  Vec q_;
  Vec complement_;
  IndexSet a_, b_;
};

/// rho^R_i = pi_i q_i (1 - q_i).
Vec reactive_density(const Vec& weights, const Vec& q);

/// J^R_ij = m_i Q_ij (q_j - q_i) with m = pi |C| the measure of `q`, keeping
/// positive-direction edges. `weights` must be the pi that built `q`.
ReactiveGraph reactive_current(const RateMatrix& q, const Vec& weights, const CommittorField& committor);

/// k_AB = sum_{i in A} sum_{j in VF(i)} J^R_ij with signed currents.
double transition_rate(const ReactiveGraph& graph);

/// Largest |sum_j J_ij| / (pi_i lambda_i) over interior nodes.
double kirchhoff_defect(const RateMatrix& q, const Vec& weights, const CommittorField& committor);

struct Bottleneck {
  Index from;
  Index to;
  double capacity;
  bool tie = false;  ///< another edge on the surviving path has the same weight
};

/// Max-min capacity edge between source and target sets. Binary search over
/// the sorted distinct edge weights with breadth-first reachability at each
/// probe; the bottleneck is the minimum-weight edge (lexicographically
/// smallest on ties) on a surviving path.
Bottleneck bottleneck(const ReactiveGraph& graph, const IndexSet& sources, const IndexSet& targets);

struct DiscretePath {
  std::vector<Index> nodes;
  Mat points;           ///< rows in path order
  Vec arc_length;       ///< cumulative, starts at 0
};

DiscretePath make_path(const PointCloud& cloud, std::vector<Index> nodes);
DiscretePath make_path(Mat points);

struct DominantPath {
  DiscretePath path;
  std::vector<Bottleneck> bottlenecks;  ///< in discovery order, top level first
  int ties = 0;
};

/// Recursive bottleneck decomposition from A to B.
DominantPath dominant_path(const ReactiveGraph& graph, const PointCloud& cloud);

struct ProfileEntry {
  double arc_position;  ///< arc length at the edge midpoint
  Index from;
  Index to;
  double current;
};

std::vector<ProfileEntry> current_profile(const DiscretePath& path, const ReactiveGraph& graph);

/// Capacity (minimum edge weight) of a node sequence; throws if an edge is missing.
double path_capacity(const ReactiveGraph& graph, const std::vector<Index>& nodes);

}  // namespace cloudtpt
