#include "cloudtpt/tpt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace cloudtpt {

ReactiveGraph::ReactiveGraph(Index n, std::vector<ReactiveEdge> edges, Vec committor, IndexSet a, IndexSet b,
                             Vec complement)
    : edges_(std::move(edges)),
      out_(n),
      q_(std::move(committor)),
      complement_(std::move(complement)),
      a_(std::move(a)),
      b_(std::move(b)) {
  if (q_.size() != n || (complement_.size() != 0 && complement_.size() != n))
    throw Error("ReactiveGraph: committor length mismatch");
  std::sort(edges_.begin(), edges_.end(),
            [](const ReactiveEdge& x, const ReactiveEdge& y) { return x.from != y.from ? x.from < y.from : x.to < y.to; });
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (!(edge.current > 0.0)) throw StateError("reactive edge with non-positive current", make_index_set({edge.from, edge.to}));
    out_[edge.from].push_back(e);
  }
}

double ReactiveGraph::gap(Index i, Index j) const {
  if (complement_.size() == 0 || q_(i) + q_(j) <= 1.0) return q_(j) - q_(i);
  return complement_(i) - complement_(j);
}

std::optional<double> ReactiveGraph::current(Index i, Index j) const {
  for (std::size_t e : out_[i]) {
    if (edges_[e].to == j) return edges_[e].current;
  }
  return std::nullopt;
}

Vec reactive_density(const Vec& weights, const Vec& q) {
  if (weights.size() != q.size()) throw Error("reactive_density: length mismatch");
  return weights.cwiseProduct(q).cwiseProduct((1.0 - q.array()).matrix());
}

ReactiveGraph reactive_current(const RateMatrix& q, const Vec& weights, const CommittorField& committor) {
  const Index n = q.size();
  if (weights.size() != n || committor.q.size() != n) throw Error("reactive_current: dimension mismatch");
  const Vec& c = committor.q;
  // m_i Q_ij = (pi_i + pi_j) |Gamma_ij| / (2 |y_i - y_j|), antisymmetric in (i, j)
  const Vec& m = q.measure();
  std::vector<ReactiveEdge> edges;
  double rate = 0.0, rate_pos = 0.0;
  const auto& off = q.offdiag();
  for (Index i = 0; i < n; ++i) {
    const bool in_a = contains(committor.a, i);
    for (SparseRows::InnerIterator it(off, i); it; ++it) {
      const Index j = it.col();
      const double j_ij = it.value() * m(i) * committor.gap(i, j);
      if (in_a) {
        rate += j_ij;
        if (j_ij > 0.0) rate_pos += j_ij;
      }
      if (j_ij > 0.0) edges.push_back({i, j, j_ij});
    }
  }
  ReactiveGraph g(n, std::move(edges), c, committor.a, committor.b, committor.complement);
  g.rate = rate;
  g.rate_positive_part = rate_pos;
  return g;
}

double transition_rate(const ReactiveGraph& graph) { return graph.rate; }

double kirchhoff_defect(const RateMatrix& q, const Vec& weights, const CommittorField& committor) {
  const Vec& c = committor.q;
  const Vec& m = q.measure();
  if (weights.size() != q.size() || c.size() != q.size()) throw Error("kirchhoff_defect: dimension mismatch");
  double worst = 0.0;
  const auto& off = q.offdiag();
  for (Index i = 0; i < q.size(); ++i) {
    if (contains(committor.a, i) || contains(committor.b, i)) continue;
    double s = 0.0;
    for (SparseRows::InnerIterator it(off, i); it; ++it) s += it.value() * m(i) * committor.gap(i, it.col());
    worst = std::max(worst, std::abs(s) / (m(i) * q.exit_rate(i)));
  }
  return worst;
}

namespace {

struct Subgraph {
  std::vector<char> allowed;  // node mask
  double min_weight;          // keep edges with current >= min_weight
};

// BFS from sources using edges with current >= threshold. Returns the parent
// edge id per node (npos for unreached, and for sources).
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kRoot = kNone - 1;

std::vector<std::size_t> reach(const ReactiveGraph& g, const Subgraph& sub, const IndexSet& sources, double threshold) {
  std::vector<std::size_t> parent(g.size(), kNone);
  std::queue<Index> todo;
  for (Index s : sources) {
    if (sub.allowed[s] && parent[s] == kNone) {
      parent[s] = kRoot;
      todo.push(s);
    }
  }
  const auto& edges = g.edges();
  while (!todo.empty()) {
    const Index v = todo.front();
    todo.pop();
    for (std::size_t e : g.out(v)) {
      const auto& edge = edges[e];
      if (edge.current < threshold || !sub.allowed[edge.to] || parent[edge.to] != kNone) continue;
      parent[edge.to] = e;
      todo.push(edge.to);
    }
  }
  return parent;
}

bool hits(const std::vector<std::size_t>& parent, const IndexSet& targets, Index* which = nullptr) {
  for (Index t : targets) {
    if (parent[t] != kNone) {
      if (which) *which = t;
      return true;
    }
  }
  return false;
}

Bottleneck bottleneck_in(const ReactiveGraph& g, const Subgraph& sub, const IndexSet& sources, const IndexSet& targets) {
  std::vector<double> weights;
  for (const auto& e : g.edges()) {
    if (e.current >= sub.min_weight && sub.allowed[e.from] && sub.allowed[e.to]) weights.push_back(e.current);
  }
  std::sort(weights.begin(), weights.end());
  weights.erase(std::unique(weights.begin(), weights.end()), weights.end());
  if (weights.empty() || !hits(reach(g, sub, sources, weights.front()), targets))
    throw StateError("bottleneck: targets unreachable from sources", targets);
  // invariant: weights[lo] feasible, weights[hi] infeasible (hi may be past the end)
  std::size_t lo = 0, hi = weights.size();
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (hits(reach(g, sub, sources, weights[mid]), targets)) lo = mid;
    else hi = mid;
  }
  const double cap = weights[lo];
  const auto parent = reach(g, sub, sources, cap);
  Index t = -1;
  hits(parent, targets, &t);
  Bottleneck best{-1, -1, std::numeric_limits<double>::infinity(), false};
  int at_min = 0;
  for (Index v = t; parent[v] != kRoot;) {
    const auto& e = g.edges()[parent[v]];
    if (e.current < best.capacity ||
        (e.current == best.capacity && std::make_pair(e.from, e.to) < std::make_pair(best.from, best.to)))
      best = {e.from, e.to, e.current, false};
    if (e.current == cap) ++at_min;
    v = e.from;
  }
  best.tie = at_min > 1;
  return best;
}

void decompose(const ReactiveGraph& g, const Subgraph& sub, const IndexSet& sources, const IndexSet& targets,
               std::vector<Index>& out, std::vector<Bottleneck>& found) {
  Bottleneck bn;
  try {
    bn = bottleneck_in(g, sub, sources, targets);
  } catch (const StateError& e) {
    IndexSet offending = found.empty() ? IndexSet{} : make_index_set({found.back().from, found.back().to});
    throw StateError(std::string("dominant_path: empty subproblem below bottleneck (") + e.what() + ")", offending);
  }
  found.push_back(bn);
  if (contains(sources, bn.from)) {
    out.push_back(bn.from);
  } else {
    Subgraph left{sub.allowed, bn.capacity};
    for (Index i = 0; i < g.size(); ++i) {
      if (g.gap(bn.from, i) > 0.0) left.allowed[i] = 0;
    }
    decompose(g, left, sources, {bn.from}, out, found);
  }
  if (contains(targets, bn.to)) {
    out.push_back(bn.to);
  } else {
    Subgraph right{sub.allowed, bn.capacity};
    for (Index i = 0; i < g.size(); ++i) {
      if (g.gap(bn.to, i) < 0.0) right.allowed[i] = 0;
    }
    decompose(g, right, {bn.to}, targets, out, found);
  }
}

}  // namespace

Bottleneck bottleneck(const ReactiveGraph& graph, const IndexSet& sources, const IndexSet& targets) {
  Subgraph all{std::vector<char>(graph.size(), 1), -std::numeric_limits<double>::infinity()};
  return bottleneck_in(graph, all, sources, targets);
}

DiscretePath make_path(Mat points) {
  DiscretePath p;
  p.points = std::move(points);
  const Index m = p.points.rows();
  p.arc_length = Vec::Zero(m);
  for (Index k = 1; k < m; ++k) p.arc_length(k) = p.arc_length(k - 1) + (p.points.row(k) - p.points.row(k - 1)).norm();
  return p;
}

DiscretePath make_path(const PointCloud& cloud, std::vector<Index> nodes) {
  Mat pts(static_cast<Index>(nodes.size()), cloud.ambient_dim());
  for (std::size_t k = 0; k < nodes.size(); ++k) pts.row(static_cast<Index>(k)) = cloud.points().row(nodes[k]);
  DiscretePath p = make_path(std::move(pts));
  p.nodes = std::move(nodes);
  return p;
}

DominantPath dominant_path(const ReactiveGraph& graph, const PointCloud& cloud) {
  DominantPath out;
  std::vector<Index> nodes;
  Subgraph all{std::vector<char>(graph.size(), 1), -std::numeric_limits<double>::infinity()};
  decompose(graph, all, graph.a(), graph.b(), nodes, out.bottlenecks);
  for (const auto& b : out.bottlenecks) out.ties += b.tie;
  out.path = make_path(cloud, std::move(nodes));
  return out;
}

double path_capacity(const ReactiveGraph& graph, const std::vector<Index>& nodes) {
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const auto w = graph.current(nodes[k - 1], nodes[k]);
    if (!w) throw StateError("path has consecutive nodes that are not joined by a reactive edge", make_index_set({nodes[k - 1], nodes[k]}));
    cap = std::min(cap, *w);
  }
  return cap;
}

std::vector<ProfileEntry> current_profile(const DiscretePath& path, const ReactiveGraph& graph) {
  std::vector<ProfileEntry> out;
  for (std::size_t k = 1; k < path.nodes.size(); ++k) {
    const Index i = path.nodes[k - 1], j = path.nodes[k];
    const auto w = graph.current(i, j);
    if (!w) throw StateError("current_profile: consecutive path nodes are not adjacent", make_index_set({i, j}));
    const auto kk = static_cast<Index>(k);
    out.push_back({0.5 * (path.arc_length(kk - 1) + path.arc_length(kk)), i, j, *w});
  }
  return out;
}

}  // namespace cloudtpt
