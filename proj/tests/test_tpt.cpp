#include <cmath>
#include <functional>
#include <random>

#include "cloudtpt/random.hpp"
#include "cloudtpt/tpt.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cloudtpt;

namespace {

PointCloud line_cloud(Index n) {
  Mat p = Mat::Zero(n, 2);
  for (Index i = 0; i < n; ++i) p(i, 0) = static_cast<double>(i);
  return PointCloud(p, 1);
}

// Graph with committor q = rank / (n - 1) so that edges i -> j need i < j.
ReactiveGraph dag(Index n, const std::vector<ReactiveEdge>& edges) {
  Vec q(n);
  for (Index i = 0; i < n; ++i) q(i) = static_cast<double>(i) / static_cast<double>(n - 1);
  return ReactiveGraph(n, edges, q, {0}, {n - 1});
}

// Max over all 0 -> n-1 paths of the minimum edge weight; -1 if none.
double brute_capacity(const ReactiveGraph& g) {
  std::function<double(Index)> best = [&](Index v) -> double {
    if (v == g.size() - 1) return std::numeric_limits<double>::infinity();
    double out = -1.0;
    for (std::size_t e : g.out(v)) {
      const auto& edge = g.edges()[e];
      const double rest = best(edge.to);
      if (rest >= 0.0) out = std::max(out, std::min(edge.current, rest));
    }
    return out;
  };
  return best(0);
}

}  // namespace

TEST_CASE("reactive density") {
  Vec pi(4), q(4);
  pi << 1, 2, 1, 3;
  q << 0, 1, 0.5, 0.25;
  const Vec rho = reactive_density(pi, q);
  CHECK(rho(0) == 0.0);
  CHECK(rho(1) == 0.0);
  CHECK(rho(2) == 0.25);
  Index best = 0;
  const Vec ratio = rho.cwiseQuotient(pi);
  ratio.maxCoeff(&best);
  CHECK(best == 2);
}

TEST_CASE("path graph current and rate") {
  const auto chain = testing::line_chain(4, 1.0);
  const RateMatrix q = build_generator(chain.tess, Vec::Ones(4), chain.cloud);
  const auto f = solve_committor(q, {0}, {3});
  const ReactiveGraph g = reactive_current(q, Vec::Ones(4), f);
  REQUIRE(g.edges().size() == 3u);
  for (const auto& e : g.edges()) {
    CHECK(e.to == e.from + 1);
    CHECK(std::abs(e.current - 1.0 / 3.0) < 1e-14);
  }
  CHECK(std::abs(transition_rate(g) - 1.0 / 3.0) < 1e-14);

  const auto two = testing::line_chain(2, 1.0);
  Vec pi(2);
  pi << 0.7, 0.2;
  const RateMatrix q2 = build_generator(two.tess, pi, two.cloud);
  const ReactiveGraph g2 = reactive_current(q2, pi, solve_committor(q2, {0}, {1}));
  CHECK(transition_rate(g2) == doctest::Approx(q2(0, 1) * pi(0)).epsilon(1e-14));
}

TEST_CASE("sphere current: Kirchhoff, orientation, Dirichlet identity, symmetry") {
  for (double eps : {1.0, 0.2, 0.05}) {
    const auto p = testing::sphere_problem(2000, eps, 4);
    const auto f = solve_committor(p.q, p.a, p.b);
    const ReactiveGraph g = reactive_current(p.q, p.weights.values, f);
    CHECK(kirchhoff_defect(p.q, p.weights.values, f) <= 1e-9);
    for (const auto& e : g.edges()) CHECK(f.gap(e.from, e.to) > 0.0);
    const double rate = transition_rate(g);
    CHECK(rate > 0.0);
    CHECK(g.rate_positive_part >= rate);

    // k_AB = sum over undirected edges of m_i Q_ij (q_j - q_i)^2
    double energy = 0.0;
    for (Index i = 0; i < p.q.size(); ++i) {
      for (SparseRows::InnerIterator it(p.q.offdiag(), i); it; ++it) {
        if (it.col() > i) energy += p.q.measure()(i) * it.value() * std::pow(f.gap(i, it.col()), 2);
      }
    }
    CHECK(rate == doctest::Approx(energy).epsilon(1e-8));

    const auto back = solve_committor(p.q, p.b, p.a);
    const double rate_ba = transition_rate(reactive_current(p.q, p.weights.values, back));
    CHECK(rate == doctest::Approx(rate_ba).epsilon(1e-8));
  }
}

TEST_CASE("eight-state chain: rate matches a long Gillespie simulation") {
  Rng rng(5);
  const Index n = 8;
  Mat c = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (j == i + 1 || rng.uniform() < 0.3) c(i, j) = c(j, i) = 0.5 + rng.uniform();
    }
  }
  c(0, n - 1) = c(n - 1, 0) = 0.0;
  Vec m(n);
  for (Index i = 0; i < n; ++i) m(i) = 0.5 + rng.uniform();
  m /= m.sum();
  Mat rates = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) rates(i, j) = c(i, j) / m(i);
  }
  const RateMatrix q(SparseRows(rates.sparseView()), m);
  const auto f = solve_committor(q, {0}, {n - 1});
  const double k = transition_rate(reactive_current(q, m, f));

  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Index state = 0, last = 0;  // last set visited: 0 = A, 1 = B
  double time = 0.0;
  long crossings = 0;
  for (long step = 0; step < 10000000; ++step) {
    const double lambda = q.exit_rate(state);
    time += -std::log(1.0 - u(eng)) / lambda;
    double x = u(eng) * lambda;
    Index next = 0;
    for (Index j = 0; j < n; ++j) {
      x -= rates(state, j);
      if (x < 0.0) {
        next = j;
        break;
      }
      next = j;
    }
    state = next;
    if (state == 0) last = 0;
    if (state == n - 1) {
      if (last == 0) ++crossings;
      last = 1;
    }
  }
  CHECK(crossings > 1000);
  CHECK(std::abs(static_cast<double>(crossings) / time - k) / k < 0.1);
}

TEST_CASE("bottleneck and profile on small graphs") {
  // single path with weights (5, 2, 7)
  const ReactiveGraph line = dag(4, {{0, 1, 5.0}, {1, 2, 2.0}, {2, 3, 7.0}});
  const Bottleneck b = bottleneck(line, {0}, {3});
  CHECK(b.from == 1);
  CHECK(b.to == 2);
  CHECK(b.capacity == 2.0);
  const DominantPath dom = dominant_path(line, line_cloud(4));
  CHECK(dom.path.nodes == std::vector<Index>{0, 1, 2, 3});
  const auto prof = current_profile(dom.path, line);
  REQUIRE(prof.size() == 3u);
  CHECK(prof[0].current == 5.0);
  CHECK(prof[1].current == 2.0);
  CHECK(prof[2].current == 7.0);

  // two parallel routes with minima 0.3 and 0.1
  const ReactiveGraph two = dag(4, {{0, 1, 0.5}, {1, 3, 0.3}, {0, 2, 0.1}, {2, 3, 0.9}});
  CHECK(bottleneck(two, {0}, {3}).capacity == 0.3);
  CHECK(dominant_path(two, line_cloud(4)).path.nodes == std::vector<Index>{0, 1, 3});

  const ReactiveGraph cut = dag(3, {{0, 1, 1.0}});
  CHECK_THROWS_AS(bottleneck(cut, {0}, {2}), StateError);
  CHECK_THROWS_AS(path_capacity(line, {0, 2}), StateError);
}

TEST_CASE("random DAGs: dominant path capacity equals brute-force enumeration") {
  Rng rng(31337);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.below(10));
    std::vector<ReactiveEdge> edges;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        if (rng.uniform() < 0.35) edges.push_back({i, j, 0.01 + rng.uniform()});
      }
    }
    const ReactiveGraph g = dag(n, edges);
    const double cap = brute_capacity(g);
    if (cap < 0.0) {
      CHECK_THROWS_AS(bottleneck(g, {0}, {n - 1}), StateError);
      continue;
    }
    ++checked;
    CHECK(bottleneck(g, {0}, {n - 1}).capacity == cap);
    const DominantPath dom = dominant_path(g, line_cloud(n));
    CHECK(dom.path.nodes.front() == 0);
    CHECK(dom.path.nodes.back() == n - 1);
    CHECK(path_capacity(g, dom.path.nodes) == cap);
    for (std::size_t k = 1; k < dom.path.nodes.size(); ++k) CHECK(dom.path.nodes[k] > dom.path.nodes[k - 1]);
  }
  CHECK(checked > 100);
}

TEST_CASE("sphere dominant path: monotone committor, profile minimum is the bottleneck") {
  const auto p = testing::sphere_problem(4000, 0.1, 1);
  const auto f = solve_committor(p.q, p.a, p.b);
  const ReactiveGraph g = reactive_current(p.q, p.weights.values, f);
  const DominantPath dom = dominant_path(g, p.cloud);
  CHECK(contains(p.a, dom.path.nodes.front()));
  CHECK(contains(p.b, dom.path.nodes.back()));
  for (std::size_t k = 1; k < dom.path.nodes.size(); ++k)
    CHECK(f.gap(dom.path.nodes[k - 1], dom.path.nodes[k]) > 0.0);
  const auto prof = current_profile(dom.path, g);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& e : prof) lo = std::min(lo, e.current);
  CHECK(lo == dom.bottlenecks.front().capacity);
  CHECK(lo == bottleneck(g, p.a, p.b).capacity);
}
