#include <algorithm>
#include <cmath>
#include <random>

#include "cloudtpt/sampler.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cloudtpt;

namespace {

struct LineControlled {
  testing::LineChain chain;
  Vec weights;
  RateMatrix q;
  CommittorField f;
  ControlledChain ch;
};

LineControlled line_controlled(Index n, unsigned seed) {
  LineControlled p{testing::line_chain(n, 1.0), Vec(n), {}, {}, {}};
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (Index i = 0; i < n; ++i) p.weights(i) = u(gen);
  p.q = build_generator(p.chain.tess, p.weights, p.chain.cloud);
  p.f = solve_committor(p.q, {0}, {n - 1});
  p.ch = build_controlled_chain(p.q, p.f, p.weights, p.chain.tess, p.chain.cloud, 0.5);
  return p;
}

// Kolmogorov-Smirnov statistic of a sample against Exp(1).
double ks_exponential(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double cdf = 1.0 - std::exp(-x[k]);
    d = std::max({d, cdf - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - cdf});
  }
  return d;
}

}  // namespace

TEST_CASE("waiting times are exponential with the jump rate") {
  const auto p = line_controlled(12, 2);
  const auto rec = run_controlled_walk(p.ch, {11}, 200000, 9);
  const auto occ = occupation_statistics(rec, 12);
  const auto busiest = static_cast<Index>(std::max_element(occ.visits.begin(), occ.visits.end()) - occ.visits.begin());
  REQUIRE(occ.visits[busiest] >= 1000);
  const double lam = p.ch.jump_rates(busiest);
  std::vector<double> scaled;
  for (const auto& s : rec.steps) {
    if (s.state == busiest) scaled.push_back(lam * s.dt);
  }
  double mean = 0.0;
  for (double x : scaled) mean += x;
  mean /= static_cast<double>(scaled.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
  // 1% critical value of the asymptotic KS distribution
  CHECK(ks_exponential(scaled) <= 1.628 / std::sqrt(static_cast<double>(scaled.size())));
}

TEST_CASE("walks are reproducible from the seed") {
  const auto p = line_controlled(10, 4);
  const auto a = run_controlled_walk(p.ch, {9}, 5000, 3);
  const auto b = run_controlled_walk(p.ch, {9}, 5000, 3);
  const auto c = run_controlled_walk(p.ch, {9}, 5000, 4);
  REQUIRE(a.steps.size() == 5000);
  bool same = true, differ = false;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    same = same && a.steps[k].state == b.steps[k].state && a.steps[k].dt == b.steps[k].dt;
    differ = differ || a.steps[k].dt != c.steps[k].dt;
  }
  CHECK(same);
  CHECK(differ);
  CHECK(a.segments.size() == b.segments.size());

  const auto w = run_controlled_walkers(p.ch, {9}, 2000, 3, 3);
  REQUIRE(w.size() == 3);
  const auto again = run_controlled_walkers(p.ch, {9}, 2000, 3, 3);
  for (int k = 0; k < 3; ++k) CHECK(w[k].steps.back().dt == again[k].steps.back().dt);
  CHECK(w[0].steps[0].dt == a.steps[0].dt);  // walker 0 uses stream 0
  CHECK(w[1].steps[0].dt != w[0].steps[0].dt);
}

TEST_CASE("two-state uncontrolled chain") {
  const auto chain = testing::line_chain(2, 1.0);
  const RateMatrix q = build_generator(chain.tess, Vec::Ones(2), chain.cloud);
  const std::size_t k = 100000;
  const auto rec = run_uncontrolled_walk(jump_chain(q), {0}, {1}, 0, k, 5);
  const double expected = static_cast<double>(k) / 2.0;
  CHECK(std::abs(static_cast<double>(rec.segments.size()) - expected) <= 3.0 * std::sqrt(static_cast<double>(k)));
  const auto occ = occupation_statistics(rec, 2);
  const double total = occ.residence.sum();
  CHECK(total == doctest::Approx(rec.total_time()).epsilon(1e-12));
  CHECK(occ.residence(0) / total == doctest::Approx(0.5).epsilon(0.02));
  for (const auto& s : rec.segments) {
    CHECK(rec.steps[s.end].state == 1);
    CHECK(rec.steps[s.start].state == 1);  // no intermediate states
  }
}

TEST_CASE("controlled residence follows the reactive density") {
  const Index n = 12;
  const auto p = line_controlled(n, 7);
  const auto rec = run_controlled_walk(p.ch, {n - 1}, 400000, 21);
  // reactive occupation of state i is proportional to pi_i |C_i| q_i (1 - q_i)
  Vec target(n - 2);
  for (Index i = 1; i < n - 1; ++i) target(i - 1) = p.q.measure()(i) * p.f.q(i) * (1.0 - p.f.q(i));
  target /= target.sum();

  const int batches = 50;
  const std::size_t per = rec.steps.size() / batches;
  Mat frac(batches, n - 2);
  for (int b = 0; b < batches; ++b) {
    Vec res = Vec::Zero(n);
    for (std::size_t k = b * per; k < (b + 1) * per; ++k) res(rec.steps[k].state) += rec.steps[k].dt;
    const Vec interior = res.segment(1, n - 2);
    frac.row(b) = interior.transpose() / interior.sum();
  }
  for (Index i = 0; i < n - 2; ++i) {
    const double mean = frac.col(i).mean();
    const double sd = std::sqrt((frac.col(i).array() - mean).square().sum() / (batches - 1));
    const double se = sd / std::sqrt(static_cast<double>(batches));
    CHECK_MESSAGE(std::abs(mean - target(i)) <= 3.0 * se, "state ", i + 1, " mean ", mean, " target ", target(i));
  }
}

TEST_CASE("controlled segments run from the exit set to B") {
  const auto p = testing::sphere_problem(1000, 0.2, 3, 0.15);
  const auto f = solve_committor(p.q, p.a, p.b);
  const auto ch = build_controlled_chain(p.q, f, p.weights.values, p.tess, p.cloud, 0.2);
  const auto rec = run_controlled_walk(ch, p.b, 50000, 1);
  REQUIRE(!rec.segments.empty());
  std::vector<char> exit_state(p.cloud.size(), 0);
  for (const auto& e : ch.exit) exit_state[e.state] = 1;
  std::size_t expect_start = 0;
  for (const auto& s : rec.segments) {
    CHECK(s.start == expect_start);
    CHECK(exit_state[rec.steps[s.start].state]);
    CHECK(contains(p.b, rec.steps[s.end].state));
    for (std::size_t k = s.start; k < s.end; ++k) CHECK_FALSE(contains(p.b, rec.steps[k].state));
    expect_start = s.end + 1;
  }
  for (const auto& st : rec.steps) {
    CHECK_FALSE(contains(p.a, st.state));
    CHECK(st.dt > 0.0);
  }
  const auto occ = occupation_statistics(rec, p.cloud.size());
  CHECK(occ.residence.sum() == doctest::Approx(rec.total_time()).epsilon(1e-12));
}

TEST_CASE("controlled walk crosses where the uncontrolled walk cannot") {
  const double eps = 0.1;
  const auto p = testing::sphere_problem(4000, eps, 1);
  const auto f = solve_committor(p.q, p.a, p.b);
  const auto ch = build_controlled_chain(p.q, f, p.weights.values, p.tess, p.cloud, eps);
  const auto controlled = run_controlled_walk(ch, p.b, 100000, 1);
  const auto free = run_uncontrolled_walk(jump_chain(p.q), p.a, p.b, p.a.front(), 100000, 1);
  CHECK(controlled.segments.size() >= 10);
  CHECK(free.segments.empty());
}

TEST_CASE("sampler errors") {
  const auto p = line_controlled(6, 1);
  CHECK_THROWS_AS(run_controlled_walk(p.ch, {}, 10, 1), Error);
  CHECK_THROWS_AS(run_controlled_walk(p.ch, {0}, 10, 1), StateError);
  CHECK_THROWS_AS(run_uncontrolled_walk(jump_chain(p.q), {0}, {5}, 9, 10, 1), StateError);
  CHECK_THROWS_AS(run_uncontrolled_walk(jump_chain(p.q), {}, {5}, 0, 10, 1), Error);
  TrajectoryRecord bad;
  bad.steps.push_back({7, 1.0});
  CHECK_THROWS_AS(occupation_statistics(bad, 6), StateError);
}
