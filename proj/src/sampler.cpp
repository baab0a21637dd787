#include "cloudtpt/sampler.hpp"

#include <future>
#include <numeric>

#include "cloudtpt/random.hpp"

namespace cloudtpt {

double TrajectoryRecord::total_time() const {
  double t = 0.0;
  for (const auto& s : steps) t += s.dt;
  return t;
}

namespace {

Index next_state(const SparseRows& transition, Index i, double eta) {
  double running = 0.0;
  Index last = -1;
  for (SparseRows::InnerIterator it(transition, i); it; ++it) {
    if (it.value() <= 0.0) continue;
    running += it.value();
    last = it.col();
    if (running >= eta) return it.col();
  }
  // running sum fell short of eta by rounding
  return last;
}

Index draw_exit(const std::vector<ExitEntry>& exit, double eta) {
  double running = 0.0;
  for (const auto& e : exit) {
    running += e.probability;
    if (running >= eta) return e.state;
  }
  return exit.back().state;
}

TrajectoryRecord controlled_walk(const ControlledChain& chain, const IndexSet& b, std::size_t max_steps,
                                 std::uint64_t seed, std::uint64_t stream) {
  if (b.empty()) throw Error("run_controlled_walk: B is empty");
  for (Index i : b) {
    if (i < 0 || i >= chain.n || !chain.retained[i]) throw StateError("run_controlled_walk: B must be disjoint from A", {i});
  }
  if (chain.exit.empty()) throw Error("run_controlled_walk: empty exit distribution");
  Rng rng(seed, stream);
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.steps.reserve(max_steps);
  Index state = draw_exit(chain.exit, rng.uniform_open0());
  std::size_t seg_start = 0;
  while (rec.steps.size() < max_steps) {
    const double lam = chain.jump_rates(state);
    if (!(lam > 0.0)) throw StateError("run_controlled_walk: non-positive jump rate", {state});
    rec.steps.push_back({state, rng.exponential(lam)});
    if (contains(b, state)) {
      rec.segments.push_back({seg_start, rec.steps.size() - 1});
      state = draw_exit(chain.exit, rng.uniform_open0());
      seg_start = rec.steps.size();
      continue;
    }
    state = next_state(chain.transition, state, rng.uniform_open0());
  }
  return rec;
}

}  // namespace

TrajectoryRecord run_controlled_walk(const ControlledChain& chain, const IndexSet& b, std::size_t max_steps,
                                     std::uint64_t seed) {
  return controlled_walk(chain, b, max_steps, seed, 0);
}

std::vector<TrajectoryRecord> run_controlled_walkers(const ControlledChain& chain, const IndexSet& b,
                                                     std::size_t max_steps, std::uint64_t seed, int count) {
  std::vector<std::future<TrajectoryRecord>> jobs;
  for (int w = 0; w < count; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      return controlled_walk(chain, b, max_steps, seed, static_cast<std::uint64_t>(w));
    }));
  }
  std::vector<TrajectoryRecord> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

TrajectoryRecord run_uncontrolled_walk(const JumpChain& chain, const IndexSet& a, const IndexSet& b, Index start,
                                       std::size_t max_steps, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw Error("run_uncontrolled_walk: A and B must be nonempty");
  const auto n = chain.jump_rates.size();
  if (start < 0 || start >= n) throw StateError("run_uncontrolled_walk: start out of range", {start});
  Rng rng(seed);
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.steps.reserve(max_steps);
  Index state = start;
  bool from_a = contains(a, state);
  std::size_t seg_start = 0;
  bool open = false;
  while (rec.steps.size() < max_steps) {
    const double lam = chain.jump_rates(state);
    if (!(lam > 0.0)) throw StateError("run_uncontrolled_walk: non-positive jump rate", {state});
    rec.steps.push_back({state, rng.exponential(lam)});
    const std::size_t k = rec.steps.size() - 1;
    if (contains(a, state)) {
      from_a = true;
      open = false;
    } else if (contains(b, state)) {
      if (from_a) {
        rec.segments.push_back({open ? seg_start : k, k});
      }
      from_a = false;
      open = false;
    } else if (from_a && !open) {
      seg_start = k;
      open = true;
    }
    state = next_state(chain.transition, state, rng.uniform_open0());
  }
  return rec;
}

Occupation occupation_statistics(const TrajectoryRecord& record, Index n) {
  Occupation o;
  o.visits.assign(n, 0);
  o.residence = Vec::Zero(n);
  for (const auto& s : record.steps) {
    if (s.state < 0 || s.state >= n) throw StateError("occupation_statistics: state out of range", {s.state});
    ++o.visits[s.state];
    o.residence(s.state) += s.dt;
  }
  return o;
}

}  // namespace cloudtpt
