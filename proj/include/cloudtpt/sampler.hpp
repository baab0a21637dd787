#pragma once

#include <cstdint>
#include <vector>

#include "cloudtpt/control.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

struct Step {
  Index state;
  double dt;  ///< waiting time spent in `state`, > 0
};

/// A recorded segment covers steps [start, end] inclusive; `start` lies in
/// VF(A) and `end` in B.
struct Segment {
  std::size_t start;
  std::size_t end;
};

struct TrajectoryRecord {
  std::vector<Step> steps;
  std::vector<Segment> segments;
  std::uint64_t seed = 0;
  double total_time() const;
};

/// Algorithm for the controlled walk: start from the exit distribution, wait
/// an Exp(lambda^q_i) time, jump by inverting the running sum of P^q_i. in
/// ascending neighbor order; on reaching B close the segment and restart from
/// the exit distribution. Stops after `max_steps` recorded steps.
TrajectoryRecord run_controlled_walk(const ControlledChain& chain, const IndexSet& b, std::size_t max_steps,
                                     std::uint64_t seed);

/// Same mechanics on the uncontrolled jump chain started at `start`. The walk
/// does not restart; an A-to-B transition is counted each time B is entered
/// with A as the most recently visited of the two sets.
TrajectoryRecord run_uncontrolled_walk(const JumpChain& chain, const IndexSet& a, const IndexSet& b, Index start,
                                       std::size_t max_steps, std::uint64_t seed);

struct Occupation {
  std::vector<std::size_t> visits;
  Vec residence;  ///< total time per state
};

Occupation occupation_statistics(const TrajectoryRecord& record, Index n);

/// Independent walkers on distinct sub-seeds (stream ids 0..count-1 of `seed`),
/// run concurrently and concatenated in walker order.
std::vector<TrajectoryRecord> run_controlled_walkers(const ControlledChain& chain, const IndexSet& b,
                                                     std::size_t max_steps, std::uint64_t seed, int count);

}  // namespace cloudtpt
