#pragma once

#include <vector>

#include "cloudtpt/committor.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/potentials.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

struct ExitEntry {
  Index state;
  double probability;
};

/// Doob-transformed chain conditioned to reach B before A. States keep their
/// global indices; rows and columns of A are empty.
struct ControlledChain {
  Index n = 0;
  IndexSet removed;                     ///< A
  IndexSet underflow;                   ///< off A with q or pi^e |C| underflowing, dropped as unreachable
  std::vector<char> retained;           ///< 1 off A and off `underflow`
  SparseRows rates;                     ///< Q^q_ij = (q_j / q_i) Q_ij, i, j off A
  Vec jump_rates;                       ///< lambda^q_i (0 on A)
  SparseRows transition;                ///< P^q_ij
  Vec effective_weights;                ///< pi^e_i = q_i^2 pi_i (0 on A)
  Vec reference_measure;                ///< pi^e_i |C_i|
  Vec effective_potential;              ///< U_i - 2 eps ln q_i, +inf on A
  std::vector<ExitEntry> exit;          ///< start distribution over VF(A) \ A
  double exit_normalization = 0.0;      ///< Z

  Index retained_count() const;
  /// Dense Q^q restricted to retained states, in ascending index order.
  Mat dense_retained(std::vector<Index>* order = nullptr) const;
};

/// Builds the controlled chain from Q and the committor. `energies` feeds the
/// effective potential and may be empty (the field is then left empty).
/// States where q underflows (below 1e-300), or where pi^e_i |C_i| leaves the
/// normal double range, carry no controlled inflow (rates into j scale with
/// q_j) and no exit mass, so they are dropped along with A.
ControlledChain build_controlled_chain(const RateMatrix& q, const CommittorField& committor, const Vec& weights,
                                       const Tessellation& tess, const PointCloud& cloud, double eps,
                                       const Vec& energies = {});

/// U^e = U - 2 eps ln q, +inf where q = 0.
Vec effective_potential_field(const Vec& energies, const Vec& q, double eps);

struct ControlEdge {
  Index from;
  Index to;
  double value;
};

/// v_ij = 2 (q_j - q_i) / |y_j - y_i| * 2 / (q_i + q_j) on every directed
/// tessellation edge except those joining two points of A.
std::vector<ControlEdge> discrete_control_field(const Vec& q, const PointCloud& cloud, const Tessellation& tess,
                                                const IndexSet& a);
double control_value(double qi, double qj, double distance);

}  // namespace cloudtpt
