#pragma once

#include "cloudtpt/generator.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

/// Forward committor: probability of reaching B before A.
struct CommittorField {
  Vec q;
  /// 1 - q from the problem with A and B exchanged; keeps relative precision
  /// where q rounds to 1.
  Vec complement;
  IndexSet a;
  IndexSet b;
  double residual = 0.0;  ///< committor_residual of q
  int iterations = 0;     ///< conjugate-gradient iterations, 0 for a direct solve
  bool direct = false;

  /// q_j - q_i, taken from whichever of q and 1 - q is smaller at the pair.
  double gap(Index i, Index j) const;
};

enum class CommittorMethod {
  Auto,       ///< direct elimination for n <= 50000, otherwise preconditioned CG with direct fallback
  Iterative,  ///< preconditioned CG only; throws if it misses the tolerance
  Direct,
};

struct CommittorOptions {
  double tol = 1e-10;
  CommittorMethod method = CommittorMethod::Auto;
  /// CG iteration cap as a multiple of the interior size.
  int max_iterations_factor = 10;
};

/// Solves sum_j Q_ij (q_j - q_i) = 0 off A and B with q = 0 on A, q = 1 on B,
/// and the same system with A and B exchanged for `complement`.
///
/// The interior system is symmetrized by the reversible measure m = pi |C|:
/// row i is multiplied by m_i, giving the graph Laplacian with conductances
/// m_i Q_ij = m_j Q_ji. Conjugate gradients run with the Jacobi preconditioner
/// and stop on the row-scaled residual |sum_j Q_ij (q_j - q_i)| / lambda_i,
/// which is insensitive to the many orders of magnitude spanned by m.
CommittorField solve_committor(const RateMatrix& q, const IndexSet& a, const IndexSet& b,
                               const CommittorOptions& options = {});

/// max over interior i of |sum_j Q_ij (q_j - q_i)| / lambda_i.
double committor_residual(const RateMatrix& q, const Vec& values, const IndexSet& a, const IndexSet& b);
inline double committor_residual(const RateMatrix& q, const CommittorField& f) {
  return committor_residual(q, f.q, f.a, f.b);
}

}  // namespace cloudtpt
