#include "cloudtpt/committor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <Eigen/SparseLU>

namespace cloudtpt {

namespace {

enum class Role : unsigned char { Interior, InA, InB };

std::vector<Role> classify(Index n, const IndexSet& a, const IndexSet& b) {
  if (a.empty() || b.empty()) throw Error("committor: A and B must be nonempty");
  std::vector<Role> role(n, Role::Interior);
  for (Index i : a) {
    if (i < 0 || i >= n) throw StateError("committor: A index out of range", {i});
    role[i] = Role::InA;
  }
  IndexSet overlap;
  for (Index i : b) {
    if (i < 0 || i >= n) throw StateError("committor: B index out of range", {i});
    if (role[i] == Role::InA) overlap.push_back(i);
    role[i] = Role::InB;
  }
  if (!overlap.empty()) throw StateError("committor: A and B intersect", overlap);
  return role;
}

void check_reachability(const RateMatrix& q, const std::vector<Role>& role) {
  const Index n = q.size();
  // Walk backwards along positive rates: an interior state is well posed when
  // it can reach A or B.
  std::vector<std::vector<Index>> incoming(n);
  const auto& off = q.offdiag();
  for (Index i = 0; i < n; ++i) {
    for (SparseRows::InnerIterator it(off, i); it; ++it) {
      if (it.value() > 0.0) incoming[it.col()].push_back(i);
    }
  }
  std::vector<char> seen(n, 0);
  std::queue<Index> todo;
  for (Index i = 0; i < n; ++i) {
    if (role[i] != Role::Interior) {
      seen[i] = 1;
      todo.push(i);
    }
  }
  while (!todo.empty()) {
    const Index v = todo.front();
    todo.pop();
    for (Index u : incoming[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        todo.push(u);
      }
    }
  }
  IndexSet stranded;
  for (Index i = 0; i < n; ++i) {
    if (!seen[i]) stranded.push_back(i);
  }
  if (!stranded.empty()) throw StateError("committor: interior component touches neither A nor B", stranded);
}

Vec initial_values(Index n, const std::vector<Role>& role) {
  Vec v = Vec::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (role[i] == Role::InB) v(i) = 1.0;
  }
  return v;
}

// Row-normalized residual sum_j P_ij (q_j - q_i) at interior rows.
Vec scaled_residual(const RateMatrix& q, const Vec& values, const std::vector<Role>& role) {
  const auto& off = q.offdiag();
  Vec r = Vec::Zero(q.size());
  for (Index i = 0; i < q.size(); ++i) {
    if (role[i] != Role::Interior) continue;
    double s = 0.0;
    for (SparseRows::InnerIterator it(off, i); it; ++it) s += it.value() * (values(it.col()) - values(i));
    r(i) = s / q.exit_rate(i);
  }
  return r;
}

void solve_direct(const RateMatrix& q, const std::vector<Role>& role, double tol, Vec& values) {
  const Index n = q.size();
  std::vector<Index> slot(n, -1);
  Index m = 0;
  for (Index i = 0; i < n; ++i) {
    if (role[i] == Role::Interior) slot[i] = m++;
  }
  if (m == 0) return;
  // (I - P_II) q_I = P_IB 1, written for a correction so that refinement
  // steps reuse the same factorization.
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(q.offdiag().nonZeros()) + m);
  const auto& off = q.offdiag();
  for (Index i = 0; i < n; ++i) {
    if (slot[i] < 0) continue;
    t.emplace_back(slot[i], slot[i], 1.0);
    for (SparseRows::InnerIterator it(off, i); it; ++it) {
      if (slot[it.col()] >= 0) t.emplace_back(slot[i], slot[it.col()], -it.value() / q.exit_rate(i));
    }
  }
  Eigen::SparseMatrix<double> mat(m, m);
  mat.setFromTriplets(t.begin(), t.end());
  mat.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(mat);
  if (lu.info() != Eigen::Success) throw Error("committor: sparse factorization failed");

  // Refine until the residual stagnates rather than stopping at `tol`: values
  // far below 1 only gain relative accuracy from the later passes.
  double previous = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 12; ++pass) {
    const Vec r = scaled_residual(q, values, role);
    const double norm = r.lpNorm<Eigen::Infinity>();
    if (norm == 0.0 || (pass > 1 && norm > 0.5 * previous && norm <= 0.01 * tol)) break;
    previous = norm;
    Vec rhs(m);
    for (Index i = 0; i < n; ++i) {
      if (slot[i] >= 0) rhs(slot[i]) = r(i);
    }
    const Vec delta = lu.solve(rhs);
    for (Index i = 0; i < n; ++i) {
      if (slot[i] >= 0) values(i) += delta(slot[i]);
    }
  }
}

// CG on the symmetrized interior system. With c_i proportional to
// sqrt(m_i lambda_i), y = c q solves (I - S) y = c P_IB 1 where
// S_ij = c_i P_ij / c_j = sqrt(P_ij P_ji) under detailed balance. This is the
// Jacobi-scaled form of m Q, but it never forms m_i Q_ij, which underflows
// when the measure spans hundreds of decades. Returns the iteration count, or
// -1 if the cap was hit first.
int solve_pcg(const RateMatrix& q, const std::vector<Role>& role, double tol, int max_iterations, Vec& values) {
  const Index n = q.size();
  const auto& off = q.offdiag();
  const Vec& m = q.measure();
  Vec log_c = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (role[i] != Role::Interior) continue;
    log_c(i) = 0.5 * (std::log(m(i)) + std::log(q.exit_rate(i)));
    top = std::max(top, log_c(i));
  }
  if (!std::isfinite(top)) return 0;
  Vec c = Vec::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (role[i] == Role::Interior) c(i) = std::exp(log_c(i) - top);
  }

  // residual in y coordinates: c_i sum_j P_ij (q_j - q_i)
  auto residual = [&]() {
    Vec r = scaled_residual(q, values, role);
    return Vec(r.cwiseProduct(c));
  };
  auto apply = [&](const Vec& p) {
    Vec out = Vec::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (role[i] != Role::Interior) continue;
      double s = p(i);
      for (SparseRows::InnerIterator it(off, i); it; ++it) {
        const Index j = it.col();
        if (role[j] == Role::Interior) s -= it.value() / q.exit_rate(i) * std::exp(log_c(i) - log_c(j)) * p(j);
      }
      out(i) = s;
    }
    return out;
  };
  // convergence is judged on the row-normalized residual, as in committor_residual
  auto converged = [&]() { return scaled_residual(q, values, role).lpNorm<Eigen::Infinity>() <= tol; };
  auto step_values = [&](double alpha, const Vec& p) {
    for (Index i = 0; i < n; ++i) {
      if (role[i] == Role::Interior) values(i) += alpha * p(i) * std::exp(top - log_c(i));
    }
  };

  if (converged()) return 0;
  Vec r = residual();
  Vec p = r;
  double rr = r.squaredNorm();
  for (int it = 1; it <= max_iterations; ++it) {
    const Vec ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    step_values(alpha, p);
    if (it % 50 == 0) {
      r = residual();
    } else {
      r -= alpha * ap;
    }
    if (r.cwiseQuotient(c + Vec::Constant(n, std::numeric_limits<double>::min())).lpNorm<Eigen::Infinity>() <= tol &&
        converged())
      return it;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return -1;
}

}  // namespace

double committor_residual(const RateMatrix& q, const Vec& values, const IndexSet& a, const IndexSet& b) {
  if (values.size() != q.size()) throw Error("committor_residual: dimension mismatch");
  const auto role = classify(q.size(), a, b);
  return scaled_residual(q, values, role).lpNorm<Eigen::Infinity>();
}

namespace {

CommittorField solve_one(const RateMatrix& q, const IndexSet& a, const IndexSet& b, const CommittorOptions& options) {
  const Index n = q.size();
  const auto role = classify(n, a, b);
  check_reachability(q, role);
  Index interior = 0;
  for (auto r : role) interior += r == Role::Interior;

  CommittorField f;
  f.a = a;
  f.b = b;
  f.q = initial_values(n, role);

  bool use_direct = options.method == CommittorMethod::Direct ||
                    (options.method == CommittorMethod::Auto && n <= 50000);
  if (!use_direct) {
    const int cap = static_cast<int>(std::max<Index>(1, options.max_iterations_factor * interior));
    const int iters = solve_pcg(q, role, options.tol, cap, f.q);
    if (iters >= 0) {
      f.iterations = iters;
    } else if (options.method == CommittorMethod::Iterative) {
      throw Error("committor: conjugate gradients did not reach tolerance in " + std::to_string(cap) + " iterations");
    } else {
      f.iterations = cap;
      f.q = initial_values(n, role);
      use_direct = true;
    }
  }
  if (use_direct) {
    solve_direct(q, role, options.tol, f.q);
    f.direct = true;
  }
  f.residual = committor_residual(q, f);
  return f;
}

}  // namespace

double CommittorField::gap(Index i, Index j) const {
  if (complement.size() != q.size() || q(i) + q(j) <= 1.0) return q(j) - q(i);
  return complement(i) - complement(j);
}

CommittorField solve_committor(const RateMatrix& q, const IndexSet& a, const IndexSet& b,
                               const CommittorOptions& options) {
  CommittorField f = solve_one(q, a, b, options);
  CommittorField back = solve_one(q, b, a, options);
  f.complement = std::move(back.q);
  f.residual = std::max(f.residual, back.residual);
  return f;
}

}  // namespace cloudtpt
