#include "cloudtpt/control.hpp"

#include <cmath>
#include <limits>

namespace cloudtpt {

Index ControlledChain::retained_count() const {
  Index c = 0;
  for (char r : retained) c += r;
  return c;
}

Mat ControlledChain::dense_retained(std::vector<Index>* order) const {
  std::vector<Index> idx;
  std::vector<Index> slot(n, -1);
  for (Index i = 0; i < n; ++i) {
    if (retained[i]) {
      slot[i] = static_cast<Index>(idx.size());
      idx.push_back(i);
    }
  }
  const auto m = static_cast<Index>(idx.size());
  Mat d = Mat::Zero(m, m);
  for (Index i : idx) {
    for (SparseRows::InnerIterator it(rates, i); it; ++it) d(slot[i], slot[it.col()]) = it.value();
    d(slot[i], slot[i]) = -jump_rates(i);
  }
  if (order) *order = std::move(idx);
  return d;
}

Vec effective_potential_field(const Vec& energies, const Vec& q, double eps) {
  if (energies.size() != q.size()) throw Error("effective_potential_field: length mismatch");
  Vec out(q.size());
  for (Index i = 0; i < q.size(); ++i) {
    out(i) = q(i) > 0.0 ? energies(i) - 2.0 * eps * std::log(q(i)) : std::numeric_limits<double>::infinity();
  }
  return out;
}

ControlledChain build_controlled_chain(const RateMatrix& q, const CommittorField& committor, const Vec& weights,
                                       const Tessellation& tess, const PointCloud& cloud, double eps,
                                       const Vec& energies) {
  const Index n = q.size();
  const IndexSet& a = committor.a;
  const Vec& c = committor.q;
  if (a.empty()) throw Error("build_controlled_chain: A is empty");
  if (c.size() != n || weights.size() != n || tess.size() != n || cloud.size() != n)
    throw Error("build_controlled_chain: dimension mismatch");

  ControlledChain ch;
  ch.n = n;
  ch.removed = a;
  ch.retained.assign(n, 1);
  for (Index i : a) ch.retained[i] = 0;

  for (Index i = 0; i < n; ++i) {
    if (!ch.retained[i]) continue;
    // subnormal measures would break detailed balance at the rounding level
    if (!(c(i) >= 1e-300) || !(c(i) * c(i) * weights(i) * tess.volume(i) >= std::numeric_limits<double>::min())) {
      ch.underflow.push_back(i);
      ch.retained[i] = 0;
    }
  }
  if (static_cast<Index>(a.size() + ch.underflow.size()) >= n)
    throw StateError("build_controlled_chain: committor vanishes at every state off A", ch.underflow);

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(q.offdiag().nonZeros()));
  const auto& off = q.offdiag();
  for (Index i = 0; i < n; ++i) {
    if (!ch.retained[i]) continue;
    for (SparseRows::InnerIterator it(off, i); it; ++it) {
      const Index j = it.col();
      if (ch.retained[j]) t.emplace_back(i, j, c(j) / c(i) * it.value());
    }
  }
  ch.rates = SparseRows(n, n);
  ch.rates.setFromTriplets(t.begin(), t.end());
  ch.rates.makeCompressed();

  // Dropping underflowed states must not cut retained states off from B.
  if (!ch.underflow.empty()) {
    std::vector<std::vector<Index>> incoming(n);
    for (Index i = 0; i < n; ++i) {
      for (SparseRows::InnerIterator it(ch.rates, i); it; ++it) {
        if (it.value() > 0.0) incoming[it.col()].push_back(i);
      }
    }
    std::vector<char> seen(n, 0);
    std::vector<Index> todo;
    for (Index j : committor.b) {
      if (j >= 0 && j < n && ch.retained[j] && !seen[j]) {
        seen[j] = 1;
        todo.push_back(j);
      }
    }
    while (!todo.empty()) {
      const Index v = todo.back();
      todo.pop_back();
      for (Index u : incoming[v]) {
        if (!seen[u]) {
          seen[u] = 1;
          todo.push_back(u);
        }
      }
    }
    for (Index i = 0; i < n; ++i) {
      if (ch.retained[i] && !seen[i])
        throw StateError("build_controlled_chain: committor vanishes at states separating retained states from B",
                         ch.underflow);
    }
  }

  ch.jump_rates = Vec::Zero(n);
  ch.transition = ch.rates;
  IndexSet stuck;
  for (Index i = 0; i < n; ++i) {
    if (!ch.retained[i]) continue;
    double lam = 0.0;
    for (SparseRows::InnerIterator it(ch.rates, i); it; ++it) lam += it.value();
    if (!(lam > 0.0)) stuck.push_back(i);
    ch.jump_rates(i) = lam;
    for (SparseRows::InnerIterator it(ch.transition, i); it; ++it) it.valueRef() /= lam;
  }
  if (!stuck.empty()) throw StateError("build_controlled_chain: retained state with no retained neighbor", stuck);

  ch.effective_weights = Vec::Zero(n);
  ch.reference_measure = Vec::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (!ch.retained[i]) continue;
    ch.effective_weights(i) = c(i) * c(i) * weights(i);
    ch.reference_measure(i) = ch.effective_weights(i) * tess.volume(i);
  }
  if (energies.size() == n) {
    ch.effective_potential = effective_potential_field(energies, c, eps);
    for (Index i : a) ch.effective_potential(i) = std::numeric_limits<double>::infinity();
    for (Index i : ch.underflow) ch.effective_potential(i) = std::numeric_limits<double>::infinity();
  }

  // Exit distribution: P^q_{A j} proportional to q_j (pi_a + pi_j) |Gamma_aj| / |y_a - y_j|,
  // aggregated over every a in A and normalized by Z.
  std::vector<double> mass(n, 0.0);
  for (Index s : a) {
    for (const auto& f : tess.faces(s)) {
      const Index j = f.neighbor;
      if (!ch.retained[j]) continue;
      mass[j] += c(j) * (weights(s) + weights(j)) * f.area / cloud.distance(s, j);
    }
  }
  double z = 0.0;
  for (Index j = 0; j < n; ++j) z += mass[j];
  if (!(z > 0.0)) throw StateError("build_controlled_chain: A has no exit faces", a);
  for (Index j = 0; j < n; ++j) {
    if (mass[j] > 0.0) ch.exit.push_back({j, mass[j] / z});
  }
  ch.exit_normalization = z;
  return ch;
}

double control_value(double qi, double qj, double distance) { return 2.0 * (qj - qi) / distance * 2.0 / (qi + qj); }

std::vector<ControlEdge> discrete_control_field(const Vec& q, const PointCloud& cloud, const Tessellation& tess,
                                                const IndexSet& a) {
  std::vector<ControlEdge> out;
  for (Index i = 0; i < tess.size(); ++i) {
    for (const auto& f : tess.faces(i)) {
      const Index j = f.neighbor;
      if (contains(a, i) && contains(a, j)) continue;
      if (!(q(i) + q(j) > 0.0)) throw StateError("discrete_control_field: q_i + q_j = 0", make_index_set({i, j}));
      out.push_back({i, j, control_value(q(i), q(j), cloud.distance(i, j))});
    }
  }
  return out;
}

}  // namespace cloudtpt
