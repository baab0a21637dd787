#include "cloudtpt/reference.hpp"

#include <algorithm>
#include <cmath>

#include "cloudtpt/meanpath.hpp"

namespace cloudtpt {

Vec Manifold::project(const Vec& y) const {
  switch (kind) {
    case Domain::Sphere: {
      const double r = y.norm();
      if (!(r > 0.0)) throw Error("Manifold::project: origin has no nearest sphere point");
      return y / r;
    }
    case Domain::Torus:
      return torus_project(y, major_radius, minor_radius);
    default:
      return y;
  }
}

Vec Manifold::tangential(const Vec& y, const Vec& v) const {
  Vec normal;
  switch (kind) {
    case Domain::Sphere:
      normal = y.normalized();
      break;
    case Domain::Torus: {
      const double rho = std::hypot(y(0), y(1));
      Vec center = Vec::Zero(3);
      center(0) = major_radius * y(0) / rho;
      center(1) = major_radius * y(1) / rho;
      normal = (y - center).normalized();
      break;
    }
    default:
      return v;
  }
  return v - v.dot(normal) * normal;
}

namespace {

Vec path_tangent(const Mat& p, Index k, const Manifold& manifold) {
  const Vec y = p.row(k).transpose();
  Vec t = manifold.tangential(y, (p.row(k + 1) - p.row(k - 1)).transpose());
  const double n = t.norm();
  return n > 0.0 ? Vec(t / n) : Vec(Vec::Zero(t.size()));
}

Vec normal_force(const Mat& p, Index k, const Landscape& landscape, const Manifold& manifold) {
  const Vec y = p.row(k).transpose();
  const Vec g = manifold.tangential(y, landscape.gradient(y));
  const Vec t = path_tangent(p, k, manifold);
  return g - g.dot(t) * t;
}

double string_energy(const Mat& p, const Landscape& landscape) {
  double e = 0.0;
  for (Index k = 1; k + 1 < p.rows(); ++k) e += landscape(p.row(k).transpose());
  return e;
}

Mat redistribute(const Mat& p, const Manifold& manifold) {
  Mat out = reparameterize(p);
  for (Index k = 1; k + 1 < out.rows(); ++k) out.row(k) = manifold.project(out.row(k).transpose()).transpose();
  return out;
}

}  // namespace

double tangency_residual(const Mat& points, const Landscape& landscape, const Manifold& manifold) {
  double worst = 0.0;
  for (Index k = 1; k + 1 < points.rows(); ++k) worst = std::max(worst, normal_force(points, k, landscape, manifold).norm());
  return worst;
}

StringResult string_mep(const Landscape& landscape, const Manifold& manifold, const Vec& a, const Vec& b,
                        const StringOptions& options) {
  if (options.images < 3) throw Error("string_mep: need at least 3 images");
  if (!landscape.has_gradient()) throw Error("string_mep: landscape has no gradient");
  if (a.size() != landscape.dim() || b.size() != landscape.dim()) throw Error("string_mep: endpoint dimension mismatch");
  for (const Vec* e : {&a, &b}) {
    const double g = manifold.tangential(*e, landscape.gradient(*e)).norm();
    if (!(g < 1e-4)) throw Error("string_mep: endpoint is not a minimum (|grad U| = " + std::to_string(g) + ")");
  }
  const Index m = options.images;
  Mat p(m, a.size());
  for (Index k = 0; k < m; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(m - 1);
    p.row(k) = manifold.project(a + s * (b - a)).transpose();
  }
  p.row(0) = a.transpose();
  p.row(m - 1) = b.transpose();
  p = redistribute(p, manifold);

  StringResult res;
  double h = options.step;
  double energy = string_energy(p, landscape);
  Mat next(m, a.size());
  for (int step = 1; step <= options.max_steps; ++step) {
    next = p;
    for (Index k = 1; k + 1 < m; ++k) {
      const Vec y = p.row(k).transpose();
      next.row(k) = manifold.project(y - h * normal_force(p, k, landscape, manifold)).transpose();
    }
    // descent alone must not raise the energy; redistribution may
    if (string_energy(next, landscape) > energy + 1e-14 * std::abs(energy)) {
      h *= 0.5;
      if (h < 1e-14) throw Error("string_mep: step size underflow");
      continue;
    }
    next = redistribute(next, manifold);
    const double residual = (next - p).rowwise().norm().maxCoeff() / h;
    p.swap(next);
    energy = string_energy(p, landscape);
    res.steps = step;
    res.residual = residual;
    if (residual < options.tol) {
      res.path = make_path(p);
      res.energies.resize(m);
      for (Index k = 0; k < m; ++k) res.energies(k) = landscape(p.row(k).transpose());
      res.tangency = tangency_residual(p, landscape, manifold);
      res.step = h;
      return res;
    }
  }
  throw Error("string_mep: no convergence in " + std::to_string(options.max_steps) + " steps (residual " +
              std::to_string(res.residual) + ")");
}

double fw_action(const Mat& points, const Landscape& landscape) {
  if (points.rows() < 2) throw Error("fw_action: path needs at least 2 points");
  double s = 0.0;
  double prev = landscape(points.row(0).transpose());
  for (Index k = 1; k < points.rows(); ++k) {
    const double u = landscape(points.row(k).transpose());
    s += std::max(u - prev, 0.0);
    prev = u;
  }
  return 2.0 * s;
}

double fw_action(const DiscretePath& path, const Landscape& landscape) { return fw_action(path.points, landscape); }

}  // namespace cloudtpt
