#include "cloudtpt/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace cloudtpt {

std::string to_string(Domain d) {
  switch (d) {
    case Domain::Plane: return "plane";
    case Domain::Sphere: return "sphere";
    case Domain::Torus: return "torus";
    case Domain::TabulatedGrid: return "tabulated-grid";
  }
  return "unknown";
}

Vec Landscape::gradient(const Vec& y) const {
  if (!gradient_) throw Error("landscape on domain '" + to_string(domain_) + "' has no analytic gradient");
  return gradient_(y);
}

EnergyAndGradient mueller(double x, double y, const MuellerParams& p) {
  EnergyAndGradient out{0.0, Eigen::Vector2d::Zero()};
  for (int k = 0; k < 4; ++k) {
    const double dx = x - p.alpha[k];
    const double dy = y - p.beta[k];
    const double e = p.A[k] * std::exp(p.a[k] * dx * dx + p.b[k] * dx * dy + p.c[k] * dy * dy);
    out.value += e;
    out.gradient.x() += e * (2.0 * p.a[k] * dx + p.b[k] * dy);
    out.gradient.y() += e * (p.b[k] * dx + 2.0 * p.c[k] * dy);
  }
  return out;
}

Eigen::Matrix2d mueller_hessian(double x, double y, const MuellerParams& p) {
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (int k = 0; k < 4; ++k) {
    const double dx = x - p.alpha[k];
    const double dy = y - p.beta[k];
    const double e = p.A[k] * std::exp(p.a[k] * dx * dx + p.b[k] * dx * dy + p.c[k] * dy * dy);
    const double gx = 2.0 * p.a[k] * dx + p.b[k] * dy;
    const double gy = p.b[k] * dx + 2.0 * p.c[k] * dy;
    h(0, 0) += e * (gx * gx + 2.0 * p.a[k]);
    h(1, 1) += e * (gy * gy + 2.0 * p.c[k]);
    h(0, 1) += e * (gx * gy + p.b[k]);
  }
  h(1, 0) = h(0, 1);
  return h;
}

EnergyAndGradient mueller_perturbed(double x, double y, const MuellerParams& p) {
  constexpr double amp = 0.15;
  constexpr double w = 10.0 * M_PI;
  EnergyAndGradient out = mueller(x, y, p);
  const double sx = std::sin(w * x), sy = std::sin(w * y);
  out.value += amp * sx * sy;
  out.gradient.x() += amp * w * std::cos(w * x) * sy;
  out.gradient.y() += amp * w * sx * std::cos(w * y);
  return out;
}

namespace {

Landscape plane_from(EnergyAndGradient (*fn)(double, double, const MuellerParams&), const MuellerParams& p) {
  return Landscape(
      Domain::Plane, 2, [fn, p](const Vec& v) { return fn(v(0), v(1), p).value; },
      [fn, p](const Vec& v) -> Vec { return fn(v(0), v(1), p).gradient; });
}

void require_plane(const Landscape& l, const char* who) {
  if (l.domain() != Domain::Plane || l.dim() != 2) throw Error(std::string(who) + ": input must be a plane landscape");
}

}  // namespace

Landscape mueller_landscape(const MuellerParams& p) { return plane_from(&mueller, p); }
Landscape mueller_perturbed_landscape(const MuellerParams& p) { return plane_from(&mueller_perturbed, p); }

Eigen::Vector2d stereographic(const Vec& y) {
  const double denom = 1.0 - y(2);
  // Beyond this the projected coordinates exceed ~1e8 and the Mueller
  // exponentials are meaningless; treat as the pole.
  if (!(denom > 1e-15)) throw Error("stereographic projection undefined at the north pole (z = 1)");
  return {y(0) / denom, y(1) / denom};
}

Eigen::Vector3d inverse_stereographic(const Eigen::Vector2d& p) {
  const double s = p.squaredNorm();
  return {2.0 * p.x() / (1.0 + s), 2.0 * p.y() / (1.0 + s), (s - 1.0) / (s + 1.0)};
}

Landscape pullback_sphere(const Landscape& plane) {
  require_plane(plane, "pullback_sphere");
  Landscape::Gradient grad;
  if (plane.has_gradient()) {
    grad = [plane](const Vec& y) -> Vec {
      const Eigen::Vector2d p = stereographic(y);
      const Vec g = plane.gradient(p);
      const double inv = 1.0 / (1.0 - y(2));
      Vec out(3);
      out << g(0) * inv, g(1) * inv, (g(0) * p.x() + g(1) * p.y()) * inv;
      return out;
    };
  }
  return Landscape(
      Domain::Sphere, 3, [plane](const Vec& y) { return plane(stereographic(y)); }, std::move(grad));
}

Eigen::Vector3d torus_embed(double theta, double phi, double major_radius, double minor_radius) {
  const double rho = major_radius + minor_radius * std::cos(theta);
  return {rho * std::cos(phi), rho * std::sin(phi), minor_radius * std::sin(theta)};
}

namespace {

double wrap_to(double a, double lo) {
  const double two_pi = 2.0 * M_PI;
  double w = std::fmod(a - lo, two_pi);
  if (w < 0.0) w += two_pi;
  double out = w + lo;
  if (out >= lo + two_pi) out = lo;
  return out;
}

}  // namespace

TorusAngles torus_angles(const Vec& y, double major_radius, double minor_radius, double tolerance) {
  const double rho = std::hypot(y(0), y(1));
  const double s = rho - major_radius;
  const double off = std::abs(std::hypot(s, y(2)) - minor_radius);
  if (!(off <= tolerance) || rho == 0.0)
    throw Error("point is off the torus by " + std::to_string(off) + " (tolerance " + std::to_string(tolerance) + ")");
  return {wrap_to(std::atan2(y(2), s), -M_PI), wrap_to(std::atan2(y(1), y(0)), 0.0)};
}

Eigen::Vector3d torus_project(const Vec& y, double major_radius, double minor_radius) {
  const double rho = std::hypot(y(0), y(1));
  const double phi = rho > 0.0 ? std::atan2(y(1), y(0)) : 0.0;
  const double theta = std::atan2(y(2), rho - major_radius);
  return torus_embed(theta, phi, major_radius, minor_radius);
}

namespace {

// d(theta, phi)/d(x, y, z) rows for a point on (or near) the torus.
Eigen::Matrix<double, 2, 3> torus_angle_jacobian(const Vec& y, double major_radius) {
  const double rho = std::hypot(y(0), y(1));
  const double s = rho - major_radius;
  const double q = s * s + y(2) * y(2);
  Eigen::Matrix<double, 2, 3> j;
  j(0, 0) = -y(2) * (y(0) / rho) / q;
  j(0, 1) = -y(2) * (y(1) / rho) / q;
  j(0, 2) = s / q;
  j(1, 0) = -y(1) / (rho * rho);
  j(1, 1) = y(0) / (rho * rho);
  j(1, 2) = 0.0;
  return j;
}

}  // namespace

Landscape pullback_torus(const Landscape& plane, double major_radius, double minor_radius) {
  require_plane(plane, "pullback_torus");
  if (!(minor_radius > 0.0) || !(major_radius > minor_radius)) throw Error("pullback_torus: need R > r > 0");
  const double R = major_radius, r = minor_radius;
  auto coords = [R, r](const Vec& y) {
    const TorusAngles a = torus_angles(y, R, r);
    return Eigen::Vector2d(r * a.theta, R * a.phi);
  };
  Landscape::Gradient grad;
  if (plane.has_gradient()) {
    grad = [plane, coords, R, r](const Vec& y) -> Vec {
      const Vec g = plane.gradient(coords(y));
      const auto j = torus_angle_jacobian(y, R);
      return (r * g(0)) * j.row(0).transpose() + (R * g(1)) * j.row(1).transpose();
    };
  }
  return Landscape(
      Domain::Torus, 3, [plane, coords](const Vec& y) { return plane(coords(y)); }, std::move(grad));
}

EnergyGrid::EnergyGrid(int nphi, int npsi, std::vector<double> values)
    : nphi_(nphi), npsi_(npsi), values_(std::move(values)) {
  if (nphi_ < 2 || npsi_ < 2) throw Error("energy grid needs at least 2 x 2 nodes");
  if (values_.size() != static_cast<std::size_t>(nphi_) * npsi_) throw Error("energy grid size mismatch");
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error("energy grid contains a non-finite value");
  }
}

namespace {

struct Cell {
  int i0, i1;
  double t;
  double h;
};

Cell locate(double angle, int n) {
  const double h = 2.0 * M_PI / n;
  const double u = (wrap_to(angle, -M_PI) + M_PI) / h;
  int i0 = static_cast<int>(std::floor(u));
  double t = u - i0;
  i0 %= n;
  return {i0, (i0 + 1) % n, t, h};
}

}  // namespace

double EnergyGrid::operator()(double phi, double psi) const {
  const Cell a = locate(phi, nphi_), b = locate(psi, npsi_);
  return (1 - a.t) * (1 - b.t) * at(a.i0, b.i0) + a.t * (1 - b.t) * at(a.i1, b.i0) +
         (1 - a.t) * b.t * at(a.i0, b.i1) + a.t * b.t * at(a.i1, b.i1);
}

Eigen::Vector2d EnergyGrid::gradient(double phi, double psi) const {
  const Cell a = locate(phi, nphi_), b = locate(psi, npsi_);
  const double dphi = ((1 - b.t) * (at(a.i1, b.i0) - at(a.i0, b.i0)) + b.t * (at(a.i1, b.i1) - at(a.i0, b.i1))) / a.h;
  const double dpsi = ((1 - a.t) * (at(a.i0, b.i1) - at(a.i0, b.i0)) + a.t * (at(a.i1, b.i1) - at(a.i1, b.i0))) / b.h;
  return {dphi, dpsi};
}

Landscape grid_landscape(const EnergyGrid& grid) {
  return Landscape(
      Domain::TabulatedGrid, 2, [grid](const Vec& v) { return grid(v(0), v(1)); },
      [grid](const Vec& v) -> Vec { return grid.gradient(v(0), v(1)); });
}

Landscape grid_torus_landscape(const EnergyGrid& grid, double major_radius, double minor_radius) {
  const double R = major_radius, r = minor_radius;
  return Landscape(
      Domain::Torus, 3,
      [grid, R, r](const Vec& y) {
        const TorusAngles a = torus_angles(y, R, r);
        return grid(a.theta, a.phi);
      },
      [grid, R, r](const Vec& y) -> Vec {
        const TorusAngles a = torus_angles(y, R, r);
        const Eigen::Vector2d g = grid.gradient(a.theta, a.phi);
        const auto j = torus_angle_jacobian(y, R);
        return g(0) * j.row(0).transpose() + g(1) * j.row(1).transpose();
      });
}

EquilibriumWeights equilibrium_weights(const Vec& energies, double eps, double max_log_ratio) {
  if (!(eps > 0.0)) throw Error("equilibrium_weights: eps must be positive");
  IndexSet bad;
  double umin = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < energies.size(); ++i) {
    const double u = energies(i);
    if (std::isnan(u) || u == -std::numeric_limits<double>::infinity())
      bad.push_back(i);
    else
      umin = std::min(umin, u);
  }
  if (!bad.empty()) throw StateError("non-finite energy at sample", bad);
  if (!std::isfinite(umin)) throw Error("equilibrium_weights: every energy is +inf");
  EquilibriumWeights w;
  w.eps = eps;
  w.energies = energies;
  w.log_offset = -umin / eps;
  w.values.resize(energies.size());
  for (Index i = 0; i < energies.size(); ++i) {
    const double rel = std::min((energies(i) - umin) / eps, max_log_ratio);
    w.values(i) = std::exp(-rel);
  }
  return w;
}

Vec evaluate(const Landscape& landscape, const PointCloud& cloud) {
  Vec u(cloud.size());
  for (Index i = 0; i < cloud.size(); ++i) {
    try {
      u(i) = landscape(cloud.point(i));
    } catch (const Error& e) {
      throw StateError(std::string("landscape evaluation failed: ") + e.what(), {i});
    }
  }
  return u;
}

EquilibriumWeights equilibrium_weights(const PointCloud& cloud, const Landscape& landscape, double eps,
                                       double max_log_ratio) {
  return equilibrium_weights(evaluate(landscape, cloud), eps, max_log_ratio);
}

namespace {

Eigen::Matrix2d fd_hessian(const Landscape& l, const Eigen::Vector2d& p) {
  constexpr double h = 1e-5;
  Eigen::Matrix2d hess;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e(c) = h;
    hess.col(c) = (l.gradient(p + e) - l.gradient(p - e)) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace

StationarySearch find_stationary_points(const Landscape& plane, const std::vector<Eigen::Vector2d>& starts,
                                        double grad_tol, int max_iterations) {
  require_plane(plane, "find_stationary_points");
  if (!plane.has_gradient()) throw Error("find_stationary_points: landscape needs a gradient");
  StationarySearch out;
  for (const auto& start : starts) {
    Eigen::Vector2d p = start;
    bool ok = false;
    for (int it = 0; it < max_iterations; ++it) {
      const Eigen::Vector2d g = plane.gradient(p);
      if (!g.allFinite()) break;
      if (g.norm() < grad_tol) {
        ok = true;
        break;
      }
      const Eigen::Matrix2d h = fd_hessian(plane, p);
      Eigen::Vector2d step = h.fullPivLu().solve(g);
      if (!step.allFinite()) break;
      const double len = step.norm();
      if (len > 0.1) step *= 0.1 / len;
      p -= step;
    }
    if (!ok) {
      ++out.failed_starts;
      continue;
    }
    const bool dup = std::any_of(out.points.begin(), out.points.end(),
                                 [&](const StationaryPoint& s) { return (s.location - p).norm() < 1e-6; });
    if (dup) continue;
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(fd_hessian(plane, p)).eigenvalues();
    StationaryKind kind = StationaryKind::Saddle;
    if (ev(0) > 0.0) kind = StationaryKind::Minimum;
    else if (ev(1) < 0.0) kind = StationaryKind::Maximum;
    out.points.push_back({p, kind, plane(p)});
  }
  return out;
}

std::vector<Eigen::Vector2d> grid_starts(double x0, double x1, double y0, double y1, int nx, int ny) {
  std::vector<Eigen::Vector2d> s;
  s.reserve(static_cast<std::size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      s.emplace_back(x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1));
    }
  }
  return s;
}

std::array<StationaryPoint, 5> mueller_stationary_points(const MuellerParams& p) {
  constexpr double x0 = -1.5, x1 = 1.2, y0 = -0.2, y1 = 2.0;
  const auto found = find_stationary_points(mueller_landscape(p), grid_starts(x0, x1, y0, y1, 28, 23));
  std::vector<StationaryPoint> minima, saddles;
  for (const auto& s : found.points) {
    const auto& q = s.location;
    if (q.x() < x0 || q.x() > x1 || q.y() < y0 || q.y() > y1) continue;
    if (s.kind == StationaryKind::Minimum) minima.push_back(s);
    if (s.kind == StationaryKind::Saddle) saddles.push_back(s);
  }
  if (minima.size() != 3 || saddles.size() != 2)
    throw Error("Mueller landscape: expected 3 minima and 2 saddles, found " + std::to_string(minima.size()) + " and " +
                std::to_string(saddles.size()));
  auto by_x = [](const StationaryPoint& a, const StationaryPoint& b) { return a.location.x() > b.location.x(); };
  std::sort(minima.begin(), minima.end(), by_x);
  std::sort(saddles.begin(), saddles.end(), by_x);
  return {minima[0], minima[1], minima[2], saddles[0], saddles[1]};
}

}  // namespace cloudtpt
