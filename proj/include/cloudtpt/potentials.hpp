#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

enum class Domain { Plane, Sphere, Torus, TabulatedGrid };

std::string to_string(Domain d);

/// Energy landscape U : R^l -> R with an optional analytic gradient.
/// Landscapes are pure functions and safe to evaluate concurrently.
class Landscape {
 public:
  using Energy = std::function<double(const Vec&)>;
  using Gradient = std::function<Vec(const Vec&)>;

  Landscape(Domain domain, Index dim, Energy energy, Gradient gradient = {})
      : domain_(domain), dim_(dim), energy_(std::move(energy)), gradient_(std::move(gradient)) {}

  Domain domain() const noexcept { return domain_; }
  Index dim() const noexcept { return dim_; }
  bool has_gradient() const noexcept { return static_cast<bool>(gradient_); }

  double operator()(const Vec& y) const { return energy_(y); }
  Vec gradient(const Vec& y) const;

 private:
  Domain domain_;
  Index dim_;
  Energy energy_;
  Gradient gradient_;
};

struct MuellerParams {
  std::array<double, 4> A{-2.0, -1.0, -1.7, 0.15};
  std::array<double, 4> a{-1.0, -1.0, -6.5, 0.7};
  std::array<double, 4> b{0.0, 0.0, 11.0, 0.6};
  std::array<double, 4> c{-10.0, -10.0, -6.5, 0.7};
  std::array<double, 4> alpha{1.0, 0.0, -0.5, -1.0};
  std::array<double, 4> beta{0.0, 0.5, 1.5, 1.0};
};

struct EnergyAndGradient {
  double value;
  Eigen::Vector2d gradient;
};

EnergyAndGradient mueller(double x, double y, const MuellerParams& p = {});
Eigen::Matrix2d mueller_hessian(double x, double y, const MuellerParams& p = {});

/// Mueller plus 0.15 sin(10 pi X) sin(10 pi Y).
EnergyAndGradient mueller_perturbed(double x, double y, const MuellerParams& p = {});

Landscape mueller_landscape(const MuellerParams& p = {});
Landscape mueller_perturbed_landscape(const MuellerParams& p = {});

/// Stereographic coordinates (X, Y) = (x, y) / (1 - z). Throws at the north pole.
Eigen::Vector2d stereographic(const Vec& y);
/// Inverse stereographic map onto the unit sphere.
Eigen::Vector3d inverse_stereographic(const Eigen::Vector2d& p);

/// U_S2(x, y, z) = U(x / (1 - z), y / (1 - z)). Evaluation at (or numerically
/// at) the north pole throws instead of producing NaN.
Landscape pullback_sphere(const Landscape& plane);

struct TorusAngles {
  double theta;  ///< [-pi, pi)
  double phi;    ///< [0, 2 pi)
};

Eigen::Vector3d torus_embed(double theta, double phi, double major_radius, double minor_radius);
/// Recovers the angles of a point on the torus; throws when the point is
/// further than `tolerance` from the surface.
TorusAngles torus_angles(const Vec& y, double major_radius, double minor_radius, double tolerance = 1e-8);
/// Closest point on the torus surface (used by the string method).
Eigen::Vector3d torus_project(const Vec& y, double major_radius, double minor_radius);

/// U_T2(x, y, z) = U(r theta, R phi).
Landscape pullback_torus(const Landscape& plane, double major_radius, double minor_radius);

/// Periodic table U(phi, psi) on [-pi, pi)^2, bilinear interpolation.
class EnergyGrid {
 public:
  EnergyGrid(int nphi, int npsi, std::vector<double> values);
  int nphi() const noexcept { return nphi_; }
  int npsi() const noexcept { return npsi_; }
  double operator()(double phi, double psi) const;
  Eigen::Vector2d gradient(double phi, double psi) const;
  double at(int i, int j) const { return values_[static_cast<std::size_t>(i) * npsi_ + j]; }

 private:
  int nphi_, npsi_;
  std::vector<double> values_;  // row-major, phi index outer
};

Landscape grid_landscape(const EnergyGrid& grid);
/// Tabulated free energy evaluated through the torus angle map; the first
/// torus angle is phi, the second psi.
Landscape grid_torus_landscape(const EnergyGrid& grid, double major_radius, double minor_radius);

/// Equilibrium weights stored relative to the lowest energy:
/// pi_i = exp(-(U_i - U_min)/eps), so raw weights are exp(log_offset) * pi_i.
/// Relative log-weights below -max_log_ratio are floored there; such states
/// carry no probability at double precision. The default keeps rate ratios
/// sqrt(pi_j / pi_i) near 1e65 so exit-rate sums cannot overflow.
struct EquilibriumWeights {
  Vec values;
  double log_offset = 0.0;  ///< -U_min / eps
  Vec energies;
  double eps = 1.0;
};

EquilibriumWeights equilibrium_weights(const Vec& energies, double eps, double max_log_ratio = 300.0);
EquilibriumWeights equilibrium_weights(const PointCloud& cloud, const Landscape& landscape, double eps,
                                       double max_log_ratio = 300.0);
Vec evaluate(const Landscape& landscape, const PointCloud& cloud);

enum class StationaryKind { Minimum, Saddle, Maximum };

struct StationaryPoint {
  Eigen::Vector2d location;
  StationaryKind kind;
  double energy;
};

struct StationarySearch {
  std::vector<StationaryPoint> points;
  int failed_starts = 0;
};

/// Newton iteration on grad U = 0 from each start, deduplicated to 1e-6 and
/// classified by Hessian eigenvalues. Hessians use central differences of the
/// analytic gradient.
StationarySearch find_stationary_points(const Landscape& plane, const std::vector<Eigen::Vector2d>& starts,
                                        double grad_tol = 1e-10, int max_iterations = 100);

/// Multi-start grid over a box.
std::vector<Eigen::Vector2d> grid_starts(double x0, double x1, double y0, double y1, int nx, int ny);

/// The five Mueller stationary points ordered X1..X5: minima by descending X
/// coordinate (X1 lower right, X3 upper left), then the saddles in the same
/// order.
std::array<StationaryPoint, 5> mueller_stationary_points(const MuellerParams& p = {});

}  // namespace cloudtpt
