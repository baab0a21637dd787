#pragma once

#include "cloudtpt/potentials.hpp"
#include "cloudtpt/tpt.hpp"
#include "cloudtpt/types.hpp"

namespace cloudtpt {

/// Embedding the string lives on. Plane means the flat coordinate space of the
/// landscape; Sphere is the unit sphere in R^3; Torus uses the given radii.
struct Manifold {
  Domain kind = Domain::Plane;
  double major_radius = 2.0;
  double minor_radius = 1.0;

  /// Closed-form nearest point on the manifold.
  Vec project(const Vec& y) const;
  /// Removes the normal component of v at the manifold point y.
  Vec tangential(const Vec& y, const Vec& v) const;
};

struct StringOptions {
  int images = 100;
  int max_steps = 400000;
  double tol = 1e-5;    ///< on max image displacement per unit step size
  double step = 1e-4;   ///< initial step; halved whenever the string energy rises
};

struct StringResult {
  DiscretePath path;
  Vec energies;                 ///< U at each image
  int steps = 0;
  double residual = 0.0;        ///< final max displacement per unit step
  double tangency = 0.0;        ///< max |grad U orthogonal to the path| over interior images
  double step = 0.0;            ///< step size in use at exit
};

/// Zero-temperature string iteration between two minima. Interior images move
/// against the component of grad U normal to the discrete path (and tangent to
/// the manifold), are projected back to the manifold, then redistributed at
/// equal arc length. Throws if the residual is still >= tol after max_steps.
StringResult string_mep(const Landscape& landscape, const Manifold& manifold, const Vec& a, const Vec& b,
                        const StringOptions& options = {});

/// Twice the total uphill energy gain along the discrete path.
double fw_action(const Mat& points, const Landscape& landscape);
double fw_action(const DiscretePath& path, const Landscape& landscape);

/// max over interior images of the gradient component normal to the path and
/// tangent to the manifold, using central-difference tangents.
double tangency_residual(const Mat& points, const Landscape& landscape, const Manifold& manifold);

}  // namespace cloudtpt
