#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "cloudtpt/committor.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/potentials.hpp"

namespace cloudtpt::testing {

/// Sphere cloud with the Mueller pullback and A/B balls around X1 and X3.
struct SphereProblem {
  PointCloud cloud;
  Tessellation tess;
  EquilibriumWeights weights;
  RateMatrix q;
  IndexSet a, b;
};

inline SphereProblem sphere_problem(Index n, double eps, std::uint64_t seed, double set_radius = 0.05) {
  SphereProblem p;
  p.cloud = sample_sphere_uniform(n, seed);
  p.tess = build_tessellation(p.cloud);
  p.weights = equilibrium_weights(p.cloud, pullback_sphere(mueller_landscape()), eps);
  p.q = build_generator(p.tess, p.weights.values, p.cloud);
  const auto st = mueller_stationary_points();
  p.a = ball_indices(p.cloud, inverse_stereographic(st[0].location), set_radius);
  p.b = ball_indices(p.cloud, inverse_stereographic(st[2].location), set_radius);
  return p;
}

/// Points at x = k h on a line (embedded in the plane) with unit faces
/// between neighbors and cell length h: a birth-death chain.
struct LineChain {
  PointCloud cloud;
  Tessellation tess;
  double h;
};

inline LineChain line_chain(Index n, double h) {
  Mat pts = Mat::Zero(n, 2);
  for (Index k = 0; k < n; ++k) pts(k, 0) = static_cast<double>(k) * h;
  std::vector<double> vol(static_cast<std::size_t>(n), h);
  std::vector<std::vector<Face>> faces(static_cast<std::size_t>(n));
  for (Index k = 0; k + 1 < n; ++k) {
    faces[k].push_back({k + 1, 1.0});
    faces[k + 1].insert(faces[k + 1].begin(), Face{k, 1.0});
  }
  return {PointCloud(pts, 1), Tessellation(vol, faces), h};
}

/// Fresh scratch directory under the system temp path.
inline std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("cloudtpt_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace cloudtpt::testing
