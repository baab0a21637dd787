#pragma once

#include <cstdint>
#include <string>

#include "cloudtpt/experiment.hpp"

namespace cloudtpt::testing {

/// Periodic three-well free energy on [-pi, pi)^2 with minima near
/// C7eq (-1.45, 1.3), alpha_R (-1.3, -0.7) and C7ax (1.2, -1.2).
double synthetic_free_energy(double phi, double psi);

/// Tabulates synthetic_free_energy on an n x n periodic grid.
EnergyGrid synthetic_grid(int n);

/// Overdamped Langevin dynamics on the synthetic free energy at temperature
/// `kt`, recorded every `stride` steps of size `dt`.
DihedralSeries synthetic_dihedrals(std::size_t frames, double kt, double dt, int stride, std::uint64_t seed);

/// Writes `dihedrals.csv` and `grid.csv` into `dir` and returns an alanine
/// config pointing at them (eps = kt).
ExperimentConfig write_synthetic_alanine(const std::string& dir, std::size_t frames, double kt, std::uint64_t seed);

}  // namespace cloudtpt::testing
