#include "synthetic.hpp"

#include <cmath>
#include <filesystem>

#include "cloudtpt/io.hpp"
#include "cloudtpt/random.hpp"

namespace cloudtpt::testing {

namespace {

struct Well {
  double phi, psi, depth, kappa;
};

constexpr Well kWells[] = {
    {-1.45, 1.3, 3.0, 2.0},
    {-1.3, -0.7, 2.6, 2.0},
    {1.2, -1.2, 2.2, 2.5},
};

// von Mises bumps: smooth and periodic in both angles
void energy_and_gradient(double phi, double psi, double& u, double& gphi, double& gpsi) {
  u = gphi = gpsi = 0.0;
  for (const auto& w : kWells) {
    const double e = w.depth * std::exp(w.kappa * (std::cos(phi - w.phi) + std::cos(psi - w.psi) - 2.0));
    u -= e;
    gphi += e * w.kappa * std::sin(phi - w.phi);
    gpsi += e * w.kappa * std::sin(psi - w.psi);
  }
}

double wrap(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace

double synthetic_free_energy(double phi, double psi) {
  double u, gx, gy;
  energy_and_gradient(phi, psi, u, gx, gy);
  return u;
}

EnergyGrid synthetic_grid(int n) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) v.push_back(synthetic_free_energy(-M_PI + 2.0 * M_PI * i / n, -M_PI + 2.0 * M_PI * j / n));
  }
  return EnergyGrid(n, n, std::move(v));
}

DihedralSeries synthetic_dihedrals(std::size_t frames, double kt, double dt, int stride, std::uint64_t seed) {
  Rng rng(seed, 7);
  double phi = kWells[0].phi, psi = kWells[0].psi;
  const double noise = std::sqrt(2.0 * kt * dt);
  std::vector<double> t, ph, ps;
  for (std::size_t f = 0; f < frames; ++f) {
    t.push_back(static_cast<double>(f) * dt * stride);
    ph.push_back(phi);
    ps.push_back(psi);
    for (int s = 0; s < stride; ++s) {
      double u, gx, gy;
      energy_and_gradient(phi, psi, u, gx, gy);
      phi = wrap(phi - gx * dt + noise * rng.normal());
      psi = wrap(psi - gy * dt + noise * rng.normal());
    }
  }
  return make_dihedral_series(std::move(t), std::move(ph), std::move(ps));
}

ExperimentConfig write_synthetic_alanine(const std::string& dir, std::size_t frames, double kt, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string dihedrals = (fs::path(dir) / "dihedrals.csv").string();
  const std::string grid = (fs::path(dir) / "grid.csv").string();
  write_dihedrals(dihedrals, synthetic_dihedrals(frames, kt, 1e-3, 20, seed));
  io::write_energy_grid(grid, synthetic_grid(72));
  ExperimentConfig c;
  c.experiment = "alanine";
  c.eps = kt;
  c.dihedrals = dihedrals;
  c.energy_grid = grid;
  c.seed = seed;
  return c;
}

}  // namespace cloudtpt::testing
