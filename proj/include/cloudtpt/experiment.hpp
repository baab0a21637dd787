#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cloudtpt/committor.hpp"
#include "cloudtpt/control.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/meanpath.hpp"
#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/potentials.hpp"
#include "cloudtpt/reference.hpp"
#include "cloudtpt/sampler.hpp"
#include "cloudtpt/tpt.hpp"

namespace cloudtpt {

/// Failure inside a pipeline stage. The message starts with "[stage] ".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, IndexSet states = {})
      : Error("[" + stage + "] " + what), stage_(std::move(stage)), states_(std::move(states)) {}
  const std::string& stage() const noexcept { return stage_; }
  const IndexSet& states() const noexcept { return states_; }

 private:
  std::string stage_;
  IndexSet states_;
};

/// Flat key=value configuration. Every key has a default except `eps` for the
/// alanine experiment.
struct ExperimentConfig {
  std::string experiment = "sphere-mueller";  ///< sphere-mueller | torus-perturbed | alanine | custom
  Index n_samples = 4000;
  std::optional<double> eps;
  double set_radius = 0.05;
  std::size_t k_max = 100000;
  int m = 100;
  int l_max = 20;
  double r0 = 0.0;  ///< 0 selects default_ball_radius
  int neighbors = 20;
  std::uint64_t seed = 1;
  std::string output;  ///< run directory; empty keeps everything in memory
  int walkers = 1;
  bool uncontrolled = true;
  bool meanpath = true;
  bool mep = true;
  int mep_images = 100;
  double major_radius = 2.0;
  double minor_radius = 1.0;
  std::string torus_sampling = "area";  ///< area | angular

  // alanine
  std::string dihedrals;    ///< t,phi,psi
  std::string energy_grid;  ///< nphi,npsi grid
  Index batch = 4000;
  Index n_aux = 500;
  int window = 10;
  std::vector<double> a_angles{1.2, -1.2};   ///< (phi, psi) of the A center
  std::vector<double> b_angles{-1.45, 1.3};  ///< (phi, psi) of the B center

  // custom
  std::string cloud;      ///< id,x1,...,xl
  std::string landscape;  ///< plane-mueller | sphere-mueller | torus-mueller | torus-perturbed | grid-torus
  std::vector<double> a_center;
  std::vector<double> b_center;

  /// Applies one `key=value` assignment; unknown keys throw.
  void set(const std::string& key, const std::string& value);
  /// All keys with their current values, as written to the summary.
  std::map<std::string, std::string> echo() const;
  /// Throws on inconsistent or missing values.
  void validate() const;
};

/// Reads a key=value file ('#' starts a comment), then applies the overrides.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides);

struct DihedralSeries {
  std::vector<double> t;
  std::vector<double> phi;  ///< [-pi, pi)
  std::vector<double> psi;  ///< [-pi, pi)
  std::size_t size() const { return t.size(); }
};

/// Validates equidistant increasing time and wraps angles to [-pi, pi).
DihedralSeries make_dihedral_series(std::vector<double> t, std::vector<double> phi, std::vector<double> psi);
/// File rows `t,phi,psi`.
DihedralSeries read_dihedrals(const std::string& path);
void write_dihedrals(const std::string& path, const DihedralSeries& series);

struct Dihedral {
  double phi, psi;
};

/// Points sigma(phi, psi) on the torus; duplicates after embedding are dropped
/// (first occurrence kept).
PointCloud embed_dihedrals(const std::vector<Dihedral>& angles, double major_radius, double minor_radius);

struct AlanineData {
  PointCloud cloud;
  Landscape landscape;
  EnergyGrid grid;
  Index dropped_duplicates;
};

AlanineData ingest_alanine(const std::string& dihedral_file, const std::string& energy_grid_file, double major_radius,
                           double minor_radius);

/// Uniform subset without replacement, returned in ascending time order.
std::vector<Index> sparsify(const DihedralSeries& series, Index batch, std::uint64_t seed);

/// Auxiliary samples from convex combinations of pairs drawn from the windows
/// before (D+) and after (D-) each z > 0 to z < 0 crossing. When set, the
/// forced betas replace the uniform draws.
std::vector<Dihedral> enrich_transition_region(const DihedralSeries& series, int window, Index n_aux,
                                               std::uint64_t seed,
                                               std::optional<std::pair<double, double>> forced_beta = {});

/// Landscape and reaction-set centers implied by a config, independent of the
/// sampled cloud.
struct ExperimentGeometry {
  std::optional<Landscape> landscape;
  Vec a_center, b_center;
  std::string mep_manifold;  ///< sphere | torus | plane; empty when no reference MEP applies
};

ExperimentGeometry experiment_geometry(const ExperimentConfig& config);

/// Samples (sphere, torus) or ingests (alanine, custom) the point cloud.
/// Alanine bookkeeping goes to `info` when given.
PointCloud experiment_cloud(const ExperimentConfig& config, std::map<std::string, double>* info = nullptr);

struct ReactionSets {
  IndexSet a, b;
  Index a_rep = -1, b_rep = -1;  ///< members nearest to the centers
};

/// Balls of radius `set_radius` around the centers; throws if they overlap.
ReactionSets reaction_sets(const PointCloud& cloud, const ExperimentGeometry& geometry, double set_radius);

/// String-method MEP between the lifted Mueller minima X1 and X3.
StringResult reference_mep(const ExperimentGeometry& geometry, const ExperimentConfig& config);

struct ExperimentResult {
  ExperimentConfig config;
  double eps = 0.0;
  PointCloud cloud;
  std::optional<Landscape> landscape;
  Tessellation tess;
  EquilibriumWeights weights;
  RateMatrix generator;
  IndexSet a, b;
  Index a_rep = -1, b_rep = -1;
  CommittorField committor;
  ReactiveGraph graph;
  DominantPath dominant;
  std::vector<ProfileEntry> profile;
  double rate = 0.0;         ///< k_AB with shifted weights
  double eps_ln_rate = 0.0;  ///< eps ln k_AB with raw weights exp(-U/eps)
  std::optional<ControlledChain> controlled;
  std::vector<TrajectoryRecord> controlled_walks;
  std::optional<TrajectoryRecord> uncontrolled_walk;
  std::optional<MeanPathResult> mean_path;
  std::optional<StringResult> mep;
  std::optional<double> action;
  std::map<std::string, double> timing;  ///< seconds per stage
  std::string summary;                   ///< JSON text
};

ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace cloudtpt
