// Command-line driver. Stage subcommands share one run directory (`--output`):
// each reads the files of the stages before it and writes its own.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "cloudtpt/experiment.hpp"
#include "cloudtpt/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cloudtpt;

namespace {

struct Flags {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_file, "key=value configuration file");
  for (const auto& [key, value] : ExperimentConfig{}.echo()) {
    cmd->add_option("--" + key, flags.values[key], "config key " + key)->default_str(value);
  }
}

ExperimentConfig resolve(const CLI::App* cmd, const Flags& flags) {
  std::vector<std::string> overrides;
  for (const auto& [key, value] : flags.values) {
    if (cmd->count("--" + key) > 0) overrides.push_back(key + "=" + value);
  }
  return flags.config_file.empty() ? config_from_overrides(overrides) : load_config(flags.config_file, overrides);
}

class RunDir {
 public:
  explicit RunDir(const ExperimentConfig& c) : dir_(c.output) {
    if (dir_.empty()) throw Error("--output (the run directory) is required");
    fs::create_directories(dir_);
  }
  std::string operator()(const std::string& name) const { return (dir_ / name).string(); }
  std::string need(const std::string& name) const {
    const auto p = dir_ / name;
    if (!fs::exists(p)) throw Error(p.string() + " is missing; run the stage that writes it first");
    return p.string();
  }

 private:
  fs::path dir_;
};

// Everything the stages after `committor` rebuild from the run directory.
struct Problem {
  ExperimentGeometry geo;
  PointCloud cloud;
  Tessellation tess;
  EquilibriumWeights weights;
  RateMatrix generator;
  ReactionSets sets;
  double eps = 0.1;
};

Problem load_problem(const ExperimentConfig& c, const RunDir& run) {
  Problem p;
  p.eps = c.eps.value_or(0.1);
  p.geo = experiment_geometry(c);
  p.cloud = io::read_cloud(run.need("cloud.csv"));
  p.tess = io::read_tessellation(run.need("tess.json"));
  if (p.tess.size() != p.cloud.size()) throw Error("tess.json and cloud.csv disagree on the number of points");
  p.weights = equilibrium_weights(p.cloud, *p.geo.landscape, p.eps);
  p.generator = build_generator(p.tess, p.weights.values, p.cloud);
  p.sets = reaction_sets(p.cloud, p.geo, c.set_radius);
  return p;
}

CommittorField load_committor(const Problem& p, const RunDir& run) {
  CommittorField f;
  f.q = io::read_committor(run.need("committor.csv"));
  f.a = io::read_index_set(run.need("A.csv"));
  f.b = io::read_index_set(run.need("B.csv"));
  if (f.q.size() != p.cloud.size()) throw Error("committor.csv length does not match the cloud");
  if (fs::exists(run("committor_complement.csv"))) f.complement = io::read_committor(run("committor_complement.csv"));
  f.residual = committor_residual(p.generator, f);
  return f;
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

void stage_sample(const ExperimentConfig& c, const RunDir& run) {
  std::map<std::string, double> info;
  const PointCloud cloud = experiment_cloud(c, &info);
  io::write_cloud(run("cloud.csv"), cloud);
  nlohmann::json j{{"n", cloud.size()}, {"ambient_dim", cloud.ambient_dim()}};
  if (!info.empty()) j["alanine"] = info;
  print(j);
}

void stage_tessellate(const ExperimentConfig& c, const RunDir& run) {
  const PointCloud cloud = io::read_cloud(run.need("cloud.csv"));
  TessellationOptions opt;
  opt.neighbors = c.neighbors;
  const Tessellation tess = build_tessellation(cloud, opt);
  io::write_tessellation(run("tess.json"), tess);
  print({{"cells", tess.size()}, {"faces", tess.face_count()}, {"clipped_cells", tess.clipped_cells.size()},
         {"components", tess.components().size()}});
}

void stage_committor(const ExperimentConfig& c, const RunDir& run) {
  const Problem p = load_problem(c, run);
  const CommittorField f = solve_committor(p.generator, p.sets.a, p.sets.b);
  io::write_generator(run("generator.csv"), run("measures.csv"), p.generator.offdiag(), p.weights.values, p.tess);
  io::write_index_set(run("A.csv"), p.sets.a);
  io::write_index_set(run("B.csv"), p.sets.b);
  io::write_committor(run("committor.csv"), f.q);
  io::write_committor(run("committor_complement.csv"), f.complement);
  print({{"A", p.sets.a.size()}, {"B", p.sets.b.size()}, {"residual", f.residual}, {"direct", f.direct}});
}

void stage_tpt(const ExperimentConfig& c, const RunDir& run) {
  const Problem p = load_problem(c, run);
  const CommittorField f = load_committor(p, run);
  const ReactiveGraph g = reactive_current(p.generator, p.weights.values, f);
  const DominantPath dom = dominant_path(g, p.cloud);
  io::write_current(run("current.csv"), g);
  io::write_path(run("dominant_path.csv"), dom.path, f.q);
  io::write_profile(run("profile.csv"), current_profile(dom.path, g));
  const double rate = transition_rate(g);
  print({{"rate", rate},
         {"eps_ln_rate", rate > 0.0 ? p.eps * (std::log(rate) + p.weights.log_offset) : NAN},
         {"kirchhoff_defect", kirchhoff_defect(p.generator, p.weights.values, f)},
         {"dominant_path_length", dom.path.nodes.size()},
         {"capacity", path_capacity(g, dom.path.nodes)}});
}

ControlledChain controlled(const Problem& p, const CommittorField& f) {
  return build_controlled_chain(p.generator, f, p.weights.values, p.tess, p.cloud, p.eps, p.weights.energies);
}

void stage_control(const ExperimentConfig& c, const RunDir& run) {
  const Problem p = load_problem(c, run);
  const CommittorField f = load_committor(p, run);
  const ControlledChain chain = controlled(p, f);
  io::write_generator(run("controlled_generator.csv"), run("controlled_measures.csv"), chain.rates,
                      chain.effective_weights, p.tess);
  io::write_exit(run("exit.csv"), chain.exit);
  io::write_energies(run("energies.csv"), p.weights.energies, &chain.effective_potential);
  print({{"retained", chain.retained_count()}, {"underflow", chain.underflow.size()}, {"exit_states", chain.exit.size()},
         {"exit_normalization", chain.exit_normalization}});
}

void stage_walk(const ExperimentConfig& c, const RunDir& run) {
  const Problem p = load_problem(c, run);
  const CommittorField f = load_committor(p, run);
  const auto walks = run_controlled_walkers(controlled(p, f), p.sets.b, c.k_max, c.seed, c.walkers);
  std::size_t transitions = 0;
  for (std::size_t w = 0; w < walks.size(); ++w) {
    const std::string suffix = w == 0 ? "" : "_" + std::to_string(w);
    io::write_trajectory(run("trajectory" + suffix + ".csv"), walks[w]);
    io::write_segments(run("segments" + suffix + ".csv"), walks[w]);
    transitions += walks[w].segments.size();
  }
  nlohmann::json j{{"controlled_transitions", transitions}};
  if (c.uncontrolled) {
    const auto u = run_uncontrolled_walk(jump_chain(p.generator), p.sets.a, p.sets.b, p.sets.a_rep, c.k_max, c.seed);
    io::write_trajectory(run("uncontrolled_trajectory.csv"), u);
    io::write_segments(run("uncontrolled_segments.csv"), u);
    j["uncontrolled_transitions"] = u.segments.size();
  }
  print(j);
}

void stage_meanpath(const ExperimentConfig& c, const RunDir& run) {
  const auto geo = experiment_geometry(c);
  const PointCloud cloud = io::read_cloud(run.need("cloud.csv"));
  const auto sets = reaction_sets(cloud, geo, c.set_radius);
  std::vector<TrajectoryRecord> walks;
  for (int w = 0; w < c.walkers; ++w) {
    const std::string suffix = w == 0 ? "" : "_" + std::to_string(w);
    walks.push_back(io::read_trajectory(run.need("trajectory" + suffix + ".csv"), run.need("segments" + suffix + ".csv")));
  }
  const VisitTable visits(cloud, walks);
  const double radius = c.r0 > 0.0 ? c.r0 : default_ball_radius(cloud);
  MeanPathOptions opt;
  opt.max_iterations = c.l_max;
  const auto res = iterate_mean_path(cloud, visits, init_path(sets.a_rep, sets.b_rep, c.m, cloud, visits, radius), opt);
  io::write_mean_path(run("mean_path.csv"), res.state);
  io::write_diagnostics(run("meanpath_diagnostics.csv"), res.history);
  nlohmann::json j{{"converged", res.state.converged}, {"iterations", res.state.iteration}, {"radius", radius}};
  if (fs::exists(run("dominant_path.csv"))) {
    const auto nodes = io::read_path_nodes(run("dominant_path.csv"));
    j["hausdorff_to_dominant"] = hausdorff_distance(res.state.points, make_path(cloud, nodes).points);
  }
  print(j);
}

void stage_mep(const ExperimentConfig& c, const RunDir& run) {
  const auto geo = experiment_geometry(c);
  const StringResult mep = reference_mep(geo, c);
  io::write_mep(run("mep.csv"), mep);
  print({{"action", fw_action(mep.path, *geo.landscape)},
         {"steps", mep.steps},
         {"tangency", mep.tangency},
         {"residual", mep.residual}});
}

void stage_experiment(const ExperimentConfig& c) {
  const ExperimentResult res = run_experiment(c);
  std::cout << res.summary << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transition path theory on point clouds"};
  app.require_subcommand(1);

  using Stage = void (*)(const ExperimentConfig&, const RunDir&);
  const std::vector<std::tuple<std::string, std::string, Stage>> stages{
      {"sample", "sample or ingest the point cloud (cloud.csv)", stage_sample},
      {"tessellate", "approximate Voronoi tessellation (tess.json)", stage_tessellate},
      {"committor", "generator, A/B sets and committor", stage_committor},
      {"tpt", "reactive current, rate and dominant path", stage_tpt},
      {"control", "Doob-transformed chain and exit distribution", stage_control},
      {"walk", "controlled (and uncontrolled) random walks", stage_walk},
      {"meanpath", "mean transition path from the controlled walks", stage_meanpath},
      {"mep", "string-method minimum energy path", stage_mep},
  };

  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> cmds;
  for (const auto& [name, help, fn] : stages) {
    cmds[name] = app.add_subcommand(name, help);
    add_config_flags(cmds[name], flags[name]);
  }
  cmds["experiment"] = app.add_subcommand("experiment", "run the full pipeline and write a run directory");
  add_config_flags(cmds["experiment"], flags["experiment"]);

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    for (const auto& [name, cmd] : cmds) {
      if (!cmd->parsed()) continue;
      const ExperimentConfig c = resolve(cmd, flags[name]);
      c.validate();
      stage = name;
      if (name == "experiment") {
        stage_experiment(c);
      } else {
        const RunDir run(c);
        for (const auto& [sname, help, fn] : stages) {
          if (sname == name) fn(c, run);
        }
      }
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [" << stage << "] " << e.what() << '\n';
    return 1;
  }
  return 0;
}
