#include "cloudtpt/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>

#include "cloudtpt/io.hpp"
#include "cloudtpt/random.hpp"
#include "json.hpp"

namespace cloudtpt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw Error("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw Error("config: " + key + " expects an unsigned integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: " + key + " expects true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string item = trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(parse_real(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + io::format_double(x);
  return out;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift by rounding
  return w >= std::numbers::pi ? -std::numbers::pi : w;
}

}  // namespace

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key), v = trim(raw_value);
  if (key == "experiment") experiment = v;
  else if (key == "n_samples") n_samples = static_cast<Index>(parse_int(key, v));
  else if (key == "eps") eps = parse_real(key, v);
  else if (key == "set_radius") set_radius = parse_real(key, v);
  else if (key == "k_max") k_max = static_cast<std::size_t>(parse_uint(key, v));
  else if (key == "m") m = static_cast<int>(parse_int(key, v));
  else if (key == "l_max") l_max = static_cast<int>(parse_int(key, v));
  else if (key == "r0") r0 = parse_real(key, v);
  else if (key == "neighbors") neighbors = static_cast<int>(parse_int(key, v));
  else if (key == "seed") seed = parse_uint(key, v);
  else if (key == "output") output = v;
  else if (key == "walkers") walkers = static_cast<int>(parse_int(key, v));
  else if (key == "uncontrolled") uncontrolled = parse_bool(key, v);
  else if (key == "meanpath") meanpath = parse_bool(key, v);
  else if (key == "mep") mep = parse_bool(key, v);
  else if (key == "mep_images") mep_images = static_cast<int>(parse_int(key, v));
  else if (key == "major_radius") major_radius = parse_real(key, v);
  else if (key == "minor_radius") minor_radius = parse_real(key, v);
  else if (key == "torus_sampling") torus_sampling = v;
  else if (key == "dihedrals") dihedrals = v;
  else if (key == "energy_grid") energy_grid = v;
  else if (key == "batch") batch = static_cast<Index>(parse_int(key, v));
  else if (key == "n_aux") n_aux = static_cast<Index>(parse_int(key, v));
  else if (key == "window") window = static_cast<int>(parse_int(key, v));
  else if (key == "a_angles") a_angles = parse_list(key, v);
  else if (key == "b_angles") b_angles = parse_list(key, v);
  else if (key == "cloud") cloud = v;
  else if (key == "landscape") landscape = v;
  else if (key == "a_center") a_center = parse_list(key, v);
  else if (key == "b_center") b_center = parse_list(key, v);
  else throw Error("config: unknown key '" + key + "'");
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  return {
      {"experiment", experiment},
      {"n_samples", std::to_string(n_samples)},
      {"eps", eps ? io::format_double(*eps) : std::string()},
      {"set_radius", io::format_double(set_radius)},
      {"k_max", std::to_string(k_max)},
      {"m", std::to_string(m)},
      {"l_max", std::to_string(l_max)},
      {"r0", io::format_double(r0)},
      {"neighbors", std::to_string(neighbors)},
      {"seed", std::to_string(seed)},
      {"output", output},
      {"walkers", std::to_string(walkers)},
      {"uncontrolled", uncontrolled ? "true" : "false"},
      {"meanpath", meanpath ? "true" : "false"},
      {"mep", mep ? "true" : "false"},
      {"mep_images", std::to_string(mep_images)},
      {"major_radius", io::format_double(major_radius)},
      {"minor_radius", io::format_double(minor_radius)},
      {"torus_sampling", torus_sampling},
      {"dihedrals", dihedrals},
      {"energy_grid", energy_grid},
      {"batch", std::to_string(batch)},
      {"n_aux", std::to_string(n_aux)},
      {"window", std::to_string(window)},
      {"a_angles", join(a_angles)},
      {"b_angles", join(b_angles)},
      {"cloud", cloud},
      {"landscape", landscape},
      {"a_center", join(a_center)},
      {"b_center", join(b_center)},
  };
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> kinds{"sphere-mueller", "torus-perturbed", "alanine", "custom"};
  if (!kinds.count(experiment)) throw Error("config: unknown experiment '" + experiment + "'");
  if (experiment == "alanine" && !eps) throw Error("config: eps is mandatory for the alanine experiment");
  if (eps && !(*eps > 0.0)) throw Error("config: eps must be positive");
  if (n_samples < 2) throw Error("config: n_samples must be at least 2");
  if (!(set_radius > 0.0)) throw Error("config: set_radius must be positive");
  if (k_max == 0) throw Error("config: k_max must be positive");
  if (m < 3) throw Error("config: m must be at least 3");
  if (l_max < 1) throw Error("config: l_max must be positive");
  if (r0 < 0.0) throw Error("config: r0 must be nonnegative");
  if (neighbors < 4) throw Error("config: neighbors must be at least 4");
  if (walkers < 1) throw Error("config: walkers must be positive");
  if (mep_images < 3) throw Error("config: mep_images must be at least 3");
  if (!(minor_radius > 0.0) || !(major_radius > minor_radius)) throw Error("config: need major_radius > minor_radius > 0");
  if (torus_sampling != "area" && torus_sampling != "angular") throw Error("config: torus_sampling is area or angular");
  if (experiment == "alanine") {
    if (dihedrals.empty() || energy_grid.empty()) throw Error("config: alanine needs dihedrals and energy_grid");
    if (batch < 1 || n_aux < 0 || window < 1) throw Error("config: batch, n_aux and window must be positive");
    if (a_angles.size() != 2 || b_angles.size() != 2) throw Error("config: a_angles and b_angles take two angles");
  }
  if (experiment == "custom") {
    static const std::set<std::string> scapes{"plane-mueller", "sphere-mueller", "torus-mueller", "torus-perturbed",
                                              "grid-torus"};
    if (cloud.empty()) throw Error("config: custom needs a cloud file");
    if (!scapes.count(landscape)) throw Error("config: unknown landscape '" + landscape + "'");
    if (landscape == "grid-torus" && energy_grid.empty()) throw Error("config: grid-torus needs energy_grid");
    if (a_center.empty() || a_center.size() != b_center.size()) throw Error("config: custom needs a_center and b_center of equal length");
  }
}

ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides) {
  ExperimentConfig c;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error("config: override '" + o + "' is not key=value");
    c.set(o.substr(0, eq), o.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  ExperimentConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, lineno, "expected key=value");
    try {
      c.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error("config: override '" + o + "' is not key=value");
    c.set(o.substr(0, eq), o.substr(eq + 1));
  }
  return c;
}

DihedralSeries make_dihedral_series(std::vector<double> t, std::vector<double> phi, std::vector<double> psi) {
  if (t.empty()) throw Error("dihedral series is empty");
  if (t.size() != phi.size() || t.size() != psi.size()) throw Error("dihedral series columns differ in length");
  if (t.size() > 1) {
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw Error("dihedral series time must increase");
    for (std::size_t k = 1; k < t.size(); ++k) {
      const double step = t[k] - t[k - 1];
      if (!(std::abs(step - dt) <= 1e-9 * std::max(std::abs(dt), std::abs(t[k]))))
        throw Error("dihedral series is not equidistant at row " + std::to_string(k));
    }
  }
  for (auto& a : phi) a = wrap_angle(a);
  for (auto& a : psi) a = wrap_angle(a);
  return {std::move(t), std::move(phi), std::move(psi)};
}

DihedralSeries read_dihedrals(const std::string& path) {
  const io::CsvTable tab = io::read_csv(path);
  if (tab.header != std::vector<std::string>{"t", "phi", "psi"}) throw ParseError(path, 1, "expected header t,phi,psi");
  std::vector<double> t, phi, psi;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    if (tab.rows[r].size() != 3) throw ParseError(path, tab.lines[r], "expected 3 fields");
    t.push_back(tab.number(r, 0));
    phi.push_back(tab.number(r, 1));
    psi.push_back(tab.number(r, 2));
  }
  try {
    return make_dihedral_series(std::move(t), std::move(phi), std::move(psi));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(path, 0, e.what());
  }
}

void write_dihedrals(const std::string& path, const DihedralSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "t,phi,psi\n";
  for (std::size_t k = 0; k < series.size(); ++k)
    out << io::format_double(series.t[k]) << ',' << io::format_double(series.phi[k]) << ','
        << io::format_double(series.psi[k]) << '\n';
}

PointCloud embed_dihedrals(const std::vector<Dihedral>& angles, double major_radius, double minor_radius) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(angles.size());
  for (const auto& a : angles) pts.push_back(torus_embed(wrap_angle(a.phi), wrap_angle(a.psi), major_radius, minor_radius));
  // keep the first of each run of identical points
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t i, std::size_t j) {
    return std::lexicographical_compare(pts[i].data(), pts[i].data() + 3, pts[j].data(), pts[j].data() + 3);
  };
  std::stable_sort(order.begin(), order.end(), less);
  std::vector<char> keep(pts.size(), 1);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (pts[order[k]] == pts[order[k - 1]]) keep[order[k]] = 0;
  }
  Mat m(std::count(keep.begin(), keep.end(), 1), 3);
  Index row = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (keep[k]) m.row(row++) = pts[k].transpose();
  }
  return PointCloud(std::move(m), 2);
}

AlanineData ingest_alanine(const std::string& dihedral_file, const std::string& energy_grid_file, double major_radius,
                           double minor_radius) {
  const DihedralSeries s = read_dihedrals(dihedral_file);
  std::vector<Dihedral> angles;
  for (std::size_t k = 0; k < s.size(); ++k) angles.push_back({s.phi[k], s.psi[k]});
  EnergyGrid grid = io::read_energy_grid(energy_grid_file);
  PointCloud cloud = embed_dihedrals(angles, major_radius, minor_radius);
  const Index dropped = static_cast<Index>(angles.size()) - cloud.size();
  Landscape scape = grid_torus_landscape(grid, major_radius, minor_radius);
  return {std::move(cloud), std::move(scape), std::move(grid), dropped};
}

std::vector<Index> sparsify(const DihedralSeries& series, Index batch, std::uint64_t seed) {
  const auto n = static_cast<Index>(series.size());
  if (batch < 0 || batch > n) throw Error("sparsify: batch " + std::to_string(batch) + " exceeds series length " + std::to_string(n));
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // partial Fisher-Yates: the first `batch` slots are a uniform subset
  for (Index k = 0; k < batch; ++k) {
    const Index j = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(idx[k], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(batch));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Dihedral> enrich_transition_region(const DihedralSeries& series, int window, Index n_aux,
                                               std::uint64_t seed, std::optional<std::pair<double, double>> forced_beta) {
  if (series.size() == 0) throw Error("enrich_transition_region: empty series");
  if (window < 1) throw Error("enrich_transition_region: window must be positive");
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  // z = r sin(phi), so the sign of z is the sign of sin(phi)
  std::vector<std::ptrdiff_t> plus, minus;
  std::size_t crossings = 0;
  for (std::ptrdiff_t j = 0; j + 1 < n; ++j) {
    if (!(std::sin(series.phi[j]) > 0.0 && std::sin(series.phi[j + 1]) < 0.0)) continue;
    ++crossings;
    // `window` frames on each side: D+ ends at j (z > 0), D- starts at j + 1 (z < 0)
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, j + 1 - window); i <= j; ++i) plus.push_back(i);
    for (std::ptrdiff_t i = j + 1; i <= std::min(n - 1, j + window); ++i) minus.push_back(i);
  }
  if (crossings == 0) throw Error("enrich_transition_region: no z > 0 to z < 0 crossing; the transition was never sampled");
  Rng rng(seed);
  std::vector<Dihedral> out;
  out.reserve(static_cast<std::size_t>(n_aux));
  for (Index k = 0; k < n_aux; ++k) {
    const auto p = plus[rng.below(plus.size())];
    const auto m = minus[rng.below(minus.size())];
    double b1, b2;
    if (forced_beta) {
      b1 = forced_beta->first;
      b2 = forced_beta->second;
    } else {
      b1 = rng.uniform();
      b2 = rng.uniform();
    }
    out.push_back({wrap_angle(b1 * series.phi[p] + (1.0 - b1) * series.phi[m]),
                   wrap_angle(b2 * series.psi[p] + (1.0 - b2) * series.psi[m])});
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
void run_stage(ExperimentResult& res, const std::string& name, F&& fn) {
  const auto t0 = Clock::now();
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const StateError& e) {
    throw StageError(name, e.what(), e.states());
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  res.timing[name] = std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec lift_plane_point(const std::string& manifold, const Eigen::Vector2d& p, double R, double r) {
  if (manifold == "sphere") return inverse_stereographic(p);
  if (manifold == "torus") return torus_embed(p(0) / r, p(1) / R, R, r);
  return p;
}

Index nearest_in(const PointCloud& cloud, const IndexSet& set, const Vec& center) {
  Index best = set.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (Index i : set) {
    const double d = (cloud.point(i) - center).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Landscape named_landscape(const std::string& name, const ExperimentConfig& c) {
  if (name == "plane-mueller") return mueller_landscape();
  if (name == "sphere-mueller") return pullback_sphere(mueller_landscape());
  if (name == "torus-mueller") return pullback_torus(mueller_landscape(), c.major_radius, c.minor_radius);
  if (name == "torus-perturbed") return pullback_torus(mueller_perturbed_landscape(), c.major_radius, c.minor_radius);
  return grid_torus_landscape(io::read_energy_grid(c.energy_grid), c.major_radius, c.minor_radius);
}

}  // namespace

ExperimentGeometry experiment_geometry(const ExperimentConfig& config) {
  config.validate();
  const double R = config.major_radius, r = config.minor_radius;
  const auto st = mueller_stationary_points();
  ExperimentGeometry g;
  if (config.experiment == "sphere-mueller" || config.experiment == "torus-perturbed") {
    const bool sphere = config.experiment == "sphere-mueller";
    g.landscape = sphere ? pullback_sphere(mueller_landscape()) : pullback_torus(mueller_perturbed_landscape(), R, r);
    const std::string kind = sphere ? "sphere" : "torus";
    g.a_center = lift_plane_point(kind, st[0].location, R, r);
    g.b_center = lift_plane_point(kind, st[2].location, R, r);
    if (sphere) g.mep_manifold = "sphere";
  } else if (config.experiment == "alanine") {
    g.landscape = grid_torus_landscape(io::read_energy_grid(config.energy_grid), R, r);
    g.a_center = torus_embed(config.a_angles[0], config.a_angles[1], R, r);
    g.b_center = torus_embed(config.b_angles[0], config.b_angles[1], R, r);
  } else {
    g.landscape = named_landscape(config.landscape, config);
    g.a_center = Eigen::Map<const Vec>(config.a_center.data(), static_cast<Index>(config.a_center.size()));
    g.b_center = Eigen::Map<const Vec>(config.b_center.data(), static_cast<Index>(config.b_center.size()));
    if (config.landscape == "sphere-mueller") g.mep_manifold = "sphere";
    if (config.landscape == "torus-mueller") g.mep_manifold = "torus";
    if (config.landscape == "plane-mueller") g.mep_manifold = "plane";
  }
  return g;
}

PointCloud experiment_cloud(const ExperimentConfig& config, std::map<std::string, double>* info) {
  config.validate();
  const double R = config.major_radius, r = config.minor_radius;
  if (config.experiment == "sphere-mueller") return sample_sphere_uniform(config.n_samples, config.seed);
  if (config.experiment == "torus-perturbed")
    return sample_torus_uniform(config.n_samples, R, r, config.seed,
                                config.torus_sampling == "area" ? TorusSampling::SurfaceArea : TorusSampling::Angular);
  if (config.experiment == "custom") return io::read_cloud(config.cloud);
  const DihedralSeries series = read_dihedrals(config.dihedrals);
  const auto pick = sparsify(series, config.batch, config.seed);
  std::vector<Dihedral> angles;
  for (Index k : pick) angles.push_back({series.phi[k], series.psi[k]});
  const auto aux = enrich_transition_region(series, config.window, config.n_aux, config.seed + 1);
  angles.insert(angles.end(), aux.begin(), aux.end());
  PointCloud cloud = embed_dihedrals(angles, R, r);
  if (info) {
    const EnergyGrid grid = io::read_energy_grid(config.energy_grid);
    *info = {{"series_length", static_cast<double>(series.size())},
             {"grid_nphi", grid.nphi()},
             {"grid_npsi", grid.npsi()},
             {"auxiliary", static_cast<double>(aux.size())},
             {"dropped_duplicates", static_cast<double>(static_cast<Index>(angles.size()) - cloud.size())}};
  }
  return cloud;
}

ReactionSets reaction_sets(const PointCloud& cloud, const ExperimentGeometry& geometry, double set_radius) {
  if (geometry.a_center.size() != cloud.ambient_dim() || geometry.b_center.size() != cloud.ambient_dim())
    throw Error("A/B centers do not match the cloud dimension");
  ReactionSets s;
  s.a = ball_indices(cloud, geometry.a_center, set_radius);
  s.b = ball_indices(cloud, geometry.b_center, set_radius);
  IndexSet both;
  std::set_intersection(s.a.begin(), s.a.end(), s.b.begin(), s.b.end(), std::back_inserter(both));
  if (!both.empty()) throw StateError("A and B overlap", both);
  s.a_rep = nearest_in(cloud, s.a, geometry.a_center);
  s.b_rep = nearest_in(cloud, s.b, geometry.b_center);
  return s;
}

StringResult reference_mep(const ExperimentGeometry& geometry, const ExperimentConfig& config) {
  if (geometry.mep_manifold.empty()) throw Error("no reference MEP for this landscape");
  const double R = config.major_radius, r = config.minor_radius;
  const auto st = mueller_stationary_points();
  Manifold man;
  man.kind = geometry.mep_manifold == "sphere" ? Domain::Sphere
             : geometry.mep_manifold == "torus" ? Domain::Torus
                                                 : Domain::Plane;
  man.major_radius = R;
  man.minor_radius = r;
  StringOptions opt;
  opt.images = config.mep_images;
  return string_mep(*geometry.landscape, man, lift_plane_point(geometry.mep_manifold, st[0].location, R, r),
                    lift_plane_point(geometry.mep_manifold, st[2].location, R, r), opt);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult res;
  res.config = config;
  run_stage(res, "config", [&] { config.validate(); });
  res.eps = config.eps.value_or(0.1);
  const double eps = res.eps;
  nlohmann::json extra = nlohmann::json::object();

  ExperimentGeometry geo;
  run_stage(res, "sample", [&] {
    std::map<std::string, double> info;
    geo = experiment_geometry(config);
    res.cloud = experiment_cloud(config, &info);
    res.landscape = geo.landscape;
    if (!info.empty()) extra["alanine"] = info;
    if (geo.a_center.size() != res.cloud.ambient_dim()) throw Error("A/B centers do not match the cloud dimension");
  });

  run_stage(res, "tessellate", [&] {
    TessellationOptions opt;
    opt.neighbors = config.neighbors;
    res.tess = build_tessellation(res.cloud, opt);
  });

  run_stage(res, "weights", [&] { res.weights = equilibrium_weights(res.cloud, *res.landscape, eps); });

  run_stage(res, "generator", [&] { res.generator = build_generator(res.tess, res.weights.values, res.cloud); });

  run_stage(res, "committor", [&] {
    const auto sets = reaction_sets(res.cloud, geo, config.set_radius);
    res.a = sets.a;
    res.b = sets.b;
    res.a_rep = sets.a_rep;
    res.b_rep = sets.b_rep;
    res.committor = solve_committor(res.generator, res.a, res.b);
  });

  run_stage(res, "tpt", [&] {
    res.graph = reactive_current(res.generator, res.weights.values, res.committor);
    res.rate = transition_rate(res.graph);
    if (!(res.rate > 0.0)) throw Error("transition rate is not positive: " + io::format_double(res.rate));
    res.eps_ln_rate = eps * (std::log(res.rate) + res.weights.log_offset);
    res.dominant = dominant_path(res.graph, res.cloud);
    res.profile = current_profile(res.dominant.path, res.graph);
  });

  run_stage(res, "control", [&] {
    res.controlled = build_controlled_chain(res.generator, res.committor, res.weights.values, res.tess, res.cloud, eps,
                                            res.weights.energies);
  });

  run_stage(res, "walk", [&] {
    res.controlled_walks = run_controlled_walkers(*res.controlled, res.b, config.k_max, config.seed, config.walkers);
    if (config.uncontrolled) {
      res.uncontrolled_walk =
          run_uncontrolled_walk(jump_chain(res.generator), res.a, res.b, res.a_rep, config.k_max, config.seed);
    }
  });

  if (config.meanpath) {
    run_stage(res, "meanpath", [&] {
      const VisitTable visits(res.cloud, res.controlled_walks);
      const double radius = config.r0 > 0.0 ? config.r0 : default_ball_radius(res.cloud);
      MeanPathOptions opt;
      opt.max_iterations = config.l_max;
      res.mean_path = iterate_mean_path(res.cloud, visits,
                                        init_path(res.a_rep, res.b_rep, config.m, res.cloud, visits, radius), opt);
    });
  }

  if (config.mep && !geo.mep_manifold.empty()) {
    run_stage(res, "mep", [&] {
      res.mep = reference_mep(geo, config);
      res.action = fw_action(res.mep->path, *res.landscape);
    });
  }

  // summary
  nlohmann::json s;
  s["config"] = config.echo();
  s["eps"] = eps;
  s["n"] = res.cloud.size();
  s["clipped_cells"] = res.tess.clipped_cells.size();
  s["A"] = {{"size", res.a.size()}, {"representative", res.a_rep}};
  s["B"] = {{"size", res.b.size()}, {"representative", res.b_rep}};
  s["committor"] = {{"residual", res.committor.residual},
                    {"iterations", res.committor.iterations},
                    {"direct", res.committor.direct}};
  s["rate"] = res.rate;
  s["rate_positive_part"] = res.graph.rate_positive_part;
  s["log_weight_offset"] = res.weights.log_offset;
  s["eps_ln_rate"] = res.eps_ln_rate;
  s["kirchhoff_defect"] = kirchhoff_defect(res.generator, res.weights.values, res.committor);
  nlohmann::json bn = nlohmann::json::array();
  for (const auto& b : res.dominant.bottlenecks) bn.push_back({b.from, b.to, b.capacity});
  s["dominant_path"] = {{"length", res.dominant.path.nodes.size()},
                        {"capacity", path_capacity(res.graph, res.dominant.path.nodes)},
                        {"bottlenecks", bn},
                        {"ties", res.dominant.ties}};
  std::size_t transitions = 0;
  for (const auto& w : res.controlled_walks) transitions += w.segments.size();
  s["controlled_transitions"] = transitions;
  if (res.controlled) s["committor_underflow_states"] = res.controlled->underflow;
  if (res.uncontrolled_walk) s["uncontrolled_transitions"] = res.uncontrolled_walk->segments.size();
  if (res.mean_path) {
    s["mean_path"] = {{"converged", res.mean_path->state.converged},
                      {"iterations", res.mean_path->state.iteration},
                      {"radius", res.mean_path->state.radius},
                      {"hausdorff_to_dominant",
                       hausdorff_distance(res.mean_path->state.points, res.dominant.path.points)}};
  }
  if (res.mep) {
    s["mep"] = {{"action", *res.action},
                {"steps", res.mep->steps},
                {"tangency", res.mep->tangency},
                {"eps_ln_rate_gap", std::abs(res.eps_ln_rate - *res.action)}};
  }
  for (auto& [k, v] : extra.items()) s[k] = v;

  std::vector<std::string> files;
  if (!config.output.empty()) {
    run_stage(res, "write", [&] {
      namespace fs = std::filesystem;
      fs::create_directories(config.output);
      auto at = [&](const std::string& f) {
        files.push_back(f);
        return (fs::path(config.output) / f).string();
      };
      io::write_cloud(at("cloud.csv"), res.cloud);
      io::write_tessellation(at("tess.json"), res.tess);
      io::write_generator(at("generator.csv"), at("measures.csv"), res.generator.offdiag(), res.weights.values, res.tess);
      io::write_index_set(at("A.csv"), res.a);
      io::write_index_set(at("B.csv"), res.b);
      io::write_committor(at("committor.csv"), res.committor.q);
      io::write_committor(at("committor_complement.csv"), res.committor.complement);
      io::write_current(at("current.csv"), res.graph);
      io::write_path(at("dominant_path.csv"), res.dominant.path, res.committor.q);
      io::write_profile(at("profile.csv"), res.profile);
      io::write_energies(at("energies.csv"), res.weights.energies,
                     res.controlled && res.controlled->effective_potential.size() ? &res.controlled->effective_potential
                                                                                   : nullptr);
      io::write_generator(at("controlled_generator.csv"), at("controlled_measures.csv"), res.controlled->rates,
                          res.controlled->effective_weights, res.tess);
      io::write_exit(at("exit.csv"), res.controlled->exit);
      for (std::size_t w = 0; w < res.controlled_walks.size(); ++w) {
        const std::string suffix = w == 0 ? "" : "_" + std::to_string(w);
        io::write_trajectory(at("trajectory" + suffix + ".csv"), res.controlled_walks[w]);
        io::write_segments(at("segments" + suffix + ".csv"), res.controlled_walks[w]);
      }
      if (res.uncontrolled_walk) {
        io::write_trajectory(at("uncontrolled_trajectory.csv"), *res.uncontrolled_walk);
        io::write_segments(at("uncontrolled_segments.csv"), *res.uncontrolled_walk);
      }
      if (res.mean_path) {
        io::write_mean_path(at("mean_path.csv"), res.mean_path->state);
        io::write_diagnostics(at("meanpath_diagnostics.csv"), res.mean_path->history);
      }
      if (res.mep) io::write_mep(at("mep.csv"), *res.mep);
      files.push_back("summary.json");
      files.push_back("timing.json");
    });
  }
  s["files"] = files;
  res.summary = s.dump(2);
  if (!config.output.empty()) {
    namespace fs = std::filesystem;
    std::ofstream(fs::path(config.output) / "summary.json") << res.summary << '\n';
    std::ofstream(fs::path(config.output) / "timing.json") << nlohmann::json(res.timing).dump(2) << '\n';
  }
  return res;
}

}  // namespace cloudtpt
