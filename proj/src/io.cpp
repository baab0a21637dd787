#include "cloudtpt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace cloudtpt::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.exceptions(std::ios::badbit | std::ios::failbit);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& prefix, bool exact) {
  const bool ok = exact ? t.header == prefix
                        : t.header.size() >= prefix.size() &&
                              std::equal(prefix.begin(), prefix.end(), t.header.begin());
  if (!ok) {
    std::string want;
    for (const auto& h : prefix) want += (want.empty() ? "" : ",") + h;
    throw ParseError(t.path, 1, "expected header " + want + (exact ? "" : ",..."));
  }
}

void check_width(const CsvTable& t, std::size_t width) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != width)
      throw ParseError(t.path, t.lines[r],
                       "expected " + std::to_string(width) + " fields, found " + std::to_string(t.rows[r].size()));
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double CsvTable::number(std::size_t r, std::size_t c) const {
  const std::string& s = rows[r][c];
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(path, lines[r], "field " + std::to_string(c + 1) + " is not a number: '" + s + "'");
  if (!std::isfinite(v)) throw ParseError(path, lines[r], "field " + std::to_string(c + 1) + " is not finite");
  return v;
}

Index CsvTable::index(std::size_t r, std::size_t c) const {
  const std::string& s = rows[r][c];
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0)
    throw ParseError(path, lines[r], "field " + std::to_string(c + 1) + " is not a nonnegative integer: '" + s + "'");
  return static_cast<Index>(v);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  CsvTable t;
  t.path = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    t.rows.push_back(split(line));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError(path, 0, "empty file");
  return t;
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  auto out = open_out(path);
  out << "id";
  for (Index c = 0; c < cloud.ambient_dim(); ++c) out << ",x" << c + 1;
  out << '\n';
  for (Index i = 0; i < cloud.size(); ++i) {
    out << i;
    for (Index c = 0; c < cloud.ambient_dim(); ++c) out << ',' << format_double(cloud.points()(i, c));
    out << '\n';
  }
}

PointCloud read_cloud(const std::string& path, int intrinsic_dim) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "id") throw ParseError(path, 1, "expected header id,x1,...,xl");
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    if (t.header[c] != "x" + std::to_string(c)) throw ParseError(path, 1, "expected column x" + std::to_string(c));
  }
  const std::size_t l = t.header.size() - 1;
  check_width(t, l + 1);
  Mat pts(static_cast<Index>(t.rows.size()), static_cast<Index>(l));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.index(r, 0) != static_cast<Index>(r))
      throw ParseError(path, t.lines[r], "ids must run 0,1,2,... in file order");
    for (std::size_t c = 0; c < l; ++c) pts(static_cast<Index>(r), static_cast<Index>(c)) = t.number(r, c + 1);
  }
  return PointCloud(std::move(pts), intrinsic_dim);
}

void write_tessellation(const std::string& path, const Tessellation& tess) {
  nlohmann::json j;
  j["volumes"] = tess.volumes();
  auto faces = nlohmann::json::array();
  for (Index i = 0; i < tess.size(); ++i) {
    for (const auto& f : tess.faces(i)) {
      if (i < f.neighbor) faces.push_back({i, f.neighbor, f.area});
    }
  }
  j["faces"] = std::move(faces);
  j["clipped_cells"] = tess.clipped_cells;
  auto out = open_out(path);
  out << j.dump() << '\n';
}

Tessellation read_tessellation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
  try {
    const auto volumes = j.at("volumes").get<std::vector<double>>();
    const auto n = static_cast<Index>(volumes.size());
    std::vector<std::vector<Face>> faces(volumes.size());
    for (const auto& f : j.at("faces")) {
      const auto i = f.at(0).get<Index>();
      const auto k = f.at(1).get<Index>();
      const double area = f.at(2).get<double>();
      if (!(i >= 0 && i < k && k < n)) throw ParseError(path, 0, "face [" + f.dump() + "] needs 0 <= i < j < n");
      faces[i].push_back({k, area});
      faces[k].push_back({i, area});
    }
    Tessellation t(volumes, std::move(faces));
    if (j.contains("clipped_cells")) t.clipped_cells = j["clipped_cells"].get<IndexSet>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
}

void write_generator(const std::string& rates_path, const std::string& measures_path, const SparseRows& rates,
                     const Vec& weights, const Tessellation& tess) {
  {
    auto out = open_out(rates_path);
    out << "i,j,rate\n";
    for (Index i = 0; i < rates.outerSize(); ++i) {
      for (SparseRows::InnerIterator it(rates, i); it; ++it) {
        out << i << ',' << it.col() << ',' << format_double(it.value()) << '\n';
      }
    }
  }
  auto out = open_out(measures_path);
  out << "i,pi,vol\n";
  for (Index i = 0; i < weights.size(); ++i) {
    out << i << ',' << format_double(weights(i)) << ',' << format_double(tess.volume(i)) << '\n';
  }
}

void write_index_set(const std::string& path, const IndexSet& set) {
  auto out = open_out(path);
  out << "id\n";
  for (Index i : set) out << i << '\n';
}

IndexSet read_index_set(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"id"}, true);
  check_width(t, 1);
  std::vector<Index> v;
  for (std::size_t r = 0; r < t.rows.size(); ++r) v.push_back(t.index(r, 0));
  return make_index_set(std::move(v));
}

void write_committor(const std::string& path, const Vec& q) {
  auto out = open_out(path);
  out << "id,q\n";
  for (Index i = 0; i < q.size(); ++i) out << i << ',' << format_double(q(i)) << '\n';
}

Vec read_committor(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"id", "q"}, true);
  check_width(t, 2);
  Vec q(static_cast<Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.index(r, 0) != static_cast<Index>(r)) throw ParseError(path, t.lines[r], "ids must run 0,1,2,... in file order");
    q(static_cast<Index>(r)) = t.number(r, 1);
  }
  return q;
}

void write_current(const std::string& path, const ReactiveGraph& graph) {
  auto out = open_out(path);
  out << "i,j,J\n";
  for (const auto& e : graph.edges()) out << e.from << ',' << e.to << ',' << format_double(e.current) << '\n';
}

std::vector<ReactiveEdge> read_current(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"i", "j", "J"}, true);
  check_width(t, 3);
  std::vector<ReactiveEdge> edges;
  for (std::size_t r = 0; r < t.rows.size(); ++r) edges.push_back({t.index(r, 0), t.index(r, 1), t.number(r, 2)});
  return edges;
}

void write_path(const std::string& path, const DiscretePath& p, const Vec& q) {
  if (p.nodes.size() != static_cast<std::size_t>(p.points.rows())) throw Error("write_path: path has no node ids");
  auto out = open_out(path);
  out << "order,id";
  for (Index c = 0; c < p.points.cols(); ++c) out << ",x" << c + 1;
  out << ",q\n";
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    out << k << ',' << p.nodes[k];
    for (Index c = 0; c < p.points.cols(); ++c) out << ',' << format_double(p.points(static_cast<Index>(k), c));
    out << ',' << format_double(q(p.nodes[k])) << '\n';
  }
}

std::vector<Index> read_path_nodes(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"order", "id"}, false);
  check_width(t, t.header.size());
  std::vector<Index> nodes;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.index(r, 0) != static_cast<Index>(r)) throw ParseError(path, t.lines[r], "order must run 0,1,2,...");
    nodes.push_back(t.index(r, 1));
  }
  return nodes;
}

void write_exit(const std::string& path, const std::vector<ExitEntry>& exit) {
  auto out = open_out(path);
  out << "j,prob\n";
  for (const auto& e : exit) out << e.state << ',' << format_double(e.probability) << '\n';
}

void write_trajectory(const std::string& path, const TrajectoryRecord& rec) {
  auto out = open_out(path);
  out << "step,id,dt\n";
  for (std::size_t k = 0; k < rec.steps.size(); ++k)
    out << k << ',' << rec.steps[k].state << ',' << format_double(rec.steps[k].dt) << '\n';
}

void write_segments(const std::string& path, const TrajectoryRecord& rec) {
  auto out = open_out(path);
  out << "segment,start_step,end_step\n";
  for (std::size_t k = 0; k < rec.segments.size(); ++k)
    out << k << ',' << rec.segments[k].start << ',' << rec.segments[k].end << '\n';
}

TrajectoryRecord read_trajectory(const std::string& trajectory_path, const std::string& segments_path) {
  TrajectoryRecord rec;
  const CsvTable t = read_csv(trajectory_path);
  expect_header(t, {"step", "id", "dt"}, true);
  check_width(t, 3);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.index(r, 0) != static_cast<Index>(r)) throw ParseError(trajectory_path, t.lines[r], "steps must run 0,1,2,...");
    const double dt = t.number(r, 2);
    if (!(dt > 0.0)) throw ParseError(trajectory_path, t.lines[r], "dt must be positive");
    rec.steps.push_back({t.index(r, 1), dt});
  }
  const CsvTable s = read_csv(segments_path);
  expect_header(s, {"segment", "start_step", "end_step"}, true);
  check_width(s, 3);
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    const auto a = static_cast<std::size_t>(s.index(r, 1));
    const auto b = static_cast<std::size_t>(s.index(r, 2));
    if (a > b || b >= rec.steps.size()) throw ParseError(segments_path, s.lines[r], "segment outside the trajectory");
    rec.segments.push_back({a, b});
  }
  return rec;
}

void write_mean_path(const std::string& path, const MeanPathState& state) {
  auto out = open_out(path);
  out << "order,id";
  for (Index c = 0; c < state.points.cols(); ++c) out << ",x" << c + 1;
  out << '\n';
  for (Index k = 0; k < state.points.rows(); ++k) {
    out << k << ',' << state.nodes[k];
    for (Index c = 0; c < state.points.cols(); ++c) out << ',' << format_double(state.points(k, c));
    out << '\n';
  }
}

void write_diagnostics(const std::string& path, const std::vector<MeanPathDiagnostics>& history) {
  auto out = open_out(path);
  out << "iter,max_displacement,empty_balls\n";
  for (const auto& h : history) out << h.iteration << ',' << format_double(h.max_displacement) << ',' << h.empty_balls << '\n';
}

void write_mep(const std::string& path, const StringResult& mep) {
  const Mat& p = mep.path.points;
  auto out = open_out(path);
  out << "order";
  for (Index c = 0; c < p.cols(); ++c) out << ",x" << c + 1;
  out << ",U\n";
  for (Index k = 0; k < p.rows(); ++k) {
    out << k;
    for (Index c = 0; c < p.cols(); ++c) out << ',' << format_double(p(k, c));
    out << ',' << format_double(mep.energies(k)) << '\n';
  }
}

EnergyGrid read_energy_grid(const std::string& path) {
  CsvTable t = read_csv(path);
  expect_header(t, {"nphi", "npsi"}, true);
  if (t.rows.empty() || t.rows[0].size() != 2) throw ParseError(path, 2, "expected the grid size line nphi,npsi");
  const Index nphi = t.index(0, 0), npsi = t.index(0, 1);
  if (nphi < 2 || npsi < 2) throw ParseError(path, t.lines[0], "grid needs at least 2 points per axis");
  std::size_t first = 1;
  if (t.rows.size() > 1 && t.rows[1] == std::vector<std::string>{"phi", "psi", "U"}) first = 2;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> values(static_cast<std::size_t>(nphi * npsi), std::nan(""));
  for (std::size_t r = first; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != 3) throw ParseError(path, t.lines[r], "expected phi,psi,U");
    const double phi = t.number(r, 0), psi = t.number(r, 1), u = t.number(r, 2);
    const double fi = (phi + std::numbers::pi) / two_pi * static_cast<double>(nphi);
    const double fj = (psi + std::numbers::pi) / two_pi * static_cast<double>(npsi);
    const double ri = std::round(fi), rj = std::round(fj);
    if (std::abs(fi - ri) > 1e-6 || std::abs(fj - rj) > 1e-6 || ri < 0 || ri >= nphi || rj < 0 || rj >= npsi)
      throw ParseError(path, t.lines[r], "angles are not nodes of the uniform grid on [-pi, pi)");
    auto& slot = values[static_cast<std::size_t>(ri) * static_cast<std::size_t>(npsi) + static_cast<std::size_t>(rj)];
    if (!std::isnan(slot)) throw ParseError(path, t.lines[r], "duplicate grid node");
    slot = u;
  }
  for (double v : values) {
    if (std::isnan(v)) throw ParseError(path, 0, "grid does not cover [-pi, pi)^2");
  }
  return EnergyGrid(static_cast<int>(nphi), static_cast<int>(npsi), std::move(values));
}

void write_energy_grid(const std::string& path, const EnergyGrid& grid) {
  auto out = open_out(path);
  out << "nphi,npsi\n" << grid.nphi() << ',' << grid.npsi() << "\nphi,psi,U\n";
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < grid.nphi(); ++i) {
    for (int j = 0; j < grid.npsi(); ++j) {
      out << format_double(-std::numbers::pi + two_pi * i / grid.nphi()) << ','
          << format_double(-std::numbers::pi + two_pi * j / grid.npsi()) << ',' << format_double(grid.at(i, j)) << '\n';
    }
  }
}

void write_profile(const std::string& path, const std::vector<ProfileEntry>& profile) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "order,i,j,s,J\n";
  for (std::size_t k = 0; k < profile.size(); ++k)
    out << k << ',' << profile[k].from << ',' << profile[k].to << ',' << format_double(profile[k].arc_position) << ','
        << format_double(profile[k].current) << '\n';
}

void write_energies(const std::string& path, const Vec& energies, const Vec* effective) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "id,U,Ue\n";
  for (Index i = 0; i < energies.size(); ++i) {
    out << i << ',' << format_double(energies(i)) << ',';
    if (effective && std::isfinite((*effective)(i))) out << format_double((*effective)(i));
    else out << "inf";
    out << '\n';
  }
}

}  // namespace cloudtpt::io
