#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cloudtpt/committor.hpp"
#include "cloudtpt/experiment.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/meanpath.hpp"
#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/potentials.hpp"
#include "cloudtpt/reference.hpp"
#include "cloudtpt/tpt.hpp"

namespace py = pybind11;
using namespace cloudtpt;

namespace {

py::dict tessellation_dict(const Tessellation& t) {
  std::vector<Index> from, to;
  std::vector<double> area;
  for (Index i = 0; i < t.size(); ++i) {
    for (const auto& f : t.faces(i)) {
      from.push_back(i);
      to.push_back(f.neighbor);
      area.push_back(f.area);
    }
  }
  Vec vol(t.size());
  for (Index i = 0; i < t.size(); ++i) vol(i) = t.volume(i);
  py::dict d;
  d["volumes"] = vol;
  d["face_from"] = from;
  d["face_to"] = to;
  d["face_area"] = area;
  d["clipped"] = t.clipped_cells;
  return d;
}

// Full analysis on given points and energies: committor, current, rate,
// dominant path.
py::dict analyze(const Mat& points, int intrinsic_dim, const Vec& energies, double eps, const IndexSet& a,
                 const IndexSet& b, int neighbors) {
  const PointCloud cloud(points, intrinsic_dim);
  TessellationOptions opt;
  opt.neighbors = neighbors;
  const Tessellation tess = build_tessellation(cloud, opt);
  const EquilibriumWeights w = equilibrium_weights(energies, eps);
  const RateMatrix q = build_generator(tess, w.values, cloud);
  const CommittorField f = solve_committor(q, a, b);
  const ReactiveGraph g = reactive_current(q, w.values, f);
  const DominantPath dom = dominant_path(g, cloud);
  std::vector<std::tuple<Index, Index, double>> edges;
  edges.reserve(g.edges().size());
  for (const auto& e : g.edges()) edges.emplace_back(e.from, e.to, e.current);
  std::vector<std::tuple<Index, Index, double>> bn;
  for (const auto& x : dom.bottlenecks) bn.emplace_back(x.from, x.to, x.capacity);
  const double rate = transition_rate(g);
  py::dict d;
  d["committor"] = f.q;
  d["committor_residual"] = f.residual;
  d["current"] = edges;
  d["rate"] = rate;
  d["eps_ln_rate"] = eps * (std::log(rate) + w.log_offset);
  d["dominant_path"] = dom.path.nodes;
  d["bottlenecks"] = bn;
  d["weights"] = w.values;
  d["log_weight_offset"] = w.log_offset;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transition path theory on point clouds";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "sample_sphere", [](Index n, std::uint64_t seed) { return sample_sphere_uniform(n, seed).points(); },
      py::arg("n"), py::arg("seed"));
  m.def(
      "sample_torus",
      [](Index n, double R, double r, std::uint64_t seed) { return sample_torus_uniform(n, R, r, seed).points(); },
      py::arg("n"), py::arg("major_radius") = 2.0, py::arg("minor_radius") = 1.0, py::arg("seed") = 1);

  m.def(
      "mueller",
      [](double x, double y, bool perturbed) {
        const auto e = perturbed ? mueller_perturbed(x, y) : cloudtpt::mueller(x, y);
        return std::make_pair(e.value, Eigen::Vector2d(e.gradient));
      },
      py::arg("x"), py::arg("y"), py::arg("perturbed") = false, "Energy and gradient of the Mueller potential.");
  m.def("mueller_stationary_points", [] {
    std::vector<std::tuple<Eigen::Vector2d, std::string, double>> out;
    for (const auto& s : mueller_stationary_points())
      out.emplace_back(s.location, s.kind == StationaryKind::Minimum ? "minimum" : "saddle", s.energy);
    return out;
  });
  m.def(
      "sphere_mueller_energies",
      [](const Mat& points) { return evaluate(pullback_sphere(mueller_landscape()), PointCloud(points, 2)); },
      py::arg("points"));
  m.def("inverse_stereographic", [](const Eigen::Vector2d& p) { return inverse_stereographic(p); }, py::arg("p"));

  m.def(
      "tessellate",
      [](const Mat& points, int intrinsic_dim, int neighbors) {
        TessellationOptions opt;
        opt.neighbors = neighbors;
        return tessellation_dict(build_tessellation(PointCloud(points, intrinsic_dim), opt));
      },
      py::arg("points"), py::arg("intrinsic_dim") = 2, py::arg("neighbors") = 20);
  m.def("ball_indices",
        [](const Mat& points, const Vec& center, double r) { return ball_indices(PointCloud(points, 2), center, r); },
        py::arg("points"), py::arg("center"), py::arg("radius"));
  m.def("analyze", &analyze, py::arg("points"), py::arg("intrinsic_dim"), py::arg("energies"), py::arg("eps"),
        py::arg("a"), py::arg("b"), py::arg("neighbors") = 20);

  m.def("reparameterize", &reparameterize, py::arg("points"));
  m.def("hausdorff_distance", &hausdorff_distance, py::arg("a"), py::arg("b"));

  m.def(
      "run_experiment",
      [](const std::vector<std::string>& overrides) {
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config_from_overrides(overrides));
        }
        return r.summary;
      },
      py::arg("overrides") = std::vector<std::string>{},
      "Runs the pipeline with key=value overrides and returns summary.json as text.");
}
