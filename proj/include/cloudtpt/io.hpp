#pragma once

#include <string>
#include <vector>

#include "cloudtpt/control.hpp"
#include "cloudtpt/committor.hpp"
#include "cloudtpt/generator.hpp"
#include "cloudtpt/meanpath.hpp"
#include "cloudtpt/pointcloud.hpp"
#include "cloudtpt/potentials.hpp"
#include "cloudtpt/reference.hpp"
#include "cloudtpt/sampler.hpp"
#include "cloudtpt/tpt.hpp"

namespace cloudtpt::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Comma-separated table with a header row. Rows keep their 1-based line
/// number (header is line 1) for error messages.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  double number(std::size_t r, std::size_t c) const;
  Index index(std::size_t r, std::size_t c) const;
};

CsvTable read_csv(const std::string& path);

// cloud: id,x1,...,xl
void write_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud(const std::string& path, int intrinsic_dim = 2);

// tessellation: {"volumes": [...], "faces": [[i, j, area], ...]} with i < j
void write_tessellation(const std::string& path, const Tessellation& tess);
Tessellation read_tessellation(const std::string& path);

// generator: i,j,rate and i,pi,vol
void write_generator(const std::string& rates_path, const std::string& measures_path, const SparseRows& rates,
                     const Vec& weights, const Tessellation& tess);

// set membership: id
void write_index_set(const std::string& path, const IndexSet& set);
IndexSet read_index_set(const std::string& path);

// committor: id,q
void write_committor(const std::string& path, const Vec& q);
Vec read_committor(const std::string& path);

// current: i,j,J
void write_current(const std::string& path, const ReactiveGraph& graph);
std::vector<ReactiveEdge> read_current(const std::string& path);

// path: order,id,x...,q
void write_path(const std::string& path, const DiscretePath& p, const Vec& q);
std::vector<Index> read_path_nodes(const std::string& path);

// exit distribution: j,prob
void write_exit(const std::string& path, const std::vector<ExitEntry>& exit);

// trajectory: step,id,dt and segments: segment,start_step,end_step
void write_trajectory(const std::string& path, const TrajectoryRecord& rec);
void write_segments(const std::string& path, const TrajectoryRecord& rec);
TrajectoryRecord read_trajectory(const std::string& trajectory_path, const std::string& segments_path);

// mean path: order,id,x... and diagnostics: iter,max_displacement,empty_balls
void write_mean_path(const std::string& path, const MeanPathState& state);
void write_diagnostics(const std::string& path, const std::vector<MeanPathDiagnostics>& history);

// current profile along a path: order,i,j,s,J
void write_profile(const std::string& path, const std::vector<ProfileEntry>& profile);

// energies: id,U,Ue with Ue = inf on A; `effective` may be null
void write_energies(const std::string& path, const Vec& energies, const Vec* effective);

// MEP: order,x...,U
void write_mep(const std::string& path, const StringResult& mep);

// tabulated landscape: header nphi,npsi then rows phi,psi,U
EnergyGrid read_energy_grid(const std::string& path);
void write_energy_grid(const std::string& path, const EnergyGrid& grid);

}  // namespace cloudtpt::io
