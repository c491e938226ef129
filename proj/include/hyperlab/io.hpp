#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperlab/diagnostics.hpp"
#include "hyperlab/solver.hpp"
#include "hyperlab/system.hpp"

namespace hyperlab {

// Parse failures carry the offending field path and the 1-based source line (0 when unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& field, int line, const std::string& what);
  std::string field;
  int line = 0;
};

// ---- YAML system / run configuration ----

// A system document is either `preset: NAME` (optionally with overrides of mass / sigma / name)
// or a full description with n0, j0, mass, components and sparse coefficient lists
//   P: [ {index: [i, a, b, j, k], value: 1.0}, [[i, a, b, j, k], 1.0], ... ]
SystemSpec system_from_yaml(const std::string& text);
SystemSpec load_system(const std::filesystem::path& path);
std::string system_to_yaml(const SystemSpec& spec);

struct RunConfig {
  std::string command = "evolve";  // analyze | evolve | verify | operators
  SolverConfig solver;
  double amplitude = 1e-3;   // used when no data block is given
  double resolution = 0.0;   // > 0: target grid spacing at s0 (overrides cells)
  int cadence = 4;           // diagnostics cadence in steps
  std::vector<std::string> multi{"id"};
  bool curved = true;
  int snapshot_every = 0;    // 0: final slice only when snapshots are on
  bool snapshots = false;
  std::vector<std::string> verify{"frames", "operators", "inequalities", "homogeneity", "commutators"};
  std::uint64_t seed = 1;
  int threads = 0;           // 0: runtime default
  std::filesystem::path out = "out";
};

// `system:` takes either an inline system document or `system: {file: path}`;
// relative paths resolve against `base`.
RunConfig run_config_from_yaml(const std::string& text, const std::filesystem::path& base = ".");
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_yaml(const RunConfig& cfg);

// default profile(s) for a preset: a bump in every wave component, value data
std::vector<InitialProfile> default_data(const SystemSpec& spec, double amplitude);

// cells giving spacing close to h on the initial slice (even, >= 8)
int cells_for_resolution(const SolverConfig& cfg, double h);

// ---- delimited text ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  int column(const std::string& name) const;  // throws std::out_of_range
  std::vector<double> values(const std::string& name) const;
};

// numbers use %.17g so reading back is exact
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

// s, step, E_<c>, EZ_<c>_<I>, curved, coercive, flux_integral, identity_residual
CsvTable energy_table(const RunRecord& record);
// s, step, value_<c>, gradient_<c>, frame_<c>, radial_<c>
CsvTable monitor_table(const RunRecord& record);

// ---- snapshots: <stem>.bin (little-endian float64) + <stem>.hdr (key = value text) ----

void write_snapshot(const std::filesystem::path& stem, const GridSlice& slice);
GridSlice read_snapshot(const std::filesystem::path& stem);

// writes text atomically enough for our purposes (truncate + write), throws on failure
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hyperlab
