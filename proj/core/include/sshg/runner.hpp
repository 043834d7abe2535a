#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sshg/errors.hpp"
#include "sshg/minmax.hpp"
#include "sshg/sweepout.hpp"

namespace sshg {

enum class RunMode { spectrum, mountain_pass, linking, multiplicity, probe };
const char* to_string(RunMode m);

struct RunConfig {
  TorusGeometry geometry;
  std::optional<double> rho;
  std::optional<double> mu;
  std::optional<double> b;
  RunMode mode = RunMode::spectrum;
  MinmaxConfig minmax;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  /// Sweepout and disk resolution for mode = multiplicity.
  int n_theta = 32;
  int n_radial = 8;
  int n_shells = 1;
  double epsilon_fraction = 0.2;
  int restart_path_nodes = 65;
  /// Coercivity probe sample count (radius and cone width come from `minmax`).
  int probe_samples = 100;

  /// rho, or 2 pi mu b^2.
  double coupling() const;
  /// Config error naming the offending field.
  void validate() const;
};

/// Flat JSON object; `spin_delta` is a two-element array and `minmax` a one-level object
/// of MinmaxConfig overrides. Unknown keys are config errors.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

struct TraceRow {
  int iteration = 0;
  double j_max = 0.0;
  double grad_norm = 0.0;
};

struct NamedRecord {
  std::string name;
  SolutionRecord record;
  PSDiagnostics diagnostics;
  std::vector<TraceRow> trace;
  /// Deformation converged and, when attempted, Newton refined.
  bool converged = false;
};

struct RunOutput {
  RunConfig config;
  double rho = 0.0;
  int harmonic_dim = 0;
  /// First 40 entries of the ordered basis (harmonic block first).
  std::vector<double> eigenvalues;
  /// Distinct positive eigenvalues with real multiplicity, lowest ten.
  std::vector<std::pair<double, int>> distinct_positive;
  std::optional<double> c1;
  std::optional<double> c2;
  std::optional<double> probe_margin;
  std::optional<LinkingConstants> linking;
  std::vector<NamedRecord> records;
  /// (theta, J(u_theta, psi_theta)) of the certified family.
  std::vector<std::pair<double, double>> theta_sweep;
  std::optional<double> theta0;
  std::optional<double> restart_inner_product;
  bool distinct = false;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> checkpoints;
  std::vector<std::string> notes;
  /// False when any deformation stopped on its budget.
  bool converged = true;
};

RunOutput run(const RunConfig& config);

/// run.json, spectrum.csv, energy_trace*.csv, theta_sweep.csv and solutions.sshg, each written atomically.
/// Fills output.checkpoints.
void write_outputs(RunOutput& output, const std::filesystem::path& dir);

std::string to_json(const RunOutput& output);

/// 2 for config-type errors, 3 capacity, 1 otherwise.
int exit_code(ErrorKind kind);
inline constexpr int kExitNonConvergence = 4;

}  // namespace sshg
