#ifndef NETUM_HARNESS_HPP
#define NETUM_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "netum/model.hpp"
#include "netum/trace.hpp"

namespace netum {

inline constexpr std::string_view kVersion = "0.1.0";

struct GeneratorConfig {
  int m = 1;
  int n = 1;
  double density = 0.1;
  std::uint64_t seed = 0;
  double a_low = 1.0;
  double a_high = 50.0;
  std::optional<double> b_scale;  // defaults to n
  double sigma = 0.001;
  bool ensure_nonempty = false;
};

nlohmann::json to_json(const GeneratorConfig& cfg);

/// Cells drawn row-major with probability `density`; then, if asked, one
/// uniform entry for every empty row and then every empty column; then
/// b ~ U[0, b_scale] and a ~ U[a_low, a_high]. Quadratic utility, p = q = 2.
ProblemInstance generate_instance(const GeneratorConfig& cfg);

/// FNV-1a 64 of the serialized instance, as 16 hex digits.
std::string instance_fingerprint(const ProblemInstance& inst);

/// Exhaustive search over the grid {k h : 0 <= k h <= box_i} for the
/// feasible point of largest U. The last coordinate is optimized exactly on
/// its grid given the others. n <= 4.
Vector brute_force_solve(const ProblemInstance& inst, double grid_step,
                         const Vector& box);

enum class SolverKind { fgm, md, fgm_protocol, md_protocol };

std::string_view to_string(SolverKind kind);
/// Accepts "fgm", "md", "fgm-protocol"/"fgm_protocol" and the md variants.
SolverKind solver_from_string(std::string_view text);

struct ExperimentParams {
  std::uint64_t seed = 0;

  double fgm_eps = 1.0;
  /// When set, fgm_eps becomes this fraction of |U| at the zero-price rates.
  std::optional<double> fgm_eps_relative;
  std::optional<double> fgm_mu;
  std::uint64_t fgm_iterations = 1000;
  bool fgm_certificate = false;
  std::uint64_t fgm_trace_stride = 1;

  double md_eps = 1.0;
  std::optional<double> md_gradient_bound;  // default max a_i
  std::optional<Vector> md_x0;              // default: rates at zero prices
  std::uint64_t md_steps = 10000;
  std::uint64_t md_trace_stride = 1;
  bool literal_sign = false;

  bool write_aligned = true;
};

nlohmann::json to_json(const ExperimentParams& params);

struct SolverOutcome {
  SolverKind kind = SolverKind::fgm;
  bool ok = false;
  std::string error;
  SolverTrace trace;
  std::string csv_path;
  nlohmann::json summary = nlohmann::json::object();
};

struct ExperimentResult {
  std::vector<SolverOutcome> outcomes;
  nlohmann::json manifest;

  const SolverOutcome* find(SolverKind kind) const;
};

/// The MD starting point used when none is given: unsmoothed best responses
/// at zero prices, which overshoot every binding capacity.
Vector default_md_start(const ProblemInstance& inst);

/// Runs each solver, writes <dir>/<solver>.csv, <dir>/manifest.json and,
/// optionally, <dir>/aligned.csv (traces forward-filled on the union of
/// oracle-call counts). A failing solver is recorded and the rest still run.
/// An empty `outdir` skips all file output.
ExperimentResult run_experiment(const ProblemInstance& inst,
                                const std::vector<SolverKind>& solvers,
                                const ExperimentParams& params,
                                const std::string& outdir);

struct ExperimentPreset {
  std::string name;
  std::string description;
  GeneratorConfig generator;
  ExperimentParams params;
};

/// "paper-fig1" (m=40, n=100, density 0.001 with nonempty rows/columns) or
/// "dense-fig1" (same laws, density 0.1).
ExperimentPreset experiment_preset(std::string_view name);
std::vector<std::string> preset_names();

/// Writes the aligned view of several traces; column groups follow `names`.
void write_aligned_csv(const std::string& path,
                       const std::vector<std::string>& names,
                       const std::vector<const SolverTrace*>& traces);

}  // namespace netum

#endif  // NETUM_HARNESS_HPP
