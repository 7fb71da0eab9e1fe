#pragma once

#include "ccqed/dynamics.hpp"
#include "ccqed/effective.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ccqed {

enum class ModelKind { full, effective_numeric, effective_closed_form };
std::string_view to_string(ModelKind kind);
/// Accepts full | effective | effective_numeric | closed-form | effective_closed_form.
ModelKind parse_model_kind(std::string_view text);

enum class FeedbackMode { none, sigma_x1, sigma_x2 };
std::string_view to_string(FeedbackMode mode);
FeedbackMode parse_feedback_mode(std::string_view text);

/// Fully resolved description of one run.
struct ScenarioSpec {
  std::string name = "custom";
  ModelParams params;
  ModelKind model = ModelKind::effective_numeric;
  FeedbackMode feedback = FeedbackMode::none;
  std::string feedback_channel = kDefaultFeedbackChannel;
  IntegratorConfig integrator;
  double sample_interval = 10.0;  ///< g*t between recorded samples
  std::string initial = "ga,gL";
  std::filesystem::path out_dir = "out";
  int max_excitation = 1;
  int per_mode_cap = 1;

  // Resolution state. Derived quantities follow their sources unless set.
  double omega_ratio = 0.0;  ///< omega / Omega used when omega is not explicit
  bool omega_explicit = false;
  bool delta_explicit = false;
  bool step_explicit = false;
  bool t_final_explicit = false;
};

inline constexpr const char* kScenarioNames[] = {"fig2", "fig3", "fig4", "fig5",
                                                 "fig6", "fig7", "fig8", "custom"};

/// Caption defaults of a named scenario, resolved.
ScenarioSpec named_scenario(const std::string& name);

/// Applies one `key = value` setting. Throws std::invalid_argument on an
/// unknown key, unparsable value or negative rate. Call resolve() afterwards.
void apply_setting(ScenarioSpec& spec, const std::string& key, const std::string& value);

/// Recomputes derived values (omega from the ratio, delta = delta_star) and
/// validates the result.
void resolve(ScenarioSpec& spec);

using Setting = std::pair<std::string, std::string>;

/// Parses a flat `key = value` file with `#` comments. Overrides (CLI flags)
/// are applied after the file; a "scenario" override replaces the file's one.
ScenarioSpec parse_config(const std::string& text, const std::vector<Setting>& overrides = {});

/// Splits "key=value".
Setting parse_setting(const std::string& text);

/// Ground basis state from "ga,gL" or "gagL".
BasisState parse_initial_state(const std::string& text);

/// Fixed set of ground states used for the initial-state independence check.
std::vector<std::string> initial_state_cycle();

struct RunRecord {
  std::string scenario;
  ModelParams params;
  std::string model;
  std::string feedback;
  std::string initial;
  IntegratorConfig integrator;
  std::string code_version;
  double wall_seconds = 0.0;
  bool ok = true;
  std::string error;
  double final_time = 0.0;
  double final_fidelity = 0.0;
  std::optional<double> steady_time;
  std::optional<double> steady_fidelity;
  double max_trace_drift = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;  ///< smallest sampled eigenvalue
  std::filesystem::path output;
  std::string digest;  ///< FNV-1a 64 of the trajectory CSV, hex
  std::vector<std::pair<std::string, double>> point;  ///< sweep coordinates
};

std::string code_version();

/// Effective or full generator for a spec, ready to integrate.
struct BuiltModel {
  StateSpace basis;
  SparseOperator H;
  std::vector<CollapseChannel> channels;
  FeedbackScheme feedback;  ///< full model only; effective feedback is folded into channels
  ObservableSet observables;
  IntegratorConfig integrator;  ///< with the model-dependent step filled in
};
BuiltModel build_model(const ScenarioSpec& spec);

struct ScenarioResult {
  RunRecord record;
  Trajectory trajectory;
};

/// Builds and integrates without touching the filesystem. Integration errors
/// are rethrown with the scenario name prefixed.
ScenarioResult compute_scenario(const ScenarioSpec& spec);

/// compute_scenario, then writes <out>/<name>.csv and appends the record to
/// <out>/runs.jsonl.
RunRecord run_scenario(const ScenarioSpec& spec);

struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct SweepGrid {
  std::vector<SweepAxis> axes;
  ScenarioSpec base;

  std::size_t cardinality() const;
  /// Settings of point i in row-major order (last axis fastest).
  std::vector<std::pair<std::string, double>> point(std::size_t i) const;
};

/// The figure grids: fig5/fig6 kappa x gamma in [0, 0.1] step 0.01, fig7 J in {5, 6, 7}.
SweepGrid default_grid(const std::string& scenario);

struct SweepResult {
  std::vector<RunRecord> records;  ///< one per grid point, in grid order
  std::filesystem::path aggregate;
  std::size_t failures = 0;
};

/// Runs every point with up to `jobs` worker threads. Failed points keep a
/// record with ok = false and are left out of the aggregate CSV.
SweepResult sweep(const SweepGrid& grid, int jobs = 1);

inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> columns = {
      "t", "fidelity_T1", "pop_T1", "pop_T2", "pop_T3", "pop_gLg0", "pop_gRg0", "pop_gagL", "trace_drift"};
  return columns;
}

/// Trajectory CSV with 12 significant digits. Observables beyond the
/// standard six are appended as pop_<label>.
void write_csv(const Trajectory& trajectory, const std::filesystem::path& path);

/// Aggregate CSV: one column per axis, then fidelity_at_t. Failed records are skipped.
void write_csv(const std::vector<RunRecord>& records, const std::vector<std::string>& axes,
               const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::filesystem::path& path);

/// One JSON object per line.
std::string to_json_line(const RunRecord& record);
void append_run_log(const RunRecord& record, const std::filesystem::path& path);

}  // namespace ccqed
