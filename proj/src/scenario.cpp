#include "ccqed/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#ifndef CCQED_VERSION
#define CCQED_VERSION "unknown"
#endif

namespace ccqed {

namespace fs = std::filesystem;

namespace {

// (g, kappa, gamma) / 2pi = (750, 2.65, 3.5) MHz
constexpr double kExperimentalKappa = 2.65 / 750.0;
constexpr double kExperimentalGamma = 3.5 / 750.0;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: cannot parse '" + value + "' for key '" + key + "'");
  }
  if (used != value.size() || !std::isfinite(out)) {
    throw std::invalid_argument("config: cannot parse '" + value + "' for key '" + key + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  const double d = parse_double(key, value);
  if (d != std::floor(d) || std::abs(d) > 1e9) {
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
  return static_cast<int>(d);
}

double non_negative(const std::string& key, double v) {
  if (v < 0.0) throw std::invalid_argument("config: " + key + " must be >= 0, got " + std::to_string(v));
  return v;
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("config: " + key + " must be > 0, got " + std::to_string(v));
  return v;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::full: return "full";
    case ModelKind::effective_numeric: return "effective";
    case ModelKind::effective_closed_form: return "closed-form";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "full") return ModelKind::full;
  if (text == "effective" || text == "effective_numeric") return ModelKind::effective_numeric;
  if (text == "closed-form" || text == "effective_closed_form") return ModelKind::effective_closed_form;
  throw std::invalid_argument("unknown model '" + std::string(text) + "' (full|effective|closed-form)");
}

std::string_view to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::none: return "none";
    case FeedbackMode::sigma_x1: return "sigma-x1";
    case FeedbackMode::sigma_x2: return "sigma-x2";
  }
  return "?";
}

FeedbackMode parse_feedback_mode(std::string_view text) {
  if (text == "none") return FeedbackMode::none;
  if (text == "sigma-x1" || text == "sigma_x1") return FeedbackMode::sigma_x1;
  if (text == "sigma-x2" || text == "sigma_x2") return FeedbackMode::sigma_x2;
  throw std::invalid_argument("unknown feedback '" + std::string(text) + "' (none|sigma-x1|sigma-x2)");
}

// ---------------------------------------------------------------------------
// Scenario defaults and configuration

ScenarioSpec named_scenario(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  s.params.g = 1.0;
  s.params.Delta = 1.0;
  s.params.J = 6.0;
  s.integrator.t_final = 60000.0;
  if (name == "fig2" || name == "custom") {
    s.params.Omega = 0.01;
    s.omega_ratio = 0.2;
    s.params.gamma = 0.04;
    s.params.kappa = 0.0;
  } else if (name == "fig3") {
    s.params.Omega = 0.03;
    s.omega_ratio = 0.05;
    s.params.gamma = 0.0;
    s.params.kappa = 0.05;
  } else if (name == "fig4") {
    s.params.Omega = 0.04;
    s.omega_ratio = 0.05;
    s.params.gamma = 0.0;
    s.params.kappa = 0.1;
    s.feedback = FeedbackMode::sigma_x1;
  } else if (name == "fig5" || name == "fig6") {
    s.params.Omega = 0.03;
    s.omega_ratio = 0.2;
    s.params.kappa = 0.05;
    s.params.gamma = 0.05;
    if (name == "fig6") {
      s.feedback = FeedbackMode::sigma_x1;
      s.integrator.t_final = 20000.0;
    }
  } else if (name == "fig7" || name == "fig8") {
    s.params.Omega = 0.02;
    s.omega_ratio = 0.4;
    s.params.kappa = kExperimentalKappa;
    s.params.gamma = kExperimentalGamma;
  } else {
    throw std::invalid_argument("unknown scenario '" + name +
                                "' (fig2|fig3|fig4|fig5|fig6|fig7|fig8|custom)");
  }
  resolve(s);
  return s;
}

void apply_setting(ScenarioSpec& s, const std::string& key, const std::string& value) {
  auto num = [&] { return parse_double(key, value); };
  ModelParams& p = s.params;
  if (key == "scenario") {
    throw std::invalid_argument("config: 'scenario' must be applied before other keys");
  } else if (key == "model") {
    s.model = parse_model_kind(value);
  } else if (key == "feedback") {
    s.feedback = parse_feedback_mode(value);
  } else if (key == "feedback_channel") {
    s.feedback_channel = value;
  } else if (key == "g") {
    p.g = positive(key, num());
  } else if (key == "Omega") {
    p.Omega = non_negative(key, num());
  } else if (key == "omega") {
    p.omega = num();
    s.omega_explicit = true;
  } else if (key == "omega_ratio") {
    s.omega_ratio = num();
    s.omega_explicit = false;
  } else if (key == "Delta") {
    p.Delta = positive(key, num());
  } else if (key == "delta") {
    p.delta = num();
    s.delta_explicit = true;
  } else if (key == "J") {
    p.J = non_negative(key, num());
  } else if (key == "kappa") {
    p.kappa = non_negative(key, num());
  } else if (key == "gamma") {
    p.gamma = non_negative(key, num());
  } else if (key == "step") {
    s.integrator.step = positive(key, num());
    s.step_explicit = true;
  } else if (key == "t_final") {
    s.integrator.t_final = positive(key, num());
    s.t_final_explicit = true;
  } else if (key == "sample_interval") {
    s.sample_interval = positive(key, num());
  } else if (key == "trace_tolerance") {
    s.integrator.trace_tolerance = positive(key, num());
  } else if (key == "positivity_tolerance") {
    s.integrator.positivity_tolerance = positive(key, num());
  } else if (key == "positivity_every") {
    s.integrator.positivity_every = std::max(0, parse_int(key, value));
  } else if (key == "steady_threshold") {
    s.integrator.steady_threshold = positive(key, num());
  } else if (key == "steady_samples") {
    s.integrator.steady_samples = parse_int(key, value);
  } else if (key == "initial") {
    parse_initial_state(value);
    s.initial = value;
  } else if (key == "out") {
    s.out_dir = value;
  } else if (key == "max_excitation") {
    s.max_excitation = parse_int(key, value);
  } else if (key == "per_mode_cap") {
    s.per_mode_cap = parse_int(key, value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void resolve(ScenarioSpec& s) {
  if (!s.omega_explicit) s.params.omega = s.omega_ratio * s.params.Omega;
  if (!s.delta_explicit) s.params.delta = delta_star(s.params.g, s.params.J, s.params.Delta);
  if (s.model == ModelKind::full && !s.step_explicit) s.integrator.step = 0.02;
  // Full-space runs are only practical on the short consistency horizon.
  if (s.model == ModelKind::full && !s.t_final_explicit) s.integrator.t_final = 2000.0;
  if (s.max_excitation < 1 || s.per_mode_cap < 1) {
    throw std::invalid_argument("config: max_excitation and per_mode_cap must be >= 1");
  }
  s.params.validate();
}

Setting parse_setting(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + text + "'");
  Setting out{trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
  if (out.first.empty()) throw std::invalid_argument("empty key in '" + text + "'");
  return out;
}

ScenarioSpec parse_config(const std::string& text, const std::vector<Setting>& overrides) {
  std::vector<Setting> settings;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      settings.push_back(parse_setting(line));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  settings.insert(settings.end(), overrides.begin(), overrides.end());

  std::string name = "custom";
  for (const auto& [k, v] : settings) {
    if (k == "scenario") name = v;
  }
  ScenarioSpec spec = named_scenario(name);
  for (const auto& [k, v] : settings) {
    if (k != "scenario") apply_setting(spec, k, v);
  }
  resolve(spec);
  return spec;
}

BasisState parse_initial_state(const std::string& text) {
  std::string a, b;
  if (auto comma = text.find(','); comma != std::string::npos) {
    a = trim(text.substr(0, comma));
    b = trim(text.substr(comma + 1));
  } else if (text.size() == 4) {
    a = text.substr(0, 2);
    b = text.substr(2);
  }
  const auto l1 = parse_atom_level(a);
  const auto l2 = parse_atom_level(b);
  if (!l1 || !l2 || is_excited(*l1) || is_excited(*l2)) {
    throw std::invalid_argument("initial state '" + text + "' is not a ground state like ga,gL");
  }
  BasisState s;
  s.atom1 = *l1;
  s.atom2 = *l2;
  return s;
}

std::vector<std::string> initial_state_cycle() {
  return {"ga,gL", "gL,gL", "gR,g0", "ga,gR", "gL,gR"};
}

std::string code_version() { return CCQED_VERSION; }

// ---------------------------------------------------------------------------
// Running

BuiltModel build_model(const ScenarioSpec& spec) {
  const StateSpace space = build_state_space(spec.max_excitation, spec.per_mode_cap);
  const bool with_feedback = spec.feedback != FeedbackMode::none;
  const FeedbackKind kind =
      spec.feedback == FeedbackMode::sigma_x2 ? FeedbackKind::sigma_x2 : FeedbackKind::sigma_x1;
  auto require_channel = [&](const std::vector<CollapseChannel>& channels) {
    for (const auto& ch : channels) {
      if (ch.label == spec.feedback_channel) return;
    }
    throw std::invalid_argument("feedback channel '" + spec.feedback_channel + "' is not active");
  };

  if (spec.model == ModelKind::full) {
    BuiltModel m{space, build_H_full(spec.params, space), build_collapse_channels(spec.params, space),
                 FeedbackScheme::identity(), ObservableSet::standard(space), spec.integrator};
    if (with_feedback) {
      require_channel(m.channels);
      m.feedback.assign(spec.feedback_channel, build_feedback_unitary(kind, space));
    }
    return m;
  }

  const EffectiveModel eff = [&] {
    if (spec.model == ModelKind::effective_numeric) return reduce_effective(spec.params, space);
    if (spec.params.kappa == 0.0) return closed_form_gamma(spec.params, space);
    if (spec.params.gamma == 0.0) return closed_form_kappa(spec.params, space);
    throw std::invalid_argument("closed-form model needs kappa = 0 or gamma = 0");
  }();
  BuiltModel m{eff.basis, eff.H_eff, eff.jumps, FeedbackScheme::identity(),
               ObservableSet::standard(eff.basis), spec.integrator};
  if (with_feedback) {
    require_channel(m.channels);
    m.channels = effective_feedback_channels(eff, kind, spec.feedback_channel);
  }
  if (!spec.step_explicit) {
    const double raw = effective_step(spec.params, eff);
    const double samples = spec.integrator.t_final / spec.sample_interval;
    if (std::abs(samples - std::round(samples)) < 1e-9) {
      // Samples on multiples of sample_interval, last one at t_final.
      m.integrator.step = spec.sample_interval / std::ceil(spec.sample_interval / raw);
    } else {
      m.integrator.step = spec.integrator.t_final / std::ceil(spec.integrator.t_final / raw);
    }
  }
  return m;
}

ScenarioResult compute_scenario(const ScenarioSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult out;
  RunRecord& r = out.record;
  r.scenario = spec.name;
  r.params = spec.params;
  r.model = std::string(to_string(spec.model));
  r.feedback = std::string(to_string(spec.feedback));
  if (spec.feedback != FeedbackMode::none) r.feedback += "@" + spec.feedback_channel;
  r.initial = spec.initial;
  r.code_version = code_version();
  r.integrator = spec.integrator;
  try {
    BuiltModel m = build_model(spec);
    m.integrator.record_every =
        std::max(1, static_cast<int>(std::lround(spec.sample_interval / m.integrator.step)));
    r.integrator = m.integrator;
    const auto idx = m.basis.index_of(parse_initial_state(spec.initial));
    if (!idx) throw std::invalid_argument("initial state not in basis");
    const DensityMatrix rho0 = projector(basis_vector(m.basis, m.basis.state(*idx)));
    out.trajectory = evolve_with_feedback(rho0, m.H, m.channels, m.feedback, m.integrator, m.observables);
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario " + spec.name + ": " + e.what());
  }
  const Trajectory& t = out.trajectory;
  r.final_time = t.times.back();
  r.final_fidelity = t.fidelity.back();
  if (t.steady_time) {
    r.steady_time = t.steady_time;
    r.steady_fidelity = t.fidelity.back();
  }
  r.max_trace_drift = *std::max_element(t.trace_drift.begin(), t.trace_drift.end());
  r.max_hermiticity_error = *std::max_element(t.hermiticity.begin(), t.hermiticity.end());
  r.min_eigenvalue = 1.0;
  for (const auto& [sample, value] : t.min_eigenvalues) r.min_eigenvalue = std::min(r.min_eigenvalue, value);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace {

std::string output_stem(const ScenarioSpec& spec,
                        const std::vector<std::pair<std::string, double>>& point) {
  std::string stem = spec.name;
  for (const auto& [k, v] : point) stem += "_" + k + "=" + format_number(v);
  return stem;
}

void emit(RunRecord& record, const Trajectory& trajectory, const fs::path& csv) {
  write_csv(trajectory, csv);
  record.output = csv;
  record.digest = file_digest(csv);
}

}  // namespace

RunRecord run_scenario(const ScenarioSpec& spec) {
  ScenarioResult result = compute_scenario(spec);
  fs::create_directories(spec.out_dir);
  emit(result.record, result.trajectory, spec.out_dir / (output_stem(spec, {}) + ".csv"));
  append_run_log(result.record, spec.out_dir / "runs.jsonl");
  return result.record;
}

std::size_t SweepGrid::cardinality() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return axes.empty() ? 0 : n;
}

std::vector<std::pair<std::string, double>> SweepGrid::point(std::size_t i) const {
  if (i >= cardinality()) throw std::out_of_range("SweepGrid: point index out of range");
  std::vector<std::pair<std::string, double>> out(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto& values = axes[k].values;
    out[k] = {axes[k].parameter, values[i % values.size()]};
    i /= values.size();
  }
  return out;
}

SweepGrid default_grid(const std::string& scenario) {
  SweepGrid grid;
  grid.base = named_scenario(scenario);
  if (scenario == "fig5" || scenario == "fig6") {
    std::vector<double> rates;
    for (int k = 0; k <= 10; ++k) rates.push_back(0.01 * k);
    grid.axes = {{"kappa", rates}, {"gamma", rates}};
  } else if (scenario == "fig7") {
    grid.axes = {{"J", {5.0, 6.0, 7.0}}};
  } else {
    throw std::invalid_argument("scenario '" + scenario + "' has no default sweep grid");
  }
  return grid;
}

SweepResult sweep(const SweepGrid& grid, int jobs) {
  const std::size_t n = grid.cardinality();
  if (n == 0) throw std::invalid_argument("sweep: empty grid");
  std::vector<ScenarioSpec> specs(n);
  std::vector<std::vector<std::pair<std::string, double>>> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = grid.point(i);
    specs[i] = grid.base;
    for (const auto& [k, v] : points[i]) apply_setting(specs[i], k, format_number(v));
    resolve(specs[i]);
  }

  std::vector<std::optional<ScenarioResult>> results(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = compute_scenario(specs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(n));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Single collector: files are written in grid order from this thread.
  SweepResult out;
  const fs::path dir = grid.base.out_dir;
  fs::create_directories(dir / "points");
  for (std::size_t i = 0; i < n; ++i) {
    RunRecord record;
    if (results[i]) {
      record = std::move(results[i]->record);
      emit(record, results[i]->trajectory, dir / "points" / (output_stem(specs[i], points[i]) + ".csv"));
      results[i].reset();
    } else {
      record.scenario = specs[i].name;
      record.params = specs[i].params;
      record.model = std::string(to_string(specs[i].model));
      record.feedback = std::string(to_string(specs[i].feedback));
      record.initial = specs[i].initial;
      record.integrator = specs[i].integrator;
      record.code_version = code_version();
      record.ok = false;
      record.error = errors[i];
      ++out.failures;
    }
    record.point = points[i];
    append_run_log(record, dir / "runs.jsonl");
    out.records.push_back(std::move(record));
  }
  std::vector<std::string> axes;
  for (const auto& a : grid.axes) axes.push_back(a.parameter);
  out.aggregate = dir / (grid.base.name + "_sweep.csv");
  write_csv(out.records, axes, out.aggregate);
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

void close_checked(std::ofstream& f, const fs::path& path) {
  f.close();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void write_csv(const Trajectory& trajectory, const fs::path& path) {
  static const char* const standard[] = {"T1", "T2", "T3", "gLg0", "gRg0", "gagL"};
  std::vector<const std::vector<double>*> pops;
  std::vector<std::string> extra;
  for (const char* label : standard) {
    const auto it = std::find(trajectory.labels.begin(), trajectory.labels.end(), label);
    pops.push_back(it == trajectory.labels.end() ? nullptr : &trajectory.population(label));
  }
  for (const auto& label : trajectory.labels) {
    if (std::find(std::begin(standard), std::end(standard), label) == std::end(standard)) {
      extra.push_back(label);
    }
  }

  std::ofstream f = open_for_write(path);
  const auto& cols = trajectory_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) f << (c ? "," : "") << cols[c];
  for (const auto& label : extra) f << ",pop_" << label;
  f << '\n';
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    f << format_number(trajectory.times[i]) << ',' << format_number(trajectory.fidelity[i]);
    for (const auto* series : pops) f << ',' << (series ? format_number((*series)[i]) : "nan");
    f << ',' << format_number(trajectory.trace_drift[i]);
    for (const auto& label : extra) f << ',' << format_number(trajectory.population(label)[i]);
    f << '\n';
  }
  close_checked(f, path);
}

void write_csv(const std::vector<RunRecord>& records, const std::vector<std::string>& axes,
               const fs::path& path) {
  std::ofstream f = open_for_write(path);
  for (const auto& a : axes) f << a << ',';
  f << "fidelity_at_t\n";
  for (const auto& r : records) {
    if (!r.ok) continue;
    for (const auto& a : axes) {
      const auto it = std::find_if(r.point.begin(), r.point.end(), [&](const auto& kv) { return kv.first == a; });
      if (it == r.point.end()) throw std::invalid_argument("aggregate: record lacks axis '" + a + "'");
      f << format_number(it->second) << ',';
    }
    f << format_number(r.final_fidelity) << '\n';
  }
  close_checked(f, path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return fnv1a_hex(ss.str());
}

std::string to_json_line(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  if (!r.point.empty()) {
    nlohmann::ordered_json p;
    for (const auto& [k, v] : r.point) p[k] = v;
    j["point"] = p;
  }
  j["params"] = {{"g", r.params.g},         {"Omega", r.params.Omega}, {"omega", r.params.omega},
                 {"Delta", r.params.Delta}, {"delta", r.params.delta}, {"J", r.params.J},
                 {"kappa", r.params.kappa}, {"gamma", r.params.gamma}};
  j["model"] = r.model;
  j["feedback"] = r.feedback;
  j["initial"] = r.initial;
  j["step"] = r.integrator.step;
  j["t_final"] = r.integrator.t_final;
  j["code_version"] = r.code_version;
  j["wall_seconds"] = r.wall_seconds;
  if (r.ok) {
    j["final_time"] = r.final_time;
    j["final_fidelity"] = r.final_fidelity;
    j["steady_time"] = r.steady_time ? nlohmann::ordered_json(*r.steady_time) : nlohmann::ordered_json();
    j["steady_fidelity"] =
        r.steady_fidelity ? nlohmann::ordered_json(*r.steady_fidelity) : nlohmann::ordered_json();
    j["max_trace_drift"] = r.max_trace_drift;
    j["max_hermiticity_error"] = r.max_hermiticity_error;
    j["min_eigenvalue"] = r.min_eigenvalue;
    j["output"] = r.output.string();
    j["digest"] = r.digest;
  }
  return j.dump();
}

void append_run_log(const RunRecord& record, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot open run log " + path.string());
  f << to_json_line(record) << '\n';
  if (!f) throw std::runtime_error("write failed for run log " + path.string());
}

}  // namespace ccqed
