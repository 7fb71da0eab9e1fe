// Command-line front end: simulate one scenario or sweep a figure grid.

#include "ccqed/scenario.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct CommonOptions {
  std::string scenario;
  std::string config;
  std::vector<std::string> sets;
  std::string model;
  std::string feedback;
  std::string out;
};

ccqed::ScenarioSpec build_spec(const CommonOptions& o) {
  std::vector<ccqed::Setting> overrides;
  if (!o.scenario.empty()) overrides.emplace_back("scenario", o.scenario);
  if (!o.model.empty()) overrides.emplace_back("model", o.model);
  if (!o.feedback.empty()) overrides.emplace_back("feedback", o.feedback);
  if (!o.out.empty()) overrides.emplace_back("out", o.out);
  for (const auto& s : o.sets) overrides.push_back(ccqed::parse_setting(s));
  return ccqed::parse_config(o.config.empty() ? std::string() : read_file(o.config), overrides);
}

void print_record(const ccqed::RunRecord& r) {
  std::printf("%s initial=%s model=%s feedback=%s t=%.6g F=%.6f", r.scenario.c_str(), r.initial.c_str(),
              r.model.c_str(), r.feedback.c_str(), r.final_time, r.final_fidelity);
  if (r.steady_time) std::printf(" steady_at=%.6g", *r.steady_time);
  std::printf(" -> %s\n", r.output.string().c_str());
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "override key=value (repeatable)");
  cmd->add_option("--model", o.model, "full | effective | closed-form");
  cmd->add_option("--feedback", o.feedback, "none | sigma-x1 | sigma-x2");
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dissipative preparation of a three-dimensional entangled state in coupled bimode cavities"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ccqed::code_version());

  CommonOptions sim;
  bool cycle = false;
  auto* simulate = app.add_subcommand("simulate", "integrate one scenario and write its trajectory CSV");
  simulate->add_option("--scenario", sim.scenario, "fig2..fig8 or custom");
  add_common(simulate, sim);
  simulate->add_flag("--cycle-initial", cycle, "run the fixed set of five ground initial states");

  CommonOptions sw;
  int jobs = 1;
  std::vector<std::string> axes;
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid and write an aggregate CSV");
  sweep->add_option("--scenario", sw.scenario, "fig5, fig6, fig7 or any scenario with --axis")->required();
  add_common(sweep, sw);
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--axis", axes, "name=v1,v2,... replaces the default grid (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      ccqed::ScenarioSpec spec = build_spec(sim);
      for (const auto& item : ccqed::regime_check(spec.params).items) {
        if (!item.satisfied) {
          std::fprintf(stderr, "warning: regime %s = %.4g (%s %.4g)\n", item.name.c_str(), item.value,
                       item.upper_bound ? "want <=" : "want >=", item.threshold);
        }
      }
      const std::vector<std::string> initials =
          cycle ? ccqed::initial_state_cycle() : std::vector<std::string>{spec.initial};
      for (const auto& init : initials) {
        ccqed::ScenarioSpec s = spec;
        s.initial = init;
        if (cycle) {
          std::string tag = init;
          std::erase(tag, ',');
          s.name = spec.name + "_" + tag;
        }
        print_record(ccqed::run_scenario(s));
      }
    } else if (*sweep) {
      ccqed::ScenarioSpec base = build_spec(sw);
      ccqed::SweepGrid grid;
      if (axes.empty()) {
        grid = ccqed::default_grid(base.name);
      } else {
        for (const auto& a : axes) {
          const auto [name, list] = ccqed::parse_setting(a);
          ccqed::SweepAxis axis{name, {}};
          std::stringstream ss(list);
          for (std::string item; std::getline(ss, item, ',');) axis.values.push_back(std::stod(item));
          grid.axes.push_back(axis);
        }
      }
      grid.base = base;
      std::printf("sweep %s: %zu points, %d job(s)\n", base.name.c_str(), grid.cardinality(), jobs);
      const auto result = ccqed::sweep(grid, jobs);
      double best = -1.0;
      for (const auto& r : result.records) {
        if (r.ok) {
          best = std::max(best, r.final_fidelity);
        } else {
          std::fprintf(stderr, "point failed: %s\n", r.error.c_str());
        }
      }
      std::printf("%zu ok, %zu failed, max F = %.6f -> %s\n", result.records.size() - result.failures,
                  result.failures, best, result.aggregate.string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
