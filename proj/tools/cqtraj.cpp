// Command-line front end: run a JSON scenario or a builtin preset.
//
// Exit codes: 0 every trajectory completed, 2 at least one stopped early,
// 1 configuration or I/O error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cqtraj/scenario.hpp"

namespace {

struct Overrides {
  std::string out_dir = ".";
  int samples = 0;
  double tol = 0;
  std::vector<std::string> formats;
};

cqtraj::RunOptions to_options(const Overrides& o) {
  cqtraj::RunOptions opts;
  opts.out_dir = o.out_dir;
  if (o.samples > 0) opts.samples = o.samples;
  if (o.tol > 0) opts.tolerance = o.tol;
  if (!o.formats.empty()) {
    std::vector<cqtraj::OutputFormat> fmts;
    for (const auto& f : o.formats) {
      auto parsed = cqtraj::parse_output_format(f);
      if (!parsed) throw cqtraj::ConfigError({"--format: unknown format '" + f + "'"});
      fmts.push_back(*parsed);
    }
    opts.formats = fmts;
  }
  return opts;
}

int execute(const cqtraj::ScenarioConfig& cfg, const Overrides& o) {
  const auto report = cqtraj::run_scenario(cfg, to_options(o));
  std::size_t early = 0;
  for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
    const auto& t = report.trajectories[i];
    const auto& s = t.trajectory.stop;
    if (!t.trajectory.completed()) ++early;
    std::printf("%-28s %-12s t=%-10.6g %s\n", t.trajectory.meta.at("label").c_str(),
                cqtraj::to_string(s.kind), s.time, s.detail.c_str());
  }
  std::printf("%s: %zu trajectories, %zu stopped early, %.3f s\n", report.config.name.c_str(),
              report.trajectories.size(), early, report.wall_seconds);
  return early ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex quantum trajectories"};
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--out-dir", o.out_dir, "Directory for artifacts");
    cmd->add_option("--samples", o.samples, "Override the sample count")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", o.tol, "Override rel_tol and abs_tol")->check(CLI::PositiveNumber);
    cmd->add_option("--format", o.formats, "Output format: csv, json, svg (repeatable)")
        ->take_all()
        ->allow_extra_args(false);
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a JSON scenario file");
  run->add_option("config", config_path, "Scenario file")->required();
  add_common(run);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "Run a builtin preset");
  preset->add_option("name", preset_name, "Preset name (see list-presets)")->required();
  add_common(preset);

  auto* list = app.add_subcommand("list-presets", "Print the builtin presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*list) {
      for (const auto& name : cqtraj::preset_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (*run) return execute(cqtraj::load_config(config_path), o);
    return execute(cqtraj::preset(preset_name), o);
  } catch (const cqtraj::ConfigError& e) {
    std::fprintf(stderr, "configuration error:\n");
    for (const auto& v : e.violations()) std::fprintf(stderr, "  %s\n", v.c_str());
    return 1;
  } catch (const cqtraj::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
