// Command-line front end: run, describe, validate, presets.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "tdhf/errors.hpp"
#include "tdhf/scenario.hpp"
#include "tdhf/units.hpp"

using namespace tdhf;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Source {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
};

void add_source(CLI::App* cmd, Source& s) {
  auto* c = cmd->add_option("--config", s.config, "run configuration (JSON)");
  auto* p = cmd->add_option("--preset", s.preset, "built-in scenario, e.g. fig2_polarized_desk");
  c->excludes(p);
  cmd->add_option("--override", s.overrides, "dotted.key=value applied before validation")->take_all();
}

RunConfig resolve(const Source& s, const std::string& output) {
  std::vector<std::string> ov = s.overrides;
  if (!output.empty()) ov.push_back("output_dir=\"" + output + "\"");
  if (!s.config.empty()) return load_config(s.config, ov);
  if (s.preset.empty()) throw ConfigError("give --config or --preset");
  nlohmann::json doc = preset_json(s.preset);
  for (const auto& o : ov) apply_override(doc, o);
  RunConfig c = parse_config(doc);
  (void)build_scenario(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-electron TDHF simulator for plasmon-driven PINEM"};
  app.require_subcommand(1);

  Source run_src, val_src;
  std::string run_out, describe_dir, preset_name, preset_out;

  auto* run = app.add_subcommand("run", "propagate a scenario and write its run container");
  add_source(run, run_src);
  run->add_option("--output", run_out, "run directory (overrides output_dir)");

  auto* desc = app.add_subcommand("describe", "summarize and verify a run container");
  desc->add_option("dir", describe_dir, "run directory")->required();

  auto* val = app.add_subcommand("validate", "check a configuration without running it");
  add_source(val, val_src);

  auto* pre = app.add_subcommand("presets", "list presets, or write one as JSON");
  pre->add_option("--preset", preset_name, "preset to print");
  pre->add_option("--output", preset_out, "file to write the preset to");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig cfg = resolve(run_src, run_out);
      std::cerr << "running " << cfg.name << " -> " << cfg.output_dir.string() << "\n";
      const RunReport r = run_scenario(cfg, [](std::size_t step, double t) {
        std::cerr << "  snapshot at step " << step << ", t = " << units::au_to_fs(t) << " fs\n";
      });
      std::cerr << "done: " << r.summary.steps << " steps in " << r.summary.wall_seconds << " s\n";
      std::cout << describe(r.dir);
    } else if (*desc) {
      std::cout << describe(describe_dir);
    } else if (*val) {
      const RunConfig cfg = resolve(val_src, "");
      const Scenario sc = build_scenario(cfg);
      const double dt = sc.engine().resolve_dt(sc.initial);
      std::cout << "valid: " << cfg.name << ", " << cfg.grid.nx << " x " << cfg.grid.ny << ", dt = "
                << units::au_to_fs(dt) << " fs, about "
                << static_cast<long long>(std::ceil((cfg.propagation.t_end - cfg.t_start) / dt)) << " steps\n";
    } else if (*pre) {
      if (preset_name.empty()) {
        for (const auto& n : preset_names()) std::cout << n << "_desk\n" << n << "_paper\n";
      } else {
        const std::string text = preset_json(preset_name).dump(2) + "\n";
        if (preset_out.empty()) {
          std::cout << text;
        } else {
          std::ofstream f(preset_out);
          if (!(f << text)) throw IoError("cannot write " + preset_out);
        }
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
