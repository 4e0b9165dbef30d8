#include <omp.h>

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "reflectmc/config.hpp"
#include "reflectmc/plot.hpp"
#include "reflectmc/runner.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Reflective HMC experiments: Galilean Monte Carlo in balls, cubes and intervals"};
  app.require_subcommand(1);
  app.set_version_flag("--version", reflectmc::kLibraryVersion);

  std::string config_path, out_dir, manifest_path, kind;
  int workers = 0;

  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "worker threads (default: available parallelism)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (overrides the config's 'output')");

  auto* plot = app.add_subcommand("plot", "render an SVG from a finished run");
  plot->add_option("manifest", manifest_path, "manifest.json of the run")->required();
  plot->add_option("--kind", kind, "plot kind")
      ->required()
      ->check(CLI::IsMember(reflectmc::plot_kinds()));

  auto* validate = app.add_subcommand("validate", "parse and check a config without running it");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = reflectmc::load_config(config_path);
      fs::path dir = !out_dir.empty() ? fs::path(out_dir)
                     : !config.output.empty() ? fs::path(config.output)
                                              : fs::path("runs") / reflectmc::experiment_kind_name(config.kind);
      if (workers == 0) workers = omp_get_max_threads();
      const auto manifest = reflectmc::run_experiment(config, dir, {workers});
      std::cout << "wrote " << (dir / "manifest.json").string() << " ("
                << manifest["outputs"].size() << " data files, "
                << manifest["wall_time_s"].get<double>() << " s)\n";
    } else if (*plot) {
      const auto out = reflectmc::render_plot(manifest_path, kind);
      std::cout << "wrote " << out.string() << "\n";
    } else if (*validate) {
      const auto config = reflectmc::load_config(config_path);
      std::cout << reflectmc::to_json(config).dump(2) << "\n";
    }
  } catch (const reflectmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
