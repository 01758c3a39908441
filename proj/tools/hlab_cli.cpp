#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hlab/errors.hpp"
#include "hlab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo checks for honest-time arbitrage"};
  std::string experiment;
  std::string config_file;
  std::optional<long long> paths;
  std::optional<double> dt;
  std::optional<double> delta;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "json";
  bool dump = false;
  bool list = false;
  app.add_option("--experiment,-e", experiment, "Experiment id (E1..E10) or name");
  app.add_option("--config,-c", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--paths", paths, "Number of Monte Carlo paths");
  app.add_option("--dt", dt, "Time step");
  app.add_option("--delta", delta, "Horizon threshold on Z");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out-dir,-o", out_dir, "Output directory");
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--dump-paths", dump, "Write the first 8 paths as CSV");
  app.add_flag("--list", list, "List experiments and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& e : hlab::registry()) {
      std::cout << e.id << '\t' << e.name << '\t' << e.claim << '\n';
    }
    return 0;
  }

  try {
    hlab::ExperimentConfig cfg;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      hlab::apply_config_json(hlab::Json::parse(in), cfg);
    }
    if (!experiment.empty()) cfg.experiment = experiment;
    if (cfg.experiment.empty()) {
      std::cerr << "error: --experiment or a config with \"experiment\" is required\n";
      return 2;
    }
    if (paths) cfg.n_paths = *paths;
    if (dt) cfg.dt = *dt;
    if (delta) cfg.delta = *delta;
    if (seed) cfg.seed = *seed;
    if (app.count("--out-dir") || cfg.out_dir.empty()) cfg.out_dir = out_dir;
    if (app.count("--format")) cfg.format = format;
    cfg.dump_paths = cfg.dump_paths || dump;

    const hlab::ExperimentResult r = hlab::run_experiment(cfg);
    hlab::write_artifacts(r, cfg);
    for (const auto& c : r.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << r.id << ' ' << c.name << '\n';
    }
    std::cout << r.id << ' ' << (r.all_passed() ? "all checks passed" : "some checks failed")
              << " (" << r.runtime_seconds << " s)\n";
    return r.all_passed() ? 0 : 1;
  } catch (const hlab::InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
