// heatdim: run experiments from config files, verify the shipped fixtures, dump spectra.

#include "heatdim/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#ifndef HEATDIM_DATA_DIR
#define HEATDIM_DATA_DIR "data"
#endif

namespace {

int exit_code_for(const heatdim::Error& e) {
  if (dynamic_cast<const heatdim::InputError*>(&e)) return 2;
  return 3;
}

int finish(const heatdim::RunReport& report, const std::string& out, bool quiet) {
  const auto files = heatdim::write_report(report, out);
  if (!quiet) {
    std::cout << heatdim::summary_table(report);
    std::cout << "wrote " << files.size() << " files to " << out << "\n";
  }
  return report.all_gates_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heat-semigroup dimension experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  bool quiet = false;
  std::uint64_t seed = 20240611;
  std::string data_dir = HEATDIM_DATA_DIR;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory (default: the config's output key, else ./heatdim_out)");
  run->add_flag("--quiet", quiet, "do not print the summary table");

  auto* verify = app.add_subcommand("verify", "identity and gate suite on the shipped fixtures");
  verify->add_option("--seed", seed, "seed for randomized fixtures")->capture_default_str();
  verify->add_option("--out", out, "output directory (default ./heatdim_verify)");
  verify->add_option("--data", data_dir, "fixture directory")->capture_default_str();
  verify->add_flag("--quiet", quiet, "do not print the summary table");

  auto* spectrum = app.add_subcommand("spectrum", "print the generator eigenvalues of a config's model as CSV");
  spectrum->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every usage error, including a missing config file, is a config error
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const heatdim::ExperimentConfig cfg = heatdim::load_config(config);
      const heatdim::RunReport report = heatdim::run_experiment(cfg);
      if (out.empty()) out = cfg.output.empty() ? "heatdim_out" : cfg.output;
      return finish(report, out, quiet);
    }
    if (*verify) {
      const heatdim::RunReport report = heatdim::run_verify(seed, data_dir);
      return finish(report, out.empty() ? "heatdim_verify" : out, quiet);
    }
    if (*spectrum) {
      const heatdim::ExperimentConfig cfg = heatdim::load_config(config);
      if (!cfg.model) throw heatdim::ConfigError(config + ": spectrum needs a [model] section");
      const heatdim::FiniteModel model = heatdim::build_model(*cfg.model, cfg.seed);
      const auto& ev = model.spectrum().eigenvalues;
      std::printf("# seed = %llu\n# model = %s\nindex,lambda\n", static_cast<unsigned long long>(cfg.seed),
                  model.label().c_str());
      for (heatdim::Index k = 0; k < ev.size(); ++k) std::printf("%ld,%.17g\n", static_cast<long>(k), ev(k));
      return 0;
    }
  } catch (const heatdim::Error& e) {
    std::cerr << "heatdim: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "heatdim: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
