// Command-line runner for the HAIS benchmarks.

#include "hais/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int list_presets() {
  for (const auto& p : hais::presets()) {
    std::cout << p.name << "\n    " << p.provenance << '\n';
  }
  return 0;
}

int run_command(const std::string& config_path, const std::string& preset,
                const std::vector<std::string>& overrides, const std::string& dump_samples) {
  hais::ExperimentConfig config;
  if (!config_path.empty()) {
    config = hais::load_config_file(config_path);
  } else if (!preset.empty()) {
    config = hais::preset_config(preset);
  } else {
    throw hais::Error("run needs --config or --preset");
  }
  for (const auto& o : overrides) hais::apply_override(config, o);
  config.validate();

  const auto budget = hais::budget_estimate(config);
  std::cerr << "method " << hais::to_string(config.method) << ", " << config.runs
            << " run(s), T = " << budget.iterations << " iterations\n"
            << "per run: " << budget.weighting_density << " weighting density evals, "
            << budget.hmc_density << " HMC density evals, " << budget.hmc_gradient
            << " HMC gradient evals\n";

  std::ofstream dump;
  bool dump_header = true;
  if (!dump_samples.empty()) {
    dump.open(dump_samples);
    if (!dump) throw hais::Error("cannot write '" + dump_samples + "'");
  }
  hais::RunObserver observer;
  if (dump.is_open()) {
    observer = [&](const hais::ResultRow& row, const hais::RunOutput& output) {
      hais::write_archive_csv(output, row.run, dump, dump_header);
      dump_header = false;
    };
  }

  std::ofstream file;
  if (!config.out.empty()) {
    file.open(config.out);
    if (!file) throw hais::Error("cannot write '" + config.out + "'");
  }
  const auto result = hais::run_experiment(config, observer);
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  hais::write_results_csv(result, out, config.timing);

  for (int d : config.dims()) {
    const auto& s = result.summary_at(d);
    std::cerr << "d=" << d << ": mean ESS " << s.ess << ", acceptance " << s.acceptance;
    if (s.err_mean) std::cerr << ", MSE E[x] " << *s.err_mean;
    if (s.err_z) std::cerr << ", MSE Z " << *s.err_z;
    std::cerr << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian adaptive importance sampling benchmarks"};
  app.require_subcommand(1);

  auto* presets_cmd = app.add_subcommand("presets", "List the built-in experiment presets");

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its results CSV");
  std::string config_path;
  std::string preset;
  std::string out;
  std::string dump_samples;
  int runs = 0;
  long long seed = -1;
  int threads = 0;
  std::vector<std::string> overrides;
  run_cmd->add_option("--config", config_path, "Key=value config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--preset", preset, "Built-in preset name");
  run_cmd->add_option("--runs", runs, "Number of independent runs");
  run_cmd->add_option("--seed", seed, "Master seed");
  run_cmd->add_option("--out", out, "Results CSV path (default: stdout)");
  run_cmd->add_option("--threads", threads, "Runs executed in parallel");
  run_cmd->add_option("--dump-samples", dump_samples, "Write every weighted sample to this CSV");
  run_cmd->add_option("overrides", overrides, "key=value overrides");
  run_cmd->get_option("--preset")->excludes(run_cmd->get_option("--config"));

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets_cmd->parsed()) return list_presets();
    if (runs > 0) overrides.push_back("runs=" + std::to_string(runs));
    if (seed >= 0) overrides.push_back("seed=" + std::to_string(seed));
    if (threads > 0) overrides.push_back("threads=" + std::to_string(threads));
    if (!out.empty()) overrides.push_back("out=" + out);
    return run_command(config_path, preset, overrides, dump_samples);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
