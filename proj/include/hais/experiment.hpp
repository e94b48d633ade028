#pragma once

#include "hais/engine.hpp"
#include "hais/targets.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hais {

enum class TargetKind { kGaussianMixture, kBanana };
enum class Method { kHais, kStaticIs };
enum class BudgetMode { kWeightingOnly, kAllEvals };

/// Everything a benchmark needs, as read from a flat key=value config.
struct ExperimentConfig {
  std::string preset;
  TargetKind target = TargetKind::kGaussianMixture;
  int dim = 2;
  /// Component means/variances are given per component, either one value
  /// broadcast over every coordinate or `dim` values.
  std::vector<double> mixture_weights{1.0};
  std::vector<std::vector<double>> mixture_means{{0.0}};
  std::vector<std::vector<double>> mixture_variances{{1.0}};
  double banana_b = 3.0;
  double banana_sigma = 1.0;

  Method method = Method::kHais;
  int proposals = 10;
  int per_proposal = 2;
  int iterations = 20;
  /// When positive, iterations are derived from this many target evaluations.
  double budget = 0.0;
  BudgetMode budget_mode = BudgetMode::kWeightingOnly;
  double eps = 0.5;
  int leapfrog_steps = 10;
  std::vector<double> mass{1.0};
  std::vector<double> proposal_variance{1.0};
  double init_low = -4.0;
  double init_high = 4.0;
  WeightingMode weighting = WeightingMode::kStandardDm;
  int burn_in = 0;

  std::uint64_t seed = 1;
  int runs = 1;
  int threads = 1;
  /// Dimensions to sweep; empty means just `dim`.
  std::vector<int> sweep_dims;
  std::string out;
  /// Adds a wall-time column (which makes the CSV non-reproducible).
  bool timing = false;

  /// Sets one key from its textual value. Throws Error on unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);

  /// Throws Error when the config cannot be run.
  void validate() const;

  /// Dimensions this experiment runs at, in order.
  std::vector<int> dims() const;
};

/// Parses `key = value` lines; '#' starts a comment. Errors carry
/// "<source>:<line>: ".
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path);

/// Applies a command-line `key=value` override.
void apply_override(ExperimentConfig& config, const std::string& assignment);

struct Preset {
  std::string name;
  std::string provenance;
  ExperimentConfig config;
};

const std::vector<Preset>& presets();
/// Throws Error for an unknown name.
ExperimentConfig preset_config(const std::string& name);

/// Target built from the config at dimension `dim`.
TargetModel make_target(const ExperimentConfig& config, int dim);

/// Engine config for one run at dimension `dim` with seed `run_seed`.
HaisConfig make_hais_config(const ExperimentConfig& config, int dim, std::uint64_t run_seed);

/// Iterations implied by the budget (or the explicit count when no budget).
int resolved_iterations(const ExperimentConfig& config);

/// Target-density evaluations one run performs, split the way the engine
/// counts them.
struct BudgetEstimate {
  int iterations = 0;
  std::int64_t weighting_density = 0;
  std::int64_t hmc_density = 0;
  std::int64_t hmc_gradient = 0;
};
BudgetEstimate budget_estimate(const ExperimentConfig& config);

/// Seed of run r: the (seed, run, r) substream.
std::uint64_t run_seed(std::uint64_t master, int run);

enum class RowKind { kRun, kSummary };

/// One CSV row. Run rows hold one run's estimates and squared errors;
/// summary rows hold the per-dimension averages and MSEs.
struct ResultRow {
  RowKind kind = RowKind::kRun;
  int dim = 0;
  int run = -1;
  std::uint64_t seed = 0;
  Method method = Method::kHais;
  int iterations = 0;
  double z_hat = 0.0;
  double log_z_hat = 0.0;
  double ess = 0.0;
  double acceptance = 0.0;
  std::int64_t density_evals = 0;
  std::int64_t gradient_evals = 0;
  /// Squared error (run rows) or MSE (summary rows) of the mean estimate.
  std::optional<double> err_mean;
  /// Same for Z; empty when the target's Z is unknown.
  std::optional<double> err_z;
  std::optional<double> wall_time;
  Vector snis_mean;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;

  std::vector<ResultRow> runs_at(int dim) const;
  const ResultRow& summary_at(int dim) const;
};

/// Called once per finished run, serialized across worker threads.
using RunObserver = std::function<void(const ResultRow&, const RunOutput&)>;

/// Runs every repetition at every dimension. Runs execute in parallel over
/// `config.threads` workers; rows come out in (dim, run) order regardless.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunObserver& observer = {});

/// Summary row recomputed from run rows and the target's ground truth.
ResultRow summarize(const std::vector<ResultRow>& runs, const TargetModel& target);

void write_results_csv(const ExperimentResult& result, std::ostream& out, bool with_timing);
ExperimentResult read_results_csv(std::istream& in);

/// Every weighted sample of a run, one row each.
void write_archive_csv(const RunOutput& output, int run, std::ostream& out, bool header);

std::string to_string(Method method);
std::string to_string(WeightingMode mode);

}  // namespace hais
