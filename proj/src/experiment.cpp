#include "hais/experiment.hpp"

#include "hais/baseline.hpp"
#include "hais/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hais {

namespace {

// Bimodal mode variance; the presets' mass makes an L*eps trajectory a quarter
// period of a mode's harmonic motion.
constexpr double kModeVariance = 5.0;
constexpr int kTable1Steps = 50;

double table1_mass(double eps) {
  const double quarter = 2.0 * kTable1Steps * eps / std::numbers::pi;
  return quarter * quarter / kModeVariance;
}

constexpr double kBananaEps = 0.1;
constexpr int kBananaSteps = 10;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error("key '" + key + "': expected a number, got '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const double value = parse_double(key, text);
  if (value != std::floor(value) || std::abs(value) > 9.0e15) {
    throw Error("key '" + key + "': expected an integer, got '" + text + "'");
  }
  return static_cast<long long>(value);
}

int parse_int(const std::string& key, const std::string& text) {
  const long long value = parse_integer(key, text);
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    throw Error("key '" + key + "': value out of range");
  }
  return static_cast<int>(value);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error("key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_double(key, part));
  if (values.empty()) throw Error("key '" + key + "': empty list");
  return values;
}

std::vector<std::vector<double>> parse_components(const std::string& key,
                                                  const std::string& text) {
  std::vector<std::vector<double>> components;
  for (const auto& part : split(text, ';')) components.push_back(parse_list(key, part));
  return components;
}

/// A value given once or per coordinate.
Vector broadcast(const std::vector<double>& values, int dim, const std::string& what) {
  if (values.size() == 1) return Vector::Constant(dim, values.front());
  if (static_cast<int>(values.size()) != dim) {
    throw Error(what + " needs 1 or " + std::to_string(dim) + " values, got " +
                std::to_string(values.size()));
  }
  return Eigen::Map<const Vector>(values.data(), dim);
}

std::string format_double(double value) {
  std::ostringstream s;
  s << std::setprecision(17) << value;
  return s.str();
}

}  // namespace

std::string to_string(Method method) {
  return method == Method::kHais ? "hais" : "static_is";
}

std::string to_string(WeightingMode mode) {
  return mode == WeightingMode::kStandardDm ? "standard_dm" : "literal_alg2";
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "preset") {
    preset = value;
  } else if (key == "target") {
    if (value == "gaussian_mixture") {
      target = TargetKind::kGaussianMixture;
    } else if (value == "banana") {
      target = TargetKind::kBanana;
    } else {
      throw Error("key 'target': expected gaussian_mixture or banana, got '" + value + "'");
    }
  } else if (key == "dim") {
    dim = parse_int(key, value);
  } else if (key == "mixture_weights") {
    mixture_weights = parse_list(key, value);
  } else if (key == "mixture_means") {
    mixture_means = parse_components(key, value);
  } else if (key == "mixture_variances") {
    mixture_variances = parse_components(key, value);
  } else if (key == "banana_b") {
    banana_b = parse_double(key, value);
  } else if (key == "banana_sigma") {
    banana_sigma = parse_double(key, value);
  } else if (key == "method") {
    if (value == "hais") {
      method = Method::kHais;
    } else if (value == "static_is") {
      method = Method::kStaticIs;
    } else {
      throw Error("key 'method': expected hais or static_is, got '" + value + "'");
    }
  } else if (key == "proposals") {
    proposals = parse_int(key, value);
  } else if (key == "per_proposal") {
    per_proposal = parse_int(key, value);
  } else if (key == "iterations") {
    iterations = parse_int(key, value);
    budget = 0.0;
  } else if (key == "budget") {
    budget = parse_double(key, value);
  } else if (key == "budget_mode") {
    if (value == "weighting_only") {
      budget_mode = BudgetMode::kWeightingOnly;
    } else if (value == "all_evals") {
      budget_mode = BudgetMode::kAllEvals;
    } else {
      throw Error("key 'budget_mode': expected weighting_only or all_evals, got '" + value + "'");
    }
  } else if (key == "eps") {
    eps = parse_double(key, value);
  } else if (key == "leapfrog_steps") {
    leapfrog_steps = parse_int(key, value);
  } else if (key == "mass") {
    mass = parse_list(key, value);
  } else if (key == "proposal_variance") {
    proposal_variance = parse_list(key, value);
  } else if (key == "init_low") {
    init_low = parse_double(key, value);
  } else if (key == "init_high") {
    init_high = parse_double(key, value);
  } else if (key == "weighting") {
    if (value == "standard_dm") {
      weighting = WeightingMode::kStandardDm;
    } else if (value == "literal_alg2") {
      weighting = WeightingMode::kLiteralAlg2;
    } else {
      throw Error("key 'weighting': expected standard_dm or literal_alg2, got '" + value + "'");
    }
  } else if (key == "burn_in") {
    burn_in = parse_int(key, value);
  } else if (key == "seed") {
    const long long s = parse_integer(key, value);
    if (s < 0) throw Error("key 'seed': must be nonnegative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "runs") {
    runs = parse_int(key, value);
  } else if (key == "threads") {
    threads = parse_int(key, value);
  } else if (key == "sweep_dims") {
    sweep_dims.clear();
    if (!value.empty()) {
      for (const auto& part : split(value, ',')) sweep_dims.push_back(parse_int(key, part));
    }
  } else if (key == "out") {
    out = value;
  } else if (key == "timing") {
    timing = parse_bool(key, value);
  } else {
    throw Error("unknown key '" + key + "'");
  }
}

std::vector<int> ExperimentConfig::dims() const {
  return sweep_dims.empty() ? std::vector<int>{dim} : sweep_dims;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw Error("runs must be at least 1");
  if (threads < 1) throw Error("threads must be at least 1");
  if (budget < 0.0) throw Error("budget must be nonnegative");
  for (int d : dims()) {
    const TargetModel model = make_target(*this, d);
    make_hais_config(*this, d, seed).validate(model.dim());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              ExperimentConfig base) {
  std::istringstream stream(text);
  std::string line;
  int number = 0;
  while (std::getline(stream, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw Error(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "preset") {
        base = preset_config(trim(value));
      } else {
        base.set(key, value);
      }
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error("override '" + assignment + "' is not of the form key=value");
  }
  config.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = [] {
    std::vector<Preset> out;

    ExperimentConfig bimodal;
    bimodal.target = TargetKind::kGaussianMixture;
    bimodal.dim = 20;
    bimodal.mixture_weights = {0.5, 0.5};
    bimodal.mixture_means = {{8.0}, {-8.0}};
    bimodal.mixture_variances = {{kModeVariance}, {kModeVariance}};
    bimodal.proposals = 100;
    bimodal.per_proposal = 5;
    bimodal.budget = 2.0e5;
    bimodal.leapfrog_steps = kTable1Steps;
    bimodal.init_low = -4.0;
    bimodal.init_high = 4.0;
    bimodal.runs = 200;
    for (double eps : {5.0, 10.0}) {
      for (int sigma : {1, 2, 5}) {
        ExperimentConfig c = bimodal;
        c.eps = eps;
        c.mass = {table1_mass(eps)};
        c.proposal_variance = {static_cast<double>(sigma) * sigma};
        c.preset = "table1_hais_eps" + std::to_string(static_cast<int>(eps)) + "_sigma" +
                   std::to_string(sigma);
        out.push_back({c.preset,
                       "bimodal Gaussian mixture, d=20, modes at +/-8, variance 5; N=100, K=5, "
                       "2e5 evaluations; HAIS eps=" +
                           std::to_string(static_cast<int>(eps)) + ", L=50, proposal sigma=" +
                           std::to_string(sigma),
                       c});
      }
    }

    ExperimentConfig banana;
    banana.preset = "banana_sweep";
    banana.target = TargetKind::kBanana;
    banana.banana_b = 3.0;
    banana.banana_sigma = 1.0;
    banana.sweep_dims = {2, 5, 10, 20, 50};
    banana.dim = 2;
    banana.proposals = 100;
    banana.per_proposal = 5;
    banana.budget = 2.0e5;
    banana.eps = kBananaEps;
    banana.leapfrog_steps = kBananaSteps;
    banana.mass = {1.0};
    banana.proposal_variance = {1.0};
    banana.runs = 200;
    out.push_back({banana.preset,
                   "banana target b=3, sigma=1, d in {2,5,10,20,50}; N=100, K=5, 2e5 evaluations, "
                   "proposal variance 1",
                   banana});

    ExperimentConfig smoke;
    smoke.preset = "smoke";
    smoke.target = TargetKind::kGaussianMixture;
    smoke.dim = 2;
    smoke.mixture_weights = {0.5, 0.5};
    smoke.mixture_means = {{3.0}, {-3.0}};
    smoke.mixture_variances = {{1.0}, {1.0}};
    smoke.proposals = 10;
    smoke.per_proposal = 2;
    smoke.iterations = 20;
    smoke.eps = 0.5;
    smoke.leapfrog_steps = 10;
    smoke.proposal_variance = {1.0};
    smoke.runs = 3;
    out.push_back({smoke.preset, "plumbing check: d=2 bimodal, N=10, K=2, T=20, 3 runs", smoke});
    return out;
  }();
  return table;
}

ExperimentConfig preset_config(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p.config;
  }
  throw Error("unknown preset '" + name + "'");
}

TargetModel make_target(const ExperimentConfig& config, int dim) {
  if (config.target == TargetKind::kBanana) {
    return banana_target({dim, config.banana_b, config.banana_sigma});
  }
  GaussianMixtureSpec spec;
  spec.weights = config.mixture_weights;
  if (config.mixture_means.size() != spec.weights.size() ||
      config.mixture_variances.size() != spec.weights.size()) {
    throw Error("mixture_weights, mixture_means and mixture_variances list different component counts");
  }
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    spec.means.push_back(broadcast(config.mixture_means[i], dim, "mixture mean"));
    spec.variances.push_back(broadcast(config.mixture_variances[i], dim, "mixture variance"));
  }
  return gaussian_mixture_target(spec);
}

int resolved_iterations(const ExperimentConfig& config) {
  if (config.budget <= 0.0) return config.iterations;
  const double n = config.proposals;
  double per_iteration = n * config.per_proposal;
  if (config.budget_mode == BudgetMode::kAllEvals && config.method == Method::kHais) {
    per_iteration += n * (config.leapfrog_steps + 1) + 2.0 * n;
  }
  return std::max(1, static_cast<int>(std::floor(config.budget / per_iteration)));
}

BudgetEstimate budget_estimate(const ExperimentConfig& config) {
  BudgetEstimate b;
  b.iterations = resolved_iterations(config);
  const std::int64_t chain_steps = static_cast<std::int64_t>(config.proposals) * b.iterations;
  b.weighting_density = chain_steps * config.per_proposal;
  if (config.method == Method::kHais) {
    b.hmc_density = 2 * chain_steps;
    b.hmc_gradient = chain_steps * (config.leapfrog_steps + 1);
  }
  return b;
}

HaisConfig make_hais_config(const ExperimentConfig& config, int dim, std::uint64_t seed) {
  HaisConfig c;
  c.proposals = config.proposals;
  c.per_proposal = config.per_proposal;
  c.iterations = resolved_iterations(config);
  c.hmc = HmcParams{config.eps, config.leapfrog_steps, broadcast(config.mass, dim, "mass")};
  c.proposal_variances = broadcast(config.proposal_variance, dim, "proposal_variance");
  c.init_box = {config.init_low, config.init_high};
  c.seed = seed;
  c.weighting = config.weighting;
  c.burn_in = config.burn_in;
  c.threads = 1;
  c.adapt = config.method == Method::kHais;
  return c;
}

std::uint64_t run_seed(std::uint64_t master, int run) {
  return substream_seed(master, StreamRole::kRun, static_cast<std::uint64_t>(run));
}

std::vector<ResultRow> ExperimentResult::runs_at(int dim) const {
  std::vector<ResultRow> out;
  for (const auto& r : rows) {
    if (r.kind == RowKind::kRun && r.dim == dim) out.push_back(r);
  }
  return out;
}

const ResultRow& ExperimentResult::summary_at(int dim) const {
  for (const auto& r : rows) {
    if (r.kind == RowKind::kSummary && r.dim == dim) return r;
  }
  throw Error("no summary row for dimension " + std::to_string(dim));
}

ResultRow summarize(const std::vector<ResultRow>& runs, const TargetModel& target) {
  if (runs.empty()) throw Error("cannot summarize zero runs");
  ResultRow s;
  s.kind = RowKind::kSummary;
  s.dim = runs.front().dim;
  s.method = runs.front().method;
  s.iterations = runs.front().iterations;
  s.seed = 0;
  s.snis_mean = Vector::Zero(s.dim);
  const double count = static_cast<double>(runs.size());
  std::vector<Vector> means;
  std::vector<double> zs;
  for (const auto& r : runs) {
    means.push_back(r.snis_mean);
    zs.push_back(r.z_hat);
    s.snis_mean += r.snis_mean / count;
    s.z_hat += r.z_hat / count;
    s.ess += r.ess / count;
    s.acceptance += r.acceptance / count;
    s.density_evals += r.density_evals;
    s.gradient_evals += r.gradient_evals;
  }
  s.log_z_hat = std::log(s.z_hat);
  s.density_evals /= static_cast<std::int64_t>(runs.size());
  s.gradient_evals /= static_cast<std::int64_t>(runs.size());
  if (const auto& truth = target.ground_truth()) {
    s.err_mean = mse_over_runs(means, truth->mean);
    if (truth->log_z) s.err_z = mse_over_runs(zs, std::exp(*truth->log_z));
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunObserver& observer) {
  config.validate();
  ExperimentResult result;
  std::mutex observer_mutex;

  for (int dim : config.dims()) {
    const TargetModel target = make_target(config, dim);
    std::vector<ResultRow> rows(static_cast<std::size_t>(config.runs));

    parallel_for(rows.size(), config.threads, [&](std::size_t r) {
      const std::uint64_t seed = run_seed(config.seed, static_cast<int>(r));
      const HaisConfig hais = make_hais_config(config, dim, seed);
      const auto start = std::chrono::steady_clock::now();
      const RunOutput output = run(hais, target);
      const auto stop = std::chrono::steady_clock::now();

      ResultRow& row = rows[r];
      row.kind = RowKind::kRun;
      row.dim = dim;
      row.run = static_cast<int>(r);
      row.seed = seed;
      row.method = config.method;
      row.iterations = hais.iterations;
      row.snis_mean = output.estimates.snis_mean;
      row.z_hat = output.estimates.z_hat;
      row.log_z_hat = output.estimates.log_z_hat;
      row.ess = output.estimates.ess_normalized;
      row.acceptance = output.acceptance_rate;
      row.density_evals = output.evaluations.density_total();
      row.gradient_evals = output.evaluations.hmc_gradient;
      row.wall_time = std::chrono::duration<double>(stop - start).count();
      if (const auto& truth = target.ground_truth()) {
        row.err_mean = (row.snis_mean - truth->mean).squaredNorm();
        if (truth->log_z) {
          const double dz = row.z_hat - std::exp(*truth->log_z);
          row.err_z = dz * dz;
        }
      }
      if (observer) {
        std::lock_guard lock(observer_mutex);
        observer(row, output);
      }
    });

    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    ResultRow summary = summarize(rows, target);
    summary.seed = config.seed;
    result.rows.push_back(summary);
  }
  return result;
}

void write_results_csv(const ExperimentResult& result, std::ostream& out, bool with_timing) {
  int width = 0;
  for (const auto& r : result.rows) width = std::max(width, static_cast<int>(r.snis_mean.size()));

  out << "kind,dim,run,seed,method,iterations,z_hat,log_z_hat,ess,acceptance,density_evals,"
         "gradient_evals,err_mean,err_z";
  if (with_timing) out << ",wall_time_s";
  for (int i = 0; i < width; ++i) out << ",mean_" << i;
  out << '\n';

  auto optional = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
  };
  for (const auto& r : result.rows) {
    const bool run = r.kind == RowKind::kRun;
    out << (run ? "run" : "summary") << ',' << r.dim << ',' << (run ? std::to_string(r.run) : "")
        << ',' << r.seed << ',' << to_string(r.method) << ','
        << r.iterations << ',' << format_double(r.z_hat) << ',' << format_double(r.log_z_hat)
        << ',' << format_double(r.ess) << ',' << format_double(r.acceptance) << ','
        << r.density_evals << ',' << r.gradient_evals << ',' << optional(r.err_mean) << ','
        << optional(r.err_z);
    if (with_timing) out << ',' << (run ? optional(r.wall_time) : std::string{});
    for (int i = 0; i < width; ++i) {
      out << ',';
      if (i < r.snis_mean.size()) out << format_double(r.snis_mean[i]);
    }
    out << '\n';
  }
}

ExperimentResult read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("results csv: missing header");
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const char* required : {"kind", "dim", "run", "seed", "method", "iterations", "z_hat",
                               "log_z_hat", "ess", "acceptance", "density_evals",
                               "gradient_evals", "err_mean", "err_z"}) {
    if (!column.count(required)) {
      throw Error(std::string("results csv: missing column '") + required + "'");
    }
  }
  int width = 0;
  while (column.count("mean_" + std::to_string(width))) ++width;

  ExperimentResult result;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw Error("results csv line " + std::to_string(number) + ": wrong field count");
    }
    auto field = [&](const std::string& name) -> const std::string& {
      return fields[column.at(name)];
    };
    auto optional = [&](const std::string& name) -> std::optional<double> {
      const auto& f = field(name);
      if (f.empty()) return std::nullopt;
      return parse_double(name, f);
    };
    try {
      ResultRow r;
      r.kind = field("kind") == "run" ? RowKind::kRun : RowKind::kSummary;
      r.dim = parse_int("dim", field("dim"));
      if (r.kind == RowKind::kRun) {
        r.run = parse_int("run", field("run"));
      }
      r.seed = std::stoull(field("seed"));
      r.method = field("method") == "hais" ? Method::kHais : Method::kStaticIs;
      r.iterations = parse_int("iterations", field("iterations"));
      r.z_hat = parse_double("z_hat", field("z_hat"));
      r.log_z_hat = parse_double("log_z_hat", field("log_z_hat"));
      r.ess = parse_double("ess", field("ess"));
      r.acceptance = parse_double("acceptance", field("acceptance"));
      r.density_evals = std::stoll(field("density_evals"));
      r.gradient_evals = std::stoll(field("gradient_evals"));
      r.err_mean = optional("err_mean");
      r.err_z = optional("err_z");
      if (column.count("wall_time_s")) r.wall_time = optional("wall_time_s");
      r.snis_mean = Vector::Zero(r.dim);
      for (int i = 0; i < std::min(width, r.dim); ++i) {
        r.snis_mean[i] = parse_double("mean", field("mean_" + std::to_string(i)));
      }
      result.rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error("results csv line " + std::to_string(number) + ": " + e.what());
    }
  }
  return result;
}

void write_archive_csv(const RunOutput& output, int run, std::ostream& out, bool header) {
  const auto& archive = output.archive;
  if (header) {
    out << "run,iteration,proposal,log_weight";
    for (int d = 0; d < archive.dim(); ++d) out << ",x_" << d;
    out << '\n';
  }
  const auto points = archive.points();
  const auto log_w = archive.log_weights();
  for (Eigen::Index i = 0; i < archive.size(); ++i) {
    const auto j = static_cast<std::size_t>(i);
    out << run << ',' << archive.iterations()[j] << ',' << archive.proposals()[j] << ','
        << format_double(log_w[i]);
    for (int d = 0; d < archive.dim(); ++d) out << ',' << format_double(points(d, i));
    out << '\n';
  }
}

}  // namespace hais
