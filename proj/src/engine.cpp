#include "hais/engine.hpp"

#include "hais/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hais {

namespace {

constexpr int kMaxInitAttempts = 1000;

void require(bool ok, const std::string& message) {
  if (!ok) throw Error("config: " + message);
}

}  // namespace

void HaisConfig::validate(int dim) const {
  require(proposals >= 1, "number of proposals must be at least 1");
  require(per_proposal >= 1, "samples per proposal must be at least 1");
  require(iterations >= 1, "iterations must be at least 1");
  require(burn_in >= 0 && burn_in < iterations, "burn-in must lie in [0, iterations)");
  require(proposal_variances.size() == dim, "proposal variance has wrong dimension");
  require((proposal_variances.array() > 0.0).all() && proposal_variances.allFinite(),
          "proposal variances must be positive");
  require(threads >= 1, "threads must be at least 1");
  if (adapt) hmc.validate(dim);
  if (init_locations) {
    require(init_locations->rows() == dim && init_locations->cols() == proposals,
            "explicit initial locations must be dim x proposals");
  } else {
    require(init_box.low < init_box.high, "initialization box needs low < high");
  }
}

Vector weight_samples(const ProposalBank& bank, const TargetModel& target,
                      const SampleSet& samples, WeightingMode mode, int threads) {
  const auto count = static_cast<Eigen::Index>(samples.size());
  const double log_n = std::log(static_cast<double>(bank.size()));
  Vector log_w(count);

  if (mode == WeightingMode::kStandardDm) {
    parallel_for(samples.size(), threads, [&](std::size_t j) {
      const auto m = static_cast<Eigen::Index>(j);
      const Vector x = samples.points.col(m);
      const double numerator = target.log_density(x);
      log_w[m] = numerator == -std::numeric_limits<double>::infinity()
                     ? numerator
                     : numerator - (bank.mixture_log_pdf(x) - log_n);
    });
    return log_w;
  }

  // Literal reading: the denominator for draw k is sum_i q_i(x_{i,k}), shared
  // by every proposal's k-th draw.
  int per_proposal = 0;
  for (int draw : samples.draw) per_proposal = std::max(per_proposal, draw + 1);
  if (static_cast<Eigen::Index>(per_proposal) * bank.size() != count) {
    throw Error("literal weighting needs exactly K draws from every proposal");
  }
  Vector log_denominator(per_proposal);
  for (int k = 0; k < per_proposal; ++k) {
    Vector own(bank.size());
    for (int i = 0; i < bank.size(); ++i) {
      own[i] = bank.log_pdf(i, samples.points.col(static_cast<Eigen::Index>(i) * per_proposal + k));
    }
    log_denominator[k] = log_sum_exp(own) - log_n;
  }
  parallel_for(samples.size(), threads, [&](std::size_t j) {
    const auto m = static_cast<Eigen::Index>(j);
    const double numerator = target.log_density(samples.points.col(m));
    log_w[m] = numerator == -std::numeric_limits<double>::infinity()
                   ? numerator
                   : numerator - log_denominator[samples.draw[j]];
  });
  return log_w;
}

double ParallelHmcResult::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  return static_cast<double>(std::count(accepted.begin(), accepted.end(), char{1})) /
         static_cast<double>(accepted.size());
}

ParallelHmcResult adapt_parallel_hmc(const ProposalBank& bank, const TargetModel& target,
                                     const HmcParams& params, std::uint64_t seed, int iteration,
                                     int threads) {
  const auto chains = static_cast<std::size_t>(bank.size());
  ParallelHmcResult out;
  out.locations.resize(bank.dim(), bank.size());
  out.log_densities.resize(bank.size());
  out.accepted.assign(chains, 0);
  std::vector<int> density_evals(chains, 0);
  std::vector<int> gradient_evals(chains, 0);

  parallel_for(chains, threads, [&](std::size_t c) {
    const auto n = static_cast<Eigen::Index>(c);
    RngStream rng(seed, StreamRole::kHmc, c, static_cast<std::uint64_t>(iteration));
    const HmcTransition step = hmc_step(target, bank.location(static_cast<int>(n)), params, rng);
    out.locations.col(n) = step.new_state;
    out.log_densities[n] = step.log_density;
    out.accepted[c] = step.accepted ? 1 : 0;
    density_evals[c] = step.density_evals;
    gradient_evals[c] = step.gradient_evals;
  });
  for (std::size_t c = 0; c < chains; ++c) {
    out.density_evals += density_evals[c];
    out.gradient_evals += gradient_evals[c];
  }
  return out;
}

CooperationMeasure cooperation_weights(const Matrix& proposed, const Vector& log_densities,
                                       const ProposalBank& previous, WeightingMode mode) {
  const auto count = proposed.cols();
  if (count != previous.size() || log_densities.size() != count ||
      proposed.rows() != previous.dim()) {
    throw Error("cooperation: proposed locations do not match the previous bank");
  }

  Vector log_w(count);
  if (mode == WeightingMode::kStandardDm) {
    for (Eigen::Index n = 0; n < count; ++n) {
      log_w[n] = log_densities[n] - previous.mixture_log_pdf(proposed.col(n));
    }
  } else {
    // The literal denominator sum_i q_i(mu*_i; mu_i) is common to every atom.
    log_w = log_densities;
  }
  for (Eigen::Index n = 0; n < count; ++n) {
    if (log_densities[n] == -std::numeric_limits<double>::infinity()) {
      log_w[n] = log_densities[n];
    }
  }

  const double total = log_sum_exp(log_w);
  if (!std::isfinite(total)) {
    throw DegeneracyError("cooperation: every chain sits at a zero-density point");
  }
  CooperationMeasure measure{proposed, (log_w.array() - total).exp()};
  measure.weights /= measure.weights.sum();
  return measure;
}

CooperationMeasure cooperation_weights(const Matrix& proposed, const ProposalBank& previous,
                                       const TargetModel& target, WeightingMode mode) {
  Vector log_densities(proposed.cols());
  for (Eigen::Index n = 0; n < proposed.cols(); ++n) {
    log_densities[n] = target.log_density(proposed.col(n));
  }
  return cooperation_weights(proposed, log_densities, previous, mode);
}

Matrix cooperate_resample(const CooperationMeasure& measure, RngStream& rng) {
  const auto count = measure.atoms.cols();
  std::vector<double> cumulative(static_cast<std::size_t>(count));
  double running = 0.0;
  for (Eigen::Index n = 0; n < count; ++n) {
    running += measure.weights[n];
    cumulative[static_cast<std::size_t>(n)] = running;
  }

  Matrix out(measure.atoms.rows(), count);
  for (Eigen::Index n = 0; n < count; ++n) {
    const double u = rng.uniform() * running;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    // Rounding can leave u at the very top; fall back to the last positive atom.
    if (it == cumulative.end()) {
      it = std::lower_bound(cumulative.begin(), cumulative.end(), running);
    }
    out.col(n) = measure.atoms.col(it - cumulative.begin());
  }
  return out;
}

Matrix initial_locations(const HaisConfig& config, const TargetModel& target) {
  if (config.init_locations) {
    for (Eigen::Index n = 0; n < config.init_locations->cols(); ++n) {
      if (!std::isfinite(target.log_density(config.init_locations->col(n)))) {
        throw Error("initial location " + std::to_string(n) + " has zero target density");
      }
    }
    return *config.init_locations;
  }

  const int dim = target.dim();
  RngStream rng(config.seed, StreamRole::kInit, 0);
  Matrix locations =
      uniform_box_locations(dim, config.proposals, config.init_box.low, config.init_box.high, rng);
  for (int n = 0; n < config.proposals; ++n) {
    int attempts = 0;
    while (!std::isfinite(target.log_density(locations.col(n)))) {
      if (++attempts > kMaxInitAttempts) {
        throw Error("could not find an initial location with positive target density");
      }
      locations.col(n) =
          uniform_box_locations(dim, 1, config.init_box.low, config.init_box.high, rng);
    }
  }
  return locations;
}

RunOutput run(const HaisConfig& config, const TargetModel& target) {
  const int dim = target.dim();
  config.validate(dim);

  ProposalBank bank(initial_locations(config, target), config.proposal_variances);
  RunOutput out;
  out.archive = SampleArchive(dim);
  out.archive.reserve(static_cast<Eigen::Index>(config.proposals) * config.per_proposal *
                      config.iterations);
  out.diagnostics.reserve(static_cast<std::size_t>(config.iterations));

  const double neg_inf = -std::numeric_limits<double>::infinity();
  double running_log_sum = neg_inf;
  std::int64_t accepted_total = 0;
  SampleSet samples = allocate_samples(bank, config.per_proposal);

  for (int t = 0; t < config.iterations; ++t) {
    if (config.record_locations) out.location_history.push_back(bank.locations());

    // (a) sampling: proposal n uses its own substream.
    parallel_for(static_cast<std::size_t>(bank.size()), config.threads, [&](std::size_t n) {
      RngStream rng(config.seed, StreamRole::kSampling, n, static_cast<std::uint64_t>(t));
      sample_proposal(bank, static_cast<int>(n), config.per_proposal, rng, samples);
    });

    // (b) weighting.
    const Vector log_w = weight_samples(bank, target, samples, config.weighting, config.threads);
    out.evaluations.weighting_density += log_w.size();
    out.archive.append(samples, log_w, t);

    IterationDiagnostics diag;
    running_log_sum = log_sum_exp(Vector{{running_log_sum, log_sum_exp(log_w)}});
    diag.z_so_far = std::exp(running_log_sum - std::log(static_cast<double>(out.archive.size())));
    diag.ess_normalized = std::isfinite(log_sum_exp(log_w)) ? normalized_ess(log_w) : 0.0;

    // (c) adaptation: one HMC transition per location, then cooperation.
    if (config.adapt) {
      ParallelHmcResult moved =
          adapt_parallel_hmc(bank, target, config.hmc, config.seed, t, config.threads);
      out.evaluations.hmc_density += moved.density_evals;
      out.evaluations.hmc_gradient += moved.gradient_evals;
      diag.acceptance_rate = moved.acceptance_rate();
      accepted_total += std::count(moved.accepted.begin(), moved.accepted.end(), char{1});

      const CooperationMeasure measure =
          cooperation_weights(moved.locations, moved.log_densities, bank, config.weighting);
      RngStream rng(config.seed, StreamRole::kResample, 0, static_cast<std::uint64_t>(t));
      bank.set_locations(cooperate_resample(measure, rng));
    }
    out.diagnostics.push_back(diag);
  }

  out.final_locations = bank.locations();
  if (config.adapt) {
    out.acceptance_rate = static_cast<double>(accepted_total) /
                          (static_cast<double>(config.proposals) * config.iterations);
  }
  const Eigen::Index first = out.archive.first_index_of_iteration(config.burn_in);
  const Eigen::Index kept = out.archive.size() - first;
  out.estimates = estimate_report(out.archive.points().rightCols(kept),
                                  out.archive.log_weights().tail(kept));
  return out;
}

}  // namespace hais
