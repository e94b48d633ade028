#pragma once

#include "hais/estimators.hpp"
#include "hais/hmc.hpp"
#include "hais/proposals.hpp"
#include "hais/random.hpp"
#include "hais/targets.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hais {

/// Denominator used for both the estimation weights and the cooperation
/// weights.
enum class WeightingMode {
  /// Full mixture evaluated at the sample itself.
  kStandardDm,
  /// Proposal i evaluated at its own k-th draw, summed over i.
  kLiteralAlg2,
};

struct InitBox {
  double low = -4.0;
  double high = 4.0;
};

struct HaisConfig {
  int proposals = 100;
  int per_proposal = 5;
  int iterations = 400;
  HmcParams hmc;
  /// Shared diagonal proposal covariance.
  Vector proposal_variances;
  InitBox init_box;
  /// Overrides init_box when set (dim x N).
  std::optional<Matrix> init_locations;
  std::uint64_t seed = 1;
  WeightingMode weighting = WeightingMode::kStandardDm;
  /// Iterations whose samples are left out of the final estimates.
  int burn_in = 0;
  /// Worker threads for the data-parallel stages; results do not depend on it.
  int threads = 1;
  /// Adaptation switch; false gives the static-mixture baseline.
  bool adapt = true;
  /// Keep the proposal locations used at every iteration.
  bool record_locations = false;

  void validate(int dim) const;
};

struct IterationDiagnostics {
  double acceptance_rate = 0.0;
  double ess_normalized = 0.0;
  /// Estimate of Z over every sample drawn up to and including this iteration.
  double z_so_far = 0.0;
};

struct EvaluationCounts {
  std::int64_t weighting_density = 0;
  std::int64_t hmc_density = 0;
  std::int64_t hmc_gradient = 0;

  std::int64_t density_total() const { return weighting_density + hmc_density; }
};

struct RunOutput {
  SampleArchive archive;
  std::vector<IterationDiagnostics> diagnostics;
  EstimateReport estimates;
  Matrix final_locations;
  /// Locations used for sampling at each iteration; empty unless recorded.
  std::vector<Matrix> location_history;
  EvaluationCounts evaluations;
  double acceptance_rate = 0.0;
};

/// Log importance weights of `samples` against `bank`, one per column.
///
/// The denominator is the mixture mean (1/N) sum_i q_i, so exp(log w) has
/// mean Z under the proposal mixture.
Vector weight_samples(const ProposalBank& bank, const TargetModel& target,
                      const SampleSet& samples, WeightingMode mode = WeightingMode::kStandardDm,
                      int threads = 1);

struct ParallelHmcResult {
  /// Chain states after one transition, one column per chain.
  Matrix locations;
  /// Log-density at each returned location.
  Vector log_densities;
  std::vector<char> accepted;
  std::int64_t density_evals = 0;
  std::int64_t gradient_evals = 0;

  double acceptance_rate() const;
};

/// One HMC transition per proposal location. Chain n draws only from the
/// substream (seed, hmc, n, iteration).
ParallelHmcResult adapt_parallel_hmc(const ProposalBank& bank, const TargetModel& target,
                                     const HmcParams& params, std::uint64_t seed, int iteration,
                                     int threads = 1);

/// Discrete weighted measure over the post-HMC chain states.
struct CooperationMeasure {
  Matrix atoms;
  Vector weights;
};

/// Normalized weights pi(mu*) / mixture(mu*) of the chain states against the
/// bank they were started from. Throws DegeneracyError when every chain sits
/// at a zero-density point.
CooperationMeasure cooperation_weights(const Matrix& proposed, const ProposalBank& previous,
                                       const TargetModel& target,
                                       WeightingMode mode = WeightingMode::kStandardDm);
/// Same, reusing target log-densities already known at the atoms.
CooperationMeasure cooperation_weights(const Matrix& proposed, const Vector& log_densities,
                                       const ProposalBank& previous,
                                       WeightingMode mode = WeightingMode::kStandardDm);

/// N multinomial draws (with replacement) from the measure's atoms.
Matrix cooperate_resample(const CooperationMeasure& measure, RngStream& rng);

/// Initial locations: explicit, or drawn from the box with zero-density
/// draws re-drawn (up to 1000 attempts per location).
Matrix initial_locations(const HaisConfig& config, const TargetModel& target);

/// The full adaptive sampler.
RunOutput run(const HaisConfig& config, const TargetModel& target);

}  // namespace hais
