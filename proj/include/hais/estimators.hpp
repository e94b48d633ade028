#pragma once

#include "hais/proposals.hpp"
#include "hais/types.hpp"

#include <functional>
#include <vector>

namespace hais {

/// One weighted draw, as handed out by SampleArchive::sample().
struct WeightedSample {
  Vector x;
  double log_weight = 0.0;
  int proposal = 0;
  int iteration = 0;
};

/// Column-wise store of every weighted draw of a run, in iteration order.
class SampleArchive {
 public:
  explicit SampleArchive(int dim = 0) : points_(dim, 0) {}

  void reserve(Eigen::Index count);
  /// Appends one iteration's samples with their log-weights.
  void append(const SampleSet& samples, const Vector& log_weights, int iteration);

  Eigen::Index size() const { return static_cast<Eigen::Index>(proposal_.size()); }
  int dim() const { return static_cast<int>(points_.rows()); }

  /// Only the first size() columns / entries are meaningful.
  auto points() const { return points_.leftCols(size()); }
  auto log_weights() const { return log_weights_.head(size()); }
  const std::vector<int>& proposals() const { return proposal_; }
  const std::vector<int>& iterations() const { return iteration_; }

  WeightedSample sample(Eigen::Index i) const;

  /// Index of the first sample whose iteration is >= `iteration`.
  Eigen::Index first_index_of_iteration(int iteration) const;

 private:
  Matrix points_;
  Vector log_weights_;
  std::vector<int> proposal_;
  std::vector<int> iteration_;
};

struct EstimateReport {
  Vector snis_mean;
  double z_hat = 0.0;
  double log_z_hat = 0.0;
  double ess_normalized = 0.0;
};

/// log of the mean weight; weights must already use the mixture-mean
/// denominator (1/N) sum_i q_i. Throws Error on an empty input.
double log_z_estimate(const Eigen::Ref<const Vector>& log_weights);
double z_estimate(const Eigen::Ref<const Vector>& log_weights);

using MomentFn = std::function<Vector(const Vector&)>;

/// Self-normalized estimate of E[f(x)]; f defaults to the identity.
/// Throws DegeneracyError when every weight is zero.
Vector snis_estimate(const Eigen::Ref<const Matrix>& points,
                     const Eigen::Ref<const Vector>& log_weights, const MomentFn& f = {});

/// (sum w)^2 / (M sum w^2).
double normalized_ess(const Eigen::Ref<const Vector>& log_weights);

EstimateReport estimate_report(const Eigen::Ref<const Matrix>& points,
                               const Eigen::Ref<const Vector>& log_weights);

/// Mean over runs of the squared Euclidean error.
double mse_over_runs(const std::vector<Vector>& estimates, const Vector& truth);
double mse_over_runs(const std::vector<double>& estimates, double truth);

}  // namespace hais
