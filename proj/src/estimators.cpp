#include "hais/estimators.hpp"

#include "hais/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hais {

void SampleArchive::reserve(Eigen::Index count) {
  if (count > points_.cols()) {
    points_.conservativeResize(Eigen::NoChange, count);
    log_weights_.conservativeResize(count);
  }
  proposal_.reserve(static_cast<std::size_t>(count));
  iteration_.reserve(static_cast<std::size_t>(count));
}

void SampleArchive::append(const SampleSet& samples, const Vector& log_weights, int iteration) {
  const auto added = static_cast<Eigen::Index>(samples.size());
  if (log_weights.size() != added) throw Error("archive: weight count does not match samples");
  if (points_.rows() == 0 && size() == 0) points_.resize(samples.points.rows(), 0);
  if (samples.points.rows() != points_.rows()) throw Error("archive: dimension mismatch");
  const Eigen::Index start = size();
  if (start + added > points_.cols()) reserve(std::max(start + added, 2 * points_.cols()));
  points_.middleCols(start, added) = samples.points;
  log_weights_.segment(start, added) = log_weights;
  proposal_.insert(proposal_.end(), samples.proposal.begin(), samples.proposal.end());
  iteration_.insert(iteration_.end(), samples.proposal.size(), iteration);
}

WeightedSample SampleArchive::sample(Eigen::Index i) const {
  if (i < 0 || i >= size()) throw Error("archive index out of range");
  const auto j = static_cast<std::size_t>(i);
  return {points_.col(i), log_weights_[i], proposal_[j], iteration_[j]};
}

Eigen::Index SampleArchive::first_index_of_iteration(int iteration) const {
  const auto it = std::lower_bound(iteration_.begin(), iteration_.end(), iteration);
  return static_cast<Eigen::Index>(it - iteration_.begin());
}

double log_z_estimate(const Eigen::Ref<const Vector>& log_weights) {
  if (log_weights.size() == 0) throw Error("cannot estimate Z from an empty archive");
  return log_sum_exp(log_weights) - std::log(static_cast<double>(log_weights.size()));
}

double z_estimate(const Eigen::Ref<const Vector>& log_weights) {
  return std::exp(log_z_estimate(log_weights));
}

Vector snis_estimate(const Eigen::Ref<const Matrix>& points,
                     const Eigen::Ref<const Vector>& log_weights, const MomentFn& f) {
  if (points.cols() != log_weights.size()) throw Error("snis: points and weights differ in count");
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) throw DegeneracyError("snis: every importance weight is zero");

  Vector acc;
  for (Eigen::Index m = 0; m < points.cols(); ++m) {
    const double w = std::exp(log_weights[m] - total);
    if (w == 0.0) continue;
    if (f) {
      const Vector value = f(points.col(m));
      if (acc.size() == 0) acc = Vector::Zero(value.size());
      acc += w * value;
    } else {
      if (acc.size() == 0) acc = Vector::Zero(points.rows());
      acc += w * points.col(m);
    }
  }
  return acc;
}

double normalized_ess(const Eigen::Ref<const Vector>& log_weights) {
  if (log_weights.size() == 0) throw Error("ess: empty archive");
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) throw DegeneracyError("ess: every importance weight is zero");
  const Vector shifted = log_weights.array() - total;
  const double squares = log_sum_exp(2.0 * shifted);
  return std::exp(-squares - std::log(static_cast<double>(log_weights.size())));
}

EstimateReport estimate_report(const Eigen::Ref<const Matrix>& points,
                               const Eigen::Ref<const Vector>& log_weights) {
  EstimateReport report;
  report.log_z_hat = log_z_estimate(log_weights);
  report.z_hat = std::exp(report.log_z_hat);
  report.snis_mean = snis_estimate(points, log_weights);
  report.ess_normalized = normalized_ess(log_weights);
  return report;
}

double mse_over_runs(const std::vector<Vector>& estimates, const Vector& truth) {
  if (estimates.empty()) throw Error("mse: no runs");
  double acc = 0.0;
  for (const auto& e : estimates) {
    if (e.size() != truth.size()) throw Error("mse: dimension mismatch");
    acc += (e - truth).squaredNorm();
  }
  return acc / static_cast<double>(estimates.size());
}

double mse_over_runs(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw Error("mse: no runs");
  double acc = 0.0;
  for (double e : estimates) acc += (e - truth) * (e - truth);
  return acc / static_cast<double>(estimates.size());
}

}  // namespace hais
