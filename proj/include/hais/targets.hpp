#pragma once

#include "hais/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hais {

/// Known moments of a benchmark target.
struct GroundTruth {
  Vector mean;
  /// Log normalizing constant, when known.
  std::optional<double> log_z;
};

/// Unnormalized log-density with analytic gradient.
///
/// Negative infinity encodes zero density. A NaN from the wrapped callables is
/// reported as an Error. Evaluation is const and reentrant.
class TargetModel {
 public:
  using LogDensityFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  TargetModel(std::string name, int dim, LogDensityFn log_density,
              GradientFn grad_log_density,
              std::optional<GroundTruth> truth = std::nullopt);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const std::optional<GroundTruth>& ground_truth() const { return truth_; }

  double log_density(const Vector& x) const;
  Vector grad_log_density(const Vector& x) const;

 private:
  std::string name_;
  int dim_;
  LogDensityFn log_density_;
  GradientFn grad_;
  std::optional<GroundTruth> truth_;
};

/// Weighted sum of diagonal-covariance Gaussians.
struct GaussianMixtureSpec {
  std::vector<double> weights;
  std::vector<Vector> means;
  /// Per-component diagonal variances.
  std::vector<Vector> variances;
};

struct BananaSpec {
  int dim = 2;
  double b = 3.0;
  double sigma = 1.0;
};

/// Normalized mixture density; ground truth mean and log Z = 0 are attached.
TargetModel gaussian_mixture_target(const GaussianMixtureSpec& spec);

/// Unnormalized banana-shaped density. Ground truth mean is zero; Z unknown.
TargetModel banana_target(const BananaSpec& spec);

/// The symmetric two-mode benchmark: modes at +offset and -offset in every
/// coordinate, isotropic variance, equal weights.
GaussianMixtureSpec bimodal_spec(int dim, double offset = 8.0, double variance = 5.0);

/// Max over coordinates of |analytic - numeric| / (|analytic| + 1e-12). The
/// numeric derivative extrapolates central differences at steps h and h/2.
///
/// Throws Error when the density at `point` is not finite.
double check_gradient(const TargetModel& target, const Vector& point, double h = 1e-3);

/// log(sum(exp(values))) with max shift; -inf for empty or all -inf input.
double log_sum_exp(const Eigen::Ref<const Vector>& values);

}  // namespace hais
