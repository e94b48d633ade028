#include "hais/targets.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

namespace hais {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

}  // namespace

double log_sum_exp(const Eigen::Ref<const Vector>& values) {
  if (values.size() == 0) return kNegInf;
  const double top = values.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((values.array() - top).exp().sum());
}

TargetModel::TargetModel(std::string name, int dim, LogDensityFn log_density,
                         GradientFn grad_log_density, std::optional<GroundTruth> truth)
    : name_(std::move(name)),
      dim_(dim),
      log_density_(std::move(log_density)),
      grad_(std::move(grad_log_density)),
      truth_(std::move(truth)) {
  require(dim_ >= 1, "target dimension must be positive");
  require(static_cast<bool>(log_density_) && static_cast<bool>(grad_),
          "target needs both a log-density and a gradient");
  if (truth_) {
    require(truth_->mean.size() == dim_, "ground-truth mean has wrong dimension");
  }
}

double TargetModel::log_density(const Vector& x) const {
  const double value = log_density_(x);
  if (std::isnan(value)) {
    throw Error("target '" + name_ + "' returned NaN log-density");
  }
  return value;
}

Vector TargetModel::grad_log_density(const Vector& x) const {
  Vector g = grad_(x);
  if (g.size() != dim_) {
    throw Error("target '" + name_ + "' returned gradient of wrong size");
  }
  return g;
}

TargetModel gaussian_mixture_target(const GaussianMixtureSpec& spec) {
  const std::size_t components = spec.weights.size();
  require(components >= 1, "gaussian mixture needs at least one component");
  require(spec.means.size() == components && spec.variances.size() == components,
          "gaussian mixture: weights, means and variances differ in length");
  const auto dim = spec.means.front().size();
  require(dim >= 1, "gaussian mixture: empty mean vector");

  double total = 0.0;
  for (std::size_t i = 0; i < components; ++i) {
    require(spec.weights[i] >= 0.0, "gaussian mixture: negative weight");
    require(spec.means[i].size() == dim && spec.variances[i].size() == dim,
            "gaussian mixture: component dimension mismatch");
    require((spec.variances[i].array() > 0.0).all() && spec.variances[i].allFinite(),
            "gaussian mixture: variances must be positive");
    require(spec.means[i].allFinite(), "gaussian mixture: non-finite mean");
    total += spec.weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, "gaussian mixture: weights must sum to 1");

  struct Component {
    double log_norm;  // log weight + gaussian normalizer
    Vector mean;
    Vector inv_var;
  };
  std::vector<Component> comps;
  Vector truth_mean = Vector::Zero(dim);
  for (std::size_t i = 0; i < components; ++i) {
    if (spec.weights[i] == 0.0) continue;
    const double log_det = spec.variances[i].array().log().sum();
    comps.push_back({std::log(spec.weights[i]) -
                         0.5 * (static_cast<double>(dim) * std::log(2.0 * std::numbers::pi) + log_det),
                     spec.means[i], spec.variances[i].cwiseInverse()});
    truth_mean += spec.weights[i] * spec.means[i];
  }

  auto component_logs = [comps](const Vector& x) {
    Vector logs(static_cast<Eigen::Index>(comps.size()));
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const auto& c = comps[i];
      logs[static_cast<Eigen::Index>(i)] =
          c.log_norm - 0.5 * ((x - c.mean).array().square() * c.inv_var.array()).sum();
    }
    return logs;
  };

  auto log_density = [component_logs](const Vector& x) {
    return log_sum_exp(component_logs(x));
  };
  auto gradient = [comps, component_logs](const Vector& x) {
    const Vector logs = component_logs(x);
    const double total_log = log_sum_exp(logs);
    Vector g = Vector::Zero(x.size());
    if (!std::isfinite(total_log)) return g;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const double resp = std::exp(logs[static_cast<Eigen::Index>(i)] - total_log);
      if (resp == 0.0) continue;
      g.array() -= resp * (x - comps[i].mean).array() * comps[i].inv_var.array();
    }
    return g;
  };

  std::ostringstream name;
  name << "gaussian_mixture(k=" << components << ",d=" << dim << ")";
  return TargetModel(name.str(), static_cast<int>(dim), log_density, gradient,
                     GroundTruth{truth_mean, 0.0});
}

GaussianMixtureSpec bimodal_spec(int dim, double offset, double variance) {
  require(dim >= 1, "bimodal target: dimension must be positive");
  GaussianMixtureSpec spec;
  spec.weights = {0.5, 0.5};
  spec.means = {Vector::Constant(dim, offset), Vector::Constant(dim, -offset)};
  spec.variances = {Vector::Constant(dim, variance), Vector::Constant(dim, variance)};
  return spec;
}

TargetModel banana_target(const BananaSpec& spec) {
  require(spec.dim >= 2, "banana target: dimension must be at least 2");
  require(spec.sigma > 0.0 && std::isfinite(spec.sigma), "banana target: sigma must be positive");
  require(std::isfinite(spec.b), "banana target: b must be finite");

  const double b = spec.b;
  const double s2 = spec.sigma * spec.sigma;
  auto log_density = [b, s2](const Vector& x) {
    const double bend = x[1] + b * (x[0] * x[0] - s2);
    return -(x[0] * x[0] + bend * bend + x.tail(x.size() - 2).squaredNorm()) / (2.0 * s2);
  };
  auto gradient = [b, s2](const Vector& x) {
    const double bend = x[1] + b * (x[0] * x[0] - s2);
    Vector g = -x / s2;
    g[0] = -(x[0] + 2.0 * b * x[0] * bend) / s2;
    g[1] = -bend / s2;
    return g;
  };

  std::ostringstream name;
  name << "banana(d=" << spec.dim << ",b=" << spec.b << ",sigma=" << spec.sigma << ")";
  return TargetModel(name.str(), spec.dim, log_density, gradient,
                     GroundTruth{Vector::Zero(spec.dim), std::nullopt});
}

double check_gradient(const TargetModel& target, const Vector& point, double h) {
  require(point.size() == target.dim(), "check_gradient: point has wrong dimension");
  if (!std::isfinite(target.log_density(point))) {
    throw Error("check_gradient: density is not finite at the check location");
  }
  const Vector analytic = target.grad_log_density(point);
  double worst = 0.0;
  Vector shifted = point;
  auto central = [&](Eigen::Index i, double step) {
    shifted[i] = point[i] + step;
    const double up = target.log_density(shifted);
    shifted[i] = point[i] - step;
    const double down = target.log_density(shifted);
    shifted[i] = point[i];
    return (up - down) / (2.0 * step);
  };
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    // Richardson extrapolation of two central differences cancels the h^2 term.
    const double numeric = (4.0 * central(i, 0.5 * h) - central(i, h)) / 3.0;
    worst = std::max(worst, std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + 1e-12));
  }
  return worst;
}

}  // namespace hais
