#include "hais/hmc.hpp"

#include <cmath>
#include <limits>

namespace hais {

void HmcParams::validate(int dim) const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("hmc: step size must be positive");
  if (steps < 1) throw Error("hmc: leapfrog length must be at least 1");
  if (mass_diag.size() != dim) throw Error("hmc: mass diagonal has wrong dimension");
  if (!(mass_diag.array() > 0.0).all() || !mass_diag.allFinite()) {
    throw Error("hmc: masses must be positive");
  }
}

double kinetic_energy(const Vector& momentum, const Vector& mass_diag) {
  return 0.5 * (momentum.array().square() / mass_diag.array()).sum();
}

LeapfrogResult leapfrog(const TargetModel& target, const Vector& x0, const Vector& p0,
                        const HmcParams& params) {
  LeapfrogResult out{x0, p0, false, 0};
  const Vector inv_mass = params.mass_diag.cwiseInverse();
  auto& x = out.position;
  auto& p = out.momentum;

  Vector grad = target.grad_log_density(x);
  ++out.gradient_evals;
  p += 0.5 * params.eps * grad;
  for (int step = 0; step < params.steps; ++step) {
    x += params.eps * inv_mass.cwiseProduct(p);
    grad = target.grad_log_density(x);
    ++out.gradient_evals;
    const double scale = step + 1 == params.steps ? 0.5 * params.eps : params.eps;
    p += scale * grad;
    if (!x.allFinite() || !p.allFinite()) {
      out.divergent = true;
      return out;
    }
  }
  return out;
}

HmcTransition hmc_step(const TargetModel& target, const Vector& x, const HmcParams& params,
                       RngStream& rng) {
  const auto dim = x.size();
  Vector p0(dim);
  for (Eigen::Index i = 0; i < dim; ++i) p0[i] = std::sqrt(params.mass_diag[i]) * rng.normal();

  const LeapfrogResult traj = leapfrog(target, x, p0, params);
  const double u = rng.uniform();

  const double start_log_density = target.log_density(x);
  HmcTransition out{traj.position, false, x, std::numeric_limits<double>::infinity(),
                    start_log_density, 1, traj.gradient_evals};
  if (traj.divergent) return out;

  const double end_log_density = target.log_density(traj.position);
  ++out.density_evals;
  const double delta = (-end_log_density + kinetic_energy(traj.momentum, params.mass_diag)) -
                       (-start_log_density + kinetic_energy(p0, params.mass_diag));
  if (!std::isfinite(delta)) return out;
  out.energy_error = delta;
  // u <= min(1, exp(-delta)), compared in log space.
  if (std::log(u) <= -delta) {
    out.accepted = true;
    out.new_state = traj.position;
    out.log_density = end_log_density;
  }
  return out;
}

HmcChain run_hmc_chain(const TargetModel& target, const Vector& x0, const HmcParams& params,
                       std::size_t count, RngStream& rng) {
  HmcChain chain;
  chain.states.reserve(count);
  Vector x = x0;
  for (std::size_t i = 0; i < count; ++i) {
    HmcTransition t = hmc_step(target, x, params, rng);
    chain.accepted += t.accepted ? 1 : 0;
    x = std::move(t.new_state);
    chain.states.push_back(x);
  }
  return chain;
}

}  // namespace hais
