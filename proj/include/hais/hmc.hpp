#pragma once

#include "hais/random.hpp"
#include "hais/targets.hpp"

#include <cstddef>
#include <vector>

namespace hais {

/// Fixed leapfrog settings. `mass_diag` is the diagonal of the mass matrix R.
struct HmcParams {
  double eps = 0.1;
  int steps = 10;
  Vector mass_diag;

  /// Unit-mass parameters for a `dim`-dimensional target.
  static HmcParams unit_mass(int dim, double eps, int steps) {
    return {eps, steps, Vector::Ones(dim)};
  }

  /// Throws Error unless eps > 0, steps >= 1 and every mass is positive.
  void validate(int dim) const;
};

struct LeapfrogResult {
  Vector position;
  Vector momentum;
  /// A non-finite position, momentum or gradient was produced.
  bool divergent = false;
  /// Gradient evaluations performed.
  int gradient_evals = 0;
};

struct HmcTransition {
  Vector proposed;
  bool accepted = false;
  Vector new_state;
  /// H(proposed) - H(start). +inf for divergent trajectories.
  double energy_error = 0.0;
  /// log pi(new_state).
  double log_density = 0.0;
  int density_evals = 0;
  int gradient_evals = 0;
};

/// Leapfrog integration of the Hamiltonian with potential -log pi and kinetic
/// energy p' R^-1 p / 2: half momentum step, `steps` alternating full
/// position and momentum steps (the last momentum step halved).
LeapfrogResult leapfrog(const TargetModel& target, const Vector& x0, const Vector& p0,
                        const HmcParams& params);

/// Kinetic energy p' R^-1 p / 2 for diagonal R.
double kinetic_energy(const Vector& momentum, const Vector& mass_diag);

/// One HMC transition from `x`.
///
/// Draws p ~ N(0, R) (dim normals), integrates, then draws one uniform and
/// accepts when u <= exp(H(x, p) - H(x*, p*)). A divergent trajectory is
/// rejected with energy_error = +inf.
HmcTransition hmc_step(const TargetModel& target, const Vector& x, const HmcParams& params,
                       RngStream& rng);

/// Convenience chain of `count` transitions started at `x0` (x0 not included).
struct HmcChain {
  std::vector<Vector> states;
  std::size_t accepted = 0;
};
HmcChain run_hmc_chain(const TargetModel& target, const Vector& x0, const HmcParams& params,
                       std::size_t count, RngStream& rng);

}  // namespace hais
