#include "hais/baseline.hpp"

namespace hais {

RunOutput run_static(const HaisConfig& config, const TargetModel& target) {
  HaisConfig frozen = config;
  frozen.adapt = false;
  return run(frozen, target);
}

}  // namespace hais
