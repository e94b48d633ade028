#pragma once

#include "hais/engine.hpp"

namespace hais {

/// Static-mixture importance sampling: the sampling and weighting path of
/// run() with the locations frozen at their initial values.
RunOutput run_static(const HaisConfig& config, const TargetModel& target);

}  // namespace hais
