#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace psim {

// Shared stderr logger ("psim"). Progress goes to info, per-call detail to
// debug.
std::shared_ptr<spdlog::logger> logger();

// 0 = warnings only, 1 = info, 2+ = debug.
void set_verbosity(int level);

}  // namespace psim
