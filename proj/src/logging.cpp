#include "psim/logging.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace psim {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("psim");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return instance;
}

void set_verbosity(int level) {
  auto lvl = level <= 0 ? spdlog::level::warn
             : level == 1 ? spdlog::level::info
                          : spdlog::level::debug;
  logger()->set_level(lvl);
}

}  // namespace psim
