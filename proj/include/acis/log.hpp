#pragma once

#include <string_view>

namespace acis::log {

// Thin wrapper over spdlog so translation units that include libtorch (which bundles its own
// fmt) never see spdlog headers.
void info(std::string_view message);
void warn(std::string_view message);
void error(std::string_view message);
/// "debug", "info", "warn", "error" or "off".
void set_level(std::string_view level);

}  // namespace acis::log
