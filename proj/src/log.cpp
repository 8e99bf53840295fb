#include "acis/log.hpp"

#include <string>

#include <spdlog/spdlog.h>

#include "acis/errors.hpp"

namespace acis::log {

void info(std::string_view message) { spdlog::info("{}", message); }
void warn(std::string_view message) { spdlog::warn("{}", message); }
void error(std::string_view message) { spdlog::error("{}", message); }

void set_level(std::string_view level) {
    const auto parsed = spdlog::level::from_str(std::string(level));
    if (parsed == spdlog::level::off && level != "off") {
        throw ValidationError("unknown log level '" + std::string(level) + "'");
    }
    spdlog::set_level(parsed);
}

}  // namespace acis::log
