#include "faircert/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace faircert {

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto log = spdlog::stderr_color_mt("faircert");
        log->set_pattern("[%l] %v");
        spdlog::level::level_enum level = spdlog::level::err;
        if (const char* env = std::getenv("FAIRCERT_LOG")) {
            std::string_view v(env);
            if (v == "info") {
                level = spdlog::level::info;
            } else if (v == "debug") {
                level = spdlog::level::debug;
            }
        }
        log->set_level(level);
        return log;
    }();
    return *instance;
}

} // namespace faircert
