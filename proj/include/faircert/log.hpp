#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace faircert {

// Shared stderr logger. Level comes from FAIRCERT_LOG (error, info, debug);
// defaults to error.
spdlog::logger& logger();

} // namespace faircert
