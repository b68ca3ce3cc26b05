#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fairim {

using NodeId = std::uint32_t;

// Error hierarchy. The CLI maps these to exit codes: config_error -> 2,
// data_error -> 3, numeric_error -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : error {
    using error::error;
};

struct data_error : error {
    using error::error;
};

struct numeric_error : error {
    using error::error;
};

}  // namespace fairim
