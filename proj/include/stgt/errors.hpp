#pragma once

#include <stdexcept>

namespace stgt {

// Bad configuration: unknown keys, out-of-range values, shape constraints.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed CSV rows, schema mismatches, degenerate splits.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric failure: non-finite intermediates, divergence, undefined metrics.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace stgt
