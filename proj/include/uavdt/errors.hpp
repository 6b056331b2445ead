#pragma once

#include <stdexcept>
#include <string>

namespace uavdt {

// Bad configuration or malformed input files. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A broken internal invariant (ledger conservation, state machine order,
// hash-chain mismatch). The CLI maps this to exit code 4.
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace uavdt
