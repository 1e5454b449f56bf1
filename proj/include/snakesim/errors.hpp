#pragma once

#include <stdexcept>
#include <string>

namespace snakesim {

// Shape/dimension mismatch between tensors or between tensors and a graph.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad argument value (out-of-range label, non-positive lr, ...).
struct InputError : std::invalid_argument {
    explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid or infeasible run configuration (empty shard, zero admissible nodes, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller broke a module contract (e.g. quantizing a layer that is still updated).
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace snakesim
