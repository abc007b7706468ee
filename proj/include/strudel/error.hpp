// Exception types shared across the toolkit.
#pragma once

#include <stdexcept>
#include <string>

namespace strudel {

// Invalid schema, factor spec, config or CLI input.
struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent files on disk.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerically or combinatorially infeasible request (e.g. too many
// permutable slots to enumerate).
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate numeric state (all-zero affinity, non-finite latents, ...).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace strudel
