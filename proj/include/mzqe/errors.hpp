#pragma once

#include <stdexcept>
#include <string>

namespace mzqe {

/// Degenerate geometry, ill-conditioned fit, empty sample, or any other
/// condition where a requested quantity is mathematically undefined.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mzqe
