// errors.hpp
#pragma once
#include <stdexcept>
#include <string>

namespace factint {

// Contract violations (bad dimensions, out-of-range parameters, malformed
// input) are reported as std::invalid_argument. Failures that happen while
// computing on valid input (non-finite objective, degenerate weights) use
// numerical_error so callers can tell the two apart.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace factint
