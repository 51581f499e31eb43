#pragma once

#include <stdexcept>
#include <string>

namespace ssgd {

// Bad user input: shapes, option domains, malformed files.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerically infeasible request: inconsistent system, non-contractive
// parameters, degenerate spectra.
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ssgd
