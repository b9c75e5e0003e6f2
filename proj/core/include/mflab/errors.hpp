#pragma once
#include <stdexcept>
#include <string>

namespace mflab {

/// Bad or inconsistent configuration (invalid parameter ranges, malformed
/// config files, unbracketable roots caused by parameter choices).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime: singular systems, knife-edge policy
/// calibrations, infeasible beliefs, training divergence.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / serialization failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mflab
