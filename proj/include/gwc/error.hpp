#pragma once

#include <stdexcept>
#include <string>

namespace gwc {

// Error buckets double as CLI exit codes: config=2, data=3, numeric=4.
enum class ErrorKind { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Bad configuration: unknown keys, unresolvable paths, invalid parameters.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};

// Bad input data: schema mismatches, parse failures, integrity violations.
class DataError : public Error {
public:
    explicit DataError(const std::string& m) : Error(ErrorKind::data, m) {}
};

// Numerical degeneracy: zero variance, singular systems, degenerate labels,
// invalid bandwidths.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& m) : Error(ErrorKind::numeric, m) {}
};

} // namespace gwc
