#pragma once

#include <stdexcept>
#include <string>

namespace ddn {

/// Invalid configuration, shape mismatch, or misuse of an API contract.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem and parsing failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or domain violations in numeric code.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ddn
