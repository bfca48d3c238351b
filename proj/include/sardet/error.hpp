#pragma once

#include <stdexcept>
#include <string>

namespace sardet {

/// Bad input content: malformed files, out-of-domain values, dangling
/// references, inconsistent configuration. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operating-system level I/O failure (open/read/write). Maps to CLI exit code 1.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sardet
