#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace plc {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Encoding/decoding failure: unsupported character, unknown Morse token,
/// invalid Base64 input, or a malformed obfuscation marker.
class CodecError : public Error {
public:
    using Error::Error;
};

/// Input data violated a documented invariant. Carries the full list of
/// violations so callers see every problem at once, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    explicit ValidationError(const std::string& violation)
        : ValidationError(std::vector<std::string>{violation}) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "validation failed:";
        for (const auto& s : v) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

/// Malformed or unsupported document container.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Document could not be scanned (distinct from a clean verdict).
class ScanError : public Error {
public:
    using Error::Error;
};

/// Bad parameter or configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace plc
