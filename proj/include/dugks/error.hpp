#pragma once

#include <stdexcept>
#include <string>

namespace dugks {

/// Base class for all solver and harness failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed config files, CFL violations.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Density at a cell or face dropped below the admissible floor (or became NaN).
class NonPhysicalFieldError : public Error {
public:
    using Error::Error;
};

/// File-system failures; the message carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

/// Degenerate inputs to diagnostics (zero analytic norm, empty sweeps, bad fits).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    enum class Kind { BadMagic, VersionMismatch, ExtentMismatch, Truncated };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace dugks
