#pragma once

#include <stdexcept>
#include <string>

namespace spinenav {

/// Base type for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input data (STL bytes, JSON records). Messages carry the byte
/// offset or line number of the first offending element.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters, invariant-violating values, or unusable configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem and stream failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Marker pose estimation failures (degenerate corners, divergent refinement).
class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& what, double last_residual_px = 0.0)
        : Error(what), last_residual_px(last_residual_px) {}

    double last_residual_px;
};

} // namespace spinenav
