#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wpf {

/// Base class for all errors raised by the library. The CLI maps each
/// subclass to its own exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file content (bad row, unparsable cell).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input does not match the expected schema (columns, sampling step).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Index outside the valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A series has no observed value at all and cannot be repaired.
class UnrecoverableSeriesError : public Error {
public:
    using Error::Error;
};

/// Numerical degeneracy (all-zero response, no usable columns, zero volatility).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A simulated or forecast path blew up.
class InstabilityError : public Error {
public:
    using Error::Error;
};

/// A file cannot be opened, read or written.
class FileError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration document (unknown key, wrong type).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-fatal messages collected by operations that "warn, never fail".
using Warnings = std::vector<std::string>;

}  // namespace wpf
