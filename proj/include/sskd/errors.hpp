#pragma once

#include <stdexcept>
#include <string>

namespace sskd {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A scalar argument is outside its legal range (e.g. non-positive temperature).
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

/// Runtime data handed to an operation is malformed (shape mismatch, NaN logits,
/// out-of-range label).
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// An object is used in a way that contradicts its construction history
/// (stale forward cache, temperature mismatch, unknown example id).
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// A configuration value or combination is unusable (empty class, degenerate
/// dataset spec, zero-width layer).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A file could not be decoded. Carries the offending location in the message.
class ParseError : public Error {
public:
    using Error::Error;
};

/// File contents decoded fine but violate a declared constraint
/// (label index >= declared class count).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Checkpoint format version does not match this build.
class CheckpointVersionError : public Error {
public:
    using Error::Error;
};

/// Training produced non-finite losses and was aborted.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace sskd
