#pragma once

#include <stdexcept>
#include <string>

namespace pseudohaptic {

// Base class for every error thrown by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain numeric input.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value (negative gain, unknown study, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Timestamps that do not strictly increase.
class OrderingError : public Error {
public:
    using Error::Error;
};

// Event not legal for the current trial phase.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Failed file I/O. Session state is left untouched, so the caller may retry.
class StorageError : public Error {
public:
    using Error::Error;
};

}  // namespace pseudohaptic
