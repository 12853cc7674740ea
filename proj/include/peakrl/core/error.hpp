#pragma once

#include <stdexcept>
#include <string>

namespace peakrl {

/// Base of every exception thrown by the core. The C API maps each subclass
/// onto one status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// An instance or spec document breaks a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The request is well formed but outside what the implementation can decide
/// (enumeration guards, unknown schedule families).
class CapabilityError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace peakrl
