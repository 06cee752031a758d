#pragma once

#include <stdexcept>
#include <string>

namespace mvclust {

// Base for every error the library raises. The CLI maps NumericalError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Caller violated a documented precondition (bad sizes, bad config values).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Non-finite value produced or consumed where a finite one is required.
class NumericalError : public Error {
public:
    using Error::Error;
};

// File missing, unreadable, malformed, or inconsistent.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mvclust
