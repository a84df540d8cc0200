#pragma once

#include <stdexcept>
#include <string>

namespace lambdalab {

// Base for every error raised by the library. Callers that only care about
// "the operation was rejected" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched dimensions or basis identifiers.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A function was asked to act outside its domain (negative fractional base,
// log-weight beyond the materialized cap, lambda vanishing in the window).
class DomainError : public Error {
public:
    using Error::Error;
};

// Violated operation precondition (bad window, t < 0, n1 >= n2, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A vector has support outside the interior margin required for U^t.
class MarginError : public Error {
public:
    using Error::Error;
};

}  // namespace lambdalab
