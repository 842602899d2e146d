#pragma once

#include <stdexcept>
#include <string>

namespace cfmdp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model or input data (bad probabilities, wrong dimensions, unknown names).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its documented domain, or an internal
/// invariant did not hold.
class PreconditionViolation : public Error {
public:
    using Error::Error;
};

/// Interval row whose box cannot contain a normalized distribution.
class InfeasibleRow : public Error {
public:
    using Error::Error;
};

/// Problem too large for exhaustive enumeration.
class ScaleExceeded : public Error {
public:
    using Error::Error;
};

class LpError : public Error {
public:
    using Error::Error;
};

class LpInfeasible : public LpError {
public:
    LpInfeasible() : LpError("linear program is infeasible") {}
};

class LpUnbounded : public LpError {
public:
    LpUnbounded() : LpError("linear program is unbounded") {}
};

} // namespace cfmdp
