#pragma once

#include <stdexcept>
#include <string>

namespace cloudsentry {

// Base for every error raised by the library. The service layer maps the
// subclasses onto HTTP status codes; the CLI prints what() and exits nonzero.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad parameters or preconditions violated by the caller.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed file or payload.
class FormatError : public Error {
public:
    using Error::Error;
};

// An action or plan violates a hard constraint (protected vertex, budget).
class ConstraintError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

// Operation is not valid in the current state (e.g. stepping past the horizon).
class Conflict : public Error {
public:
    using Error::Error;
};

}  // namespace cloudsentry
