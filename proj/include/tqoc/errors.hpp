#pragma once

#include <stdexcept>
#include <string>

namespace tqoc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotHermitian : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class BadTrace : public Error {
public:
    using Error::Error;
};

class NotDensityMatrix : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Adaptive step control could not meet the requested tolerance.
class ToleranceFailure : public Error {
public:
    using Error::Error;
};

/// Optimizer objective blew past the divergence guard.
class Diverged : public Error {
public:
    using Error::Error;
};

class BadAlpha : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace tqoc
