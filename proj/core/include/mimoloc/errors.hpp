#pragma once

#include <stdexcept>
#include <string>

namespace mimoloc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, non-positive variance, bad counts.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Target coincides with an antenna, so the SNR model is undefined.
class SingularGeometry : public Error {
public:
    using Error::Error;
};

/// Unknown builtin scenario, method or subcommand name.
class NotFound : public Error {
public:
    using Error::Error;
};

/// Fisher information is singular for the given geometry.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

}  // namespace mimoloc
