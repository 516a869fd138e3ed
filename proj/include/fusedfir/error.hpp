#pragma once

#include <stdexcept>
#include <string>

namespace fusedfir {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: files, manifests, configs, mismatched dimensions.
class DataError : public Error {
public:
    using Error::Error;
};

/// A well-formed request the math does not support (e.g. a fusion bound for K = 1).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values produced during an iterative computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An iterative solve stopped at its iteration limit where a converged answer was required.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace fusedfir
