#pragma once

#include <stdexcept>
#include <string>

namespace invfor {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// LP problem violates its structural invariants (NaN coefficient,
/// reference to an unregistered variable, ...).
struct MalformedProblem : Error {
    using Error::Error;
};

/// The LP solver could not finish (iteration limit, singular basis).
struct SolverFailure : Error {
    using Error::Error;
};

/// Load bounds that make the reconstruction problem infeasible
/// (pmin > pmax, or block widths too small to reach pmin).
struct InconsistentBounds : Error {
    using Error::Error;
};

/// Regressor vector length does not match the model's regressor count.
struct ArityMismatch : Error {
    using Error::Error;
};

/// Series too short for the requested lags / windows.
struct InsufficientHistory : Error {
    using Error::Error;
};

/// Rank-deficient regression design (duplicated or collinear columns).
struct SingularDesign : Error {
    using Error::Error;
};

/// NRMSE normalizer is zero (constant actual series).
struct ZeroRange : Error {
    using Error::Error;
};

/// Bad configuration value or malformed config/model file.
struct ConfigError : Error {
    using Error::Error;
};

/// File I/O problem; message names the offending path.
struct IoError : Error {
    using Error::Error;
};

/// Base building model already has unstable dynamics.
struct UnstableBase : Error {
    using Error::Error;
};

} // namespace invfor
