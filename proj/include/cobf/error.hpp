#pragma once

#include <stdexcept>
#include <string>

namespace cobf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A covariance that should be PSD is not (beyond rounding).
class CorruptedStats : public Error {
public:
    using Error::Error;
};

/// w_i^H Q_ii w_i == 0 for some user: the certified-rate machinery degenerates.
class DegenerateBeamformer : public Error {
public:
    DegenerateBeamformer(int user, const std::string& what)
        : Error(what), user_(user) {}
    int user() const noexcept { return user_; }

private:
    int user_;
};

/// An iterative solver failed to produce a trustworthy answer.
class SolverFailure : public Error {
public:
    using Error::Error;
};

} // namespace cobf
