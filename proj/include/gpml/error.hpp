#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpml {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Raised when a dataset violates its invariants. `row()` is the 0-based
/// offending row, or -1 when the problem is not tied to a single row.
class InvalidDataError : public Error {
public:
    InvalidDataError(const std::string& what, std::ptrdiff_t row = -1)
        : Error(what), row_(row) {}
    std::ptrdiff_t row() const noexcept { return row_; }

private:
    std::ptrdiff_t row_;
};

/// An exponential overflowed or a moment evaluated to inf/nan at `theta()`.
class NonFiniteEvaluation : public Error {
public:
    NonFiniteEvaluation(const std::string& what, Eigen::VectorXd theta)
        : Error(what), theta_(std::move(theta)) {}
    const Eigen::VectorXd& theta() const noexcept { return theta_; }

private:
    Eigen::VectorXd theta_;
};

class UnsupportedConfiguration : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public Error {
public:
    RankDeficientError(const std::string& what, Eigen::VectorXd null_direction)
        : Error(what), null_direction_(std::move(null_direction)) {}
    const Eigen::VectorXd& null_direction() const noexcept { return null_direction_; }

private:
    Eigen::VectorXd null_direction_;
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, double condition_number)
        : Error(what), condition_number_(condition_number) {}
    double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

/// Too many fits failed inside a resampling or replication loop.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int failures, int attempts)
        : Error(what), failures_(failures), attempts_(attempts) {}
    int failures() const noexcept { return failures_; }
    int attempts() const noexcept { return attempts_; }

private:
    int failures_;
    int attempts_;
};

}  // namespace gpml
