#pragma once

#include "gpml/error.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gpml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Non-negative outcomes `y` with an n x d covariate matrix `X`.
///
/// Immutable once constructed. The constructor enforces y >= 0, finite
/// entries everywhere and n >= d >= 1; no intercept column is ever added
/// implicitly.
class Dataset {
public:
    Dataset(Vector y, Matrix X, std::vector<std::string> feature_names = {});

    const Vector& y() const noexcept { return y_; }
    const Matrix& X() const noexcept { return X_; }
    Index n() const noexcept { return y_.size(); }
    Index d() const noexcept { return X_.cols(); }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }

    double mean_outcome() const { return y_.mean(); }

    /// Rows in the given order; repeated indices are allowed (bootstrap).
    Dataset subset(std::span<const Index> rows) const;

private:
    Vector y_;
    Matrix X_;
    std::vector<std::string> names_;
};

/// One member of the generalized PML family: weights (c + mu)^kappa.
struct EstimatorSpec {
    double kappa = 0.0;
    double c = 0.0;
    double tol = 1e-8;
    int max_iter = 200;
    double continuation_step = 0.1;

    void validate() const;
};

enum class Termination { converged, max_iter, line_search_failed, non_finite, flat_region };

std::string to_string(Termination t);

/// One accepted Newton step. `kappa` is the continuation stage it belongs to;
/// ||m||_inf is strictly decreasing within a stage.
struct IterationRecord {
    double kappa = 0.0;
    Vector theta;
    double moment_norm = 0.0;
    double step = 0.0;
};

struct SolverTrace {
    std::vector<IterationRecord> iterations;
    Termination reason = Termination::max_iter;
};

struct FitResult {
    Vector theta_hat;
    double moment_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::optional<Matrix> covariance;
    std::optional<Vector> std_errors;
    SolverTrace trace;
};

/// Conditional means with the saturation flag raised when some eta exceeded
/// `overflow_threshold()`; saturated entries hold exp(threshold). Entries that
/// underflow hold the smallest positive double, so mu > 0 always.
struct MeanEval {
    Vector mu;
    bool overflow = false;
};

/// ln(max double) - 2.
double overflow_threshold();

Vector linear_predictor(const Vector& theta, const Matrix& X);
MeanEval conditional_mean(const Vector& theta, const Matrix& X);

}  // namespace gpml
