#include "gpml/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gpml {

namespace {

std::string shape(Index rows, Index cols) {
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

}  // namespace

Dataset::Dataset(Vector y, Matrix X, std::vector<std::string> feature_names)
    : y_(std::move(y)), X_(std::move(X)), names_(std::move(feature_names)) {
    if (X_.rows() != y_.size()) {
        throw DimensionError("dataset: y has length " + std::to_string(y_.size()) +
                             " but X is " + shape(X_.rows(), X_.cols()));
    }
    if (X_.cols() < 1) throw InvalidDataError("dataset: X must have at least one column");
    if (y_.size() < X_.cols()) {
        throw InvalidDataError("dataset: need n >= d, got n=" + std::to_string(y_.size()) +
                               ", d=" + std::to_string(X_.cols()));
    }
    if (!names_.empty() && static_cast<Index>(names_.size()) != X_.cols()) {
        throw DimensionError("dataset: " + std::to_string(names_.size()) +
                             " feature names for " + std::to_string(X_.cols()) + " columns");
    }
    for (Index i = 0; i < y_.size(); ++i) {
        if (!std::isfinite(y_[i])) {
            throw InvalidDataError("dataset: non-finite outcome at row " + std::to_string(i), i);
        }
        if (y_[i] < 0.0) {
            throw InvalidDataError("dataset: negative outcome at row " + std::to_string(i), i);
        }
    }
    for (Index j = 0; j < X_.cols(); ++j) {
        for (Index i = 0; i < X_.rows(); ++i) {
            if (!std::isfinite(X_(i, j))) {
                throw InvalidDataError("dataset: non-finite covariate at row " +
                                           std::to_string(i) + ", column " + std::to_string(j),
                                       i);
            }
        }
    }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
    Vector y(static_cast<Index>(rows.size()));
    Matrix X(static_cast<Index>(rows.size()), X_.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Index r = rows[k];
        if (r < 0 || r >= n()) throw DimensionError("dataset: subset row out of range");
        y[static_cast<Index>(k)] = y_[r];
        X.row(static_cast<Index>(k)) = X_.row(r);
    }
    return Dataset(std::move(y), std::move(X), names_);
}

void EstimatorSpec::validate() const {
    if (!(kappa >= -1.0 && kappa <= 1.0)) {
        throw std::invalid_argument("kappa must lie in [-1, 1], got " + std::to_string(kappa));
    }
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be >= 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(continuation_step > 0.0)) throw std::invalid_argument("continuation_step must be > 0");
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iter: return "max_iter";
        case Termination::line_search_failed: return "line_search_failed";
        case Termination::non_finite: return "non_finite";
        case Termination::flat_region: return "flat_region";
    }
    return "unknown";
}

double overflow_threshold() {
    static const double t = std::log(std::numeric_limits<double>::max()) - 2.0;
    return t;
}

Vector linear_predictor(const Vector& theta, const Matrix& X) {
    if (theta.size() != X.cols()) {
        throw DimensionError("linear_predictor: theta has length " +
                             std::to_string(theta.size()) + " but X is " +
                             shape(X.rows(), X.cols()));
    }
    return X * theta;
}

MeanEval conditional_mean(const Vector& theta, const Matrix& X) {
    if (!theta.allFinite()) {
        throw NonFiniteEvaluation("conditional_mean: theta is not finite", theta);
    }
    const Vector eta = linear_predictor(theta, X);
    const double cap = overflow_threshold();
    MeanEval out;
    out.mu.resize(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        if (eta[i] > cap) {
            out.overflow = true;
            out.mu[i] = std::exp(cap);
        } else {
            // Deep underflow rounds to the smallest positive double, not to 0.
            out.mu[i] = std::max(std::exp(eta[i]), std::numeric_limits<double>::denorm_min());
        }
    }
    return out;
}

}  // namespace gpml
