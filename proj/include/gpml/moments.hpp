#pragma once

#include "gpml/model.hpp"

#include <optional>

namespace gpml {

/// Sample moment m(theta) = (1/n) sum (y_i - mu_i)(c + mu_i)^kappa x_i, its
/// Jacobian dm/dtheta, and (for c = 0 only) the objective whose gradient is n*m.
struct MomentEval {
    Vector m;
    Matrix J;
    std::optional<double> objective;
};

/// (c + mu)^kappa, computed as exp(kappa * eta) when c = 0.
double moment_weight(double mu, double kappa, double c);

MomentEval evaluate_moments(const Vector& theta, const Dataset& data, const EstimatorSpec& spec,
                            bool with_jacobian = true);

Vector moment_vector(const Vector& theta, const Dataset& data, const EstimatorSpec& spec);
Matrix moment_jacobian(const Vector& theta, const Dataset& data, const EstimatorSpec& spec);

/// (1/n) sum psi_i psi_i^T with psi_i = (y_i - mu_i)(c + mu_i)^kappa x_i.
Matrix score_outer_product(const Vector& theta, const Dataset& data, const EstimatorSpec& spec);

struct ObjectiveEval {
    double value = 0.0;
    Vector gradient;
};

/// Pseudo log-likelihood whose gradient equals n * moment_vector for c = 0.
///
/// kappa = 0 uses sum y*eta - mu, kappa = -1 uses sum -eta - y*exp(-eta),
/// kappa = 1 uses -1/2 sum (y - mu)^2, and every other kappa in (-1, 1)
/// uses sum y*exp(kappa*eta)/kappa - exp((kappa+1)*eta)/(kappa+1). The three
/// closed forms are dispatched within 1e-10 of the endpoints. Throws
/// UnsupportedConfiguration when spec.c != 0.
ObjectiveEval objective_and_gradient(const Vector& theta, const Dataset& data,
                                     const EstimatorSpec& spec);
ObjectiveEval objective_and_gradient(const Vector& theta, const Dataset& data, double kappa);

}  // namespace gpml
