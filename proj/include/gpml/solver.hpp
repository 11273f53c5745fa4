#pragma once

#include "gpml/model.hpp"

#include <cstdint>

namespace gpml {

/// Throws RankDeficientError (carrying the offending right singular vector)
/// when sigma_min / sigma_max of X falls below 1e-10.
void check_full_rank(const Matrix& X);

/// tol * max(1, mean(y)): the bound on ||m||_inf that counts as converged.
double convergence_threshold(const Dataset& data, const EstimatorSpec& spec);

/// Poisson PML from theta = 0 by damped Newton on the concave pseudo
/// log-likelihood. Only `tol` and `max_iter` are read from `controls`.
FitResult fit_poisson(const Dataset& data, const EstimatorSpec& controls = {});

/// Damped Newton on m(theta) = 0 for a fixed (kappa, c) from `start`.
/// Steps are halved (down to 2^-30) until ||m||_inf strictly decreases.
/// Throws NonFiniteEvaluation if the moments cannot be evaluated at `start`.
FitResult solve_moments(const Dataset& data, const EstimatorSpec& spec, const Vector& start);

/// Generalized PML estimate: Poisson solution, then continuation in kappa
/// from 0 toward spec.kappa in steps of spec.continuation_step, each stage
/// warm-started from the last. Never throws for solver failure; check
/// `converged` and `trace.reason`; all-zero outcomes have no finite root and
/// report flat_region. The plug-in sandwich covariance is
/// attached when the fit converged and the Jacobian is invertible.
FitResult fit(const Dataset& data, const EstimatorSpec& spec);

/// J^-1 I J^-1 / n with J = -dm/dtheta and I = (1/n) sum psi psi^T at theta_hat.
/// Throws SingularMatrixError when cond(J) exceeds 1e12.
Matrix sandwich_covariance(const Dataset& data, const EstimatorSpec& spec, const Vector& theta_hat);

struct BootstrapResult {
    Vector se;
    Matrix estimates;  // one row per retained resample, in resample order
    int dropped = 0;
    int attempted = 0;
};

/// Nonparametric row bootstrap. Resample b draws its rows from seed + b;
/// non-converged resamples are dropped, and more than 20% drops throws
/// ConvergenceError.
BootstrapResult bootstrap_se(const Dataset& data, const EstimatorSpec& spec, int B,
                             std::uint64_t seed);

}  // namespace gpml
