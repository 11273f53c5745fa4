#pragma once

#include "gpml/dgp.hpp"
#include "gpml/model.hpp"

#include <cstdint>

namespace gpml {

/// Population quantities for the censored design, with every E_x integral
/// replaced by an average over one fixed draw set (common random numbers).
struct PopulationContext {
    Vector theta0;
    double alpha = 1.0;
    CensorSpec censor;
    Matrix x_draws;  // M x d

    // Cached per-draw values of theta0'x, exp(theta0'x) and P(theta0, x).
    Vector eta0;
    Vector mu0;
    Vector p;

    Index draws() const { return x_draws.rows(); }
};

inline constexpr Index kDefaultPopulationDraws = 100000;
inline constexpr std::uint64_t kDefaultPopulationSeed = 0x5eed'c0de'2024ULL;

/// Context over caller-supplied draws (M >= 1000 rows).
PopulationContext make_population_context(Vector theta0, double alpha, CensorSpec censor,
                                          Matrix x_draws);

/// Context over `draw_covariates(M, seed)`; theta0 must have length 2.
PopulationContext make_population_context(Vector theta0, double alpha, CensorSpec censor,
                                          Index M = kDefaultPopulationDraws,
                                          std::uint64_t seed = kDefaultPopulationSeed);

/// E_x{(1 - P) exp(theta0'x) - exp(theta'x)} exp(kappa theta'x) x.
/// Throws NonFiniteEvaluation naming the draw when an exponential overflows.
Vector population_moments(const Vector& theta, double kappa, const PopulationContext& ctx);

/// Derivative of population_moments with respect to theta.
Matrix population_jacobian(const Vector& theta, double kappa, const PopulationContext& ctx);

/// Failure of the pseudo-true Newton iteration; carries the iteration trace.
class PseudoTrueError : public Error {
public:
    PseudoTrueError(const std::string& what, SolverTrace trace)
        : Error(what), trace_(std::move(trace)) {}
    const SolverTrace& trace() const noexcept { return trace_; }

private:
    SolverTrace trace_;
};

/// Root of population_moments by damped Newton from theta0.
Vector pseudo_true(double kappa, const PopulationContext& ctx);

/// (A'A)^-1 A b with A = E[(P kappa - 1) x x' exp((kappa+1) theta0'x)] and
/// b = E[P x exp((kappa+1) theta0'x)]. Independent of alpha.
Vector bias_approximation(double kappa, const PopulationContext& ctx);

/// J^-1 I J^-1 at the pseudo-true parameter (per-observation scale).
Matrix asymptotic_variance(double kappa, const PopulationContext& ctx);

/// Same sandwich at an explicit theta instead of the pseudo-true root.
Matrix asymptotic_variance_at(const Vector& theta, double kappa, const PopulationContext& ctx);

/// Uncensored closed form
/// E[mu0^(kappa+1) x x']^-1 E[mu0^(2 kappa + alpha) x x'] E[mu0^(kappa+1) x x']^-1.
/// Ignores ctx.censor.
Matrix uncensored_variance(double kappa, const PopulationContext& ctx);

/// The variance-minimizing family member without censoring: 1 - alpha.
double efficient_kappa(double alpha);

enum class OneDimEstimator { poisson, nls };

/// One-dimensional bias approximations:
///   poisson  -E[x P mu0] / E[x^2 mu0]
///   nls      -E[x P mu0^2] / E[x^2 (1 + P) mu0^2]
double corollary_bias_1d(OneDimEstimator estimator, const PopulationContext& ctx);

}  // namespace gpml
