#pragma once

#include "gpml/dgp.hpp"
#include "gpml/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gpml {

enum class SweepAxis { alpha, tau, beta, kappa };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

/// A Monte Carlo study: for every cell value on `axis`, `reps` datasets of
/// size `n` are drawn from `dgp` (with the axis parameter replaced) and every
/// kappa in `kappa_set` is fitted. Replication r uses seed base_seed ^ r in
/// every cell, so cells share random numbers. On the kappa axis the cell
/// values are the fitted kappas and `kappa_set` is ignored.
struct ReplicationPlan {
    DgpConfig dgp;
    SweepAxis axis = SweepAxis::alpha;
    std::vector<double> values;
    std::vector<double> kappa_set{-1.0, -0.5, 0.0, 0.5, 1.0};
    int reps = 200;
    Index n = 1000;
    std::uint64_t base_seed = 0;
    EstimatorSpec controls;

    void validate() const;
};

/// Per-coordinate summary of the converged replications of one (cell, kappa).
/// `std` uses the replication count as denominator, so
/// rmse^2 = bias^2 + std^2 = mean squared error.
struct SweepRow {
    std::string cell_param_name;
    double cell_param_value = 0.0;
    double kappa = 0.0;
    int coord = 0;
    double mean = 0.0;
    double bias = 0.0;
    double std = 0.0;
    double rmse = 0.0;
    double bias_se = 0.0;  // std / sqrt(n_converged - 1)
    double rmse_se = 0.0;  // delta-method standard error of rmse
    int n_converged = 0;
    int reps = 0;
    Index n = 0;
    std::uint64_t base_seed = 0;
    bool warning = false;  // more than 10% of the cell's fits failed
};

struct SweepResult {
    ReplicationPlan plan;
    std::vector<SweepRow> rows;  // cell-major, then kappa, then coordinate
};

/// Replication estimates of one DGP: estimates[k] is reps x d, NaN rows for
/// fits that did not converge.
struct ReplicationSet {
    std::vector<double> kappas;
    std::vector<Matrix> estimates;
};

ReplicationSet replicate(const DgpConfig& dgp, const std::vector<double>& kappas, int reps,
                         Index n, std::uint64_t base_seed, const EstimatorSpec& controls = {});

/// Summary rows for estimates (reps x d, NaN rows dropped) around theta0.
std::vector<SweepRow> summarize(const Matrix& estimates, const Vector& theta0, double kappa);

SweepResult run_sweep(const ReplicationPlan& plan);

/// Smallest contiguous run of grid indices around the argmin whose value is
/// within the argmin's standard error of the minimum.
struct RmseBand {
    int argmin = -1;
    double lo = 0.0;
    double hi = 0.0;
};
RmseBand rmse_band(const std::vector<double>& kappas, const std::vector<double>& rmse,
                   const std::vector<double>& rmse_se);

struct PhaseCell {
    double alpha = 0.0;
    double tau = 0.0;
    int coord = 0;
    double optimal_kappa = 0.0;
    double rmse_at_opt = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    std::vector<double> rmse;     // per kappa_grid entry
    std::vector<double> rmse_se;  // per kappa_grid entry
};

/// Optimal kappa per (alpha, tau) cell and coordinate, minimizing replication
/// RMSE with the selection tie rule. `dgp` supplies theta0, the censoring
/// family and beta; alpha and tau come from the grids.
std::vector<PhaseCell> run_phase_grid(const DgpConfig& dgp, const std::vector<double>& alpha_values,
                                      const std::vector<double>& tau_values,
                                      const std::vector<double>& kappa_grid, int reps, Index n,
                                      std::uint64_t base_seed, const EstimatorSpec& controls = {});

/// Shared settings of the moment and bias checks. The logistic_power
/// censoring uses `tau` and each row's beta; an absent beta means no censoring.
struct CheckConfig {
    Vector theta0 = Vector::Ones(2);
    double alpha = 1.0;
    double tau = 1.0;
    int reps = 200;
    Index n = 1000;
    std::uint64_t base_seed = 0;
    Index population_draws = 100000;
    std::uint64_t population_seed = 0x5eed'c0de'2024ULL;
    /// Fit kappa = -0.95 whenever -1 is requested.
    bool substitute_gamma = false;
};

struct MomentCheckRow {
    double kappa_requested = 0.0;
    double kappa_used = 0.0;
    std::optional<double> beta;
    Vector average_theta;
    Vector components;
    int n_converged = 0;
};

/// Average the fits over replications, then evaluate the population moments
/// of the fitted kappa at that average.
std::vector<MomentCheckRow> run_moment_check(const std::vector<double>& kappa_set,
                                             const std::vector<std::optional<double>>& beta_values,
                                             const CheckConfig& config);

struct BiasCheckRow {
    double kappa_requested = 0.0;
    double kappa_used = 0.0;
    std::optional<double> beta;
    Vector simulated_bias;
    Vector simulated_bias_se;
    Vector analytic_bias;
    Vector abs_gap;
    Vector rel_gap;  // abs_gap / |simulated_bias|
    int n_converged = 0;
};

/// Monte Carlo bias against the first-order bias approximation.
std::vector<BiasCheckRow> run_bias_check(const std::vector<double>& kappa_set,
                                         const std::vector<std::optional<double>>& beta_values,
                                         const CheckConfig& config);

}  // namespace gpml
