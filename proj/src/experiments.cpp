#include "gpml/experiments.hpp"

#include "gpml/asymptotics.hpp"
#include "gpml/parallel.hpp"
#include "gpml/rng.hpp"
#include "gpml/selection.hpp"
#include "gpml/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpml {

namespace {

constexpr double kWarningShare = 0.1;
constexpr double kGammaSubstitute = -0.95;

void check_kappas(const std::vector<double>& kappas) {
    if (kappas.empty()) throw std::invalid_argument("kappa set must be non-empty");
    for (double k : kappas) {
        if (!(k >= -1.0 && k <= 1.0)) throw std::invalid_argument("kappa outside [-1, 1]");
    }
}

double used_kappa(double kappa, bool substitute_gamma) {
    return substitute_gamma && kappa == -1.0 ? kGammaSubstitute : kappa;
}

CensorSpec check_censor(const CheckConfig& config, const std::optional<double>& beta) {
    return beta ? CensorSpec::logistic_power(config.tau, *beta) : CensorSpec::none();
}

// Column-wise mean over the non-NaN rows, plus the kept count.
std::pair<Vector, int> converged_mean(const Matrix& estimates) {
    Vector sum = Vector::Zero(estimates.cols());
    int kept = 0;
    for (Index r = 0; r < estimates.rows(); ++r) {
        if (estimates.row(r).hasNaN()) continue;
        sum += estimates.row(r).transpose();
        ++kept;
    }
    if (kept > 0) sum /= kept;
    return {sum, kept};
}

}  // namespace

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::alpha: return "alpha";
        case SweepAxis::tau: return "tau";
        case SweepAxis::beta: return "beta";
        case SweepAxis::kappa: return "kappa";
    }
    return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "alpha") return SweepAxis::alpha;
    if (name == "tau") return SweepAxis::tau;
    if (name == "beta") return SweepAxis::beta;
    if (name == "kappa") return SweepAxis::kappa;
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

void ReplicationPlan::validate() const {
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (values.empty()) throw std::invalid_argument("sweep needs at least one cell value");
    if (axis == SweepAxis::kappa) {
        check_kappas(values);
    } else {
        check_kappas(kappa_set);
    }
    DgpConfig probe = dgp;
    probe.n = n;
    probe.validate();
    controls.validate();
}

ReplicationSet replicate(const DgpConfig& dgp, const std::vector<double>& kappas, int reps,
                         Index n, std::uint64_t base_seed, const EstimatorSpec& controls) {
    check_kappas(kappas);
    const Index d = dgp.theta0.size();
    ReplicationSet out;
    out.kappas = kappas;
    out.estimates.assign(kappas.size(),
                         Matrix::Constant(reps, d, std::numeric_limits<double>::quiet_NaN()));

    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
        DgpConfig cfg = dgp;
        cfg.n = n;
        cfg.seed = child_seed(base_seed, r);
        const SimulatedSample sample = generate(cfg);
        for (std::size_t k = 0; k < kappas.size(); ++k) {
            EstimatorSpec spec = controls;
            spec.kappa = kappas[k];
            try {
                const FitResult f = fit(sample.dataset, spec);
                if (f.converged) out.estimates[k].row(static_cast<Index>(r)) = f.theta_hat.transpose();
            } catch (const Error&) {
            }
        }
    });
    return out;
}

std::vector<SweepRow> summarize(const Matrix& estimates, const Vector& theta0, double kappa) {
    const auto [mean, kept] = converged_mean(estimates);
    const int reps = static_cast<int>(estimates.rows());
    std::vector<SweepRow> rows;
    for (Index j = 0; j < estimates.cols(); ++j) {
        SweepRow row;
        row.kappa = kappa;
        row.coord = static_cast<int>(j);
        row.n_converged = kept;
        row.reps = reps;
        row.warning = reps - kept > kWarningShare * reps;
        if (kept == 0) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.mean = row.bias = row.std = row.rmse = row.bias_se = row.rmse_se = nan;
            rows.push_back(row);
            continue;
        }
        double ss = 0.0;
        double mse = 0.0;
        for (Index r = 0; r < estimates.rows(); ++r) {
            if (estimates.row(r).hasNaN()) continue;
            const double dev = estimates(r, j) - mean[j];
            ss += dev * dev;
            const double err = estimates(r, j) - theta0[j];
            mse += err * err;
        }
        mse /= kept;
        row.mean = mean[j];
        row.bias = mean[j] - theta0[j];
        row.std = std::sqrt(ss / kept);
        row.rmse = std::sqrt(row.bias * row.bias + row.std * row.std);
        row.bias_se = kept > 1 ? row.std / std::sqrt(kept - 1.0) : 0.0;

        // se(rmse) = se(mean squared error) / (2 rmse)
        double ss_mse = 0.0;
        for (Index r = 0; r < estimates.rows(); ++r) {
            if (estimates.row(r).hasNaN()) continue;
            const double err = estimates(r, j) - theta0[j];
            ss_mse += (err * err - mse) * (err * err - mse);
        }
        const double se_mse = kept > 1 ? std::sqrt(ss_mse / (kept - 1.0) / kept) : 0.0;
        row.rmse_se = row.rmse > 0.0 ? se_mse / (2.0 * row.rmse) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

SweepResult run_sweep(const ReplicationPlan& plan) {
    plan.validate();
    SweepResult out;
    out.plan = plan;
    const std::string name = to_string(plan.axis);

    auto append = [&](const std::vector<SweepRow>& rows, double cell) {
        for (SweepRow row : rows) {
            row.cell_param_name = name;
            row.cell_param_value = cell;
            row.n = plan.n;
            row.base_seed = plan.base_seed;
            out.rows.push_back(row);
        }
    };

    if (plan.axis == SweepAxis::kappa) {
        const ReplicationSet set =
            replicate(plan.dgp, plan.values, plan.reps, plan.n, plan.base_seed, plan.controls);
        for (std::size_t k = 0; k < plan.values.size(); ++k) {
            append(summarize(set.estimates[k], plan.dgp.theta0, plan.values[k]), plan.values[k]);
        }
        return out;
    }

    for (double cell : plan.values) {
        DgpConfig dgp = plan.dgp;
        switch (plan.axis) {
            case SweepAxis::alpha: dgp.alpha = cell; break;
            case SweepAxis::tau: dgp.censor.tau = cell; break;
            case SweepAxis::beta: dgp.censor.beta = cell; break;
            case SweepAxis::kappa: break;
        }
        const ReplicationSet set =
            replicate(dgp, plan.kappa_set, plan.reps, plan.n, plan.base_seed, plan.controls);
        for (std::size_t k = 0; k < plan.kappa_set.size(); ++k) {
            append(summarize(set.estimates[k], dgp.theta0, plan.kappa_set[k]), cell);
        }
    }
    return out;
}

RmseBand rmse_band(const std::vector<double>& kappas, const std::vector<double>& rmse,
                   const std::vector<double>& rmse_se) {
    RmseBand band;
    band.argmin = select_kappa_index(kappas, rmse);
    if (band.argmin < 0) return band;
    const auto a = static_cast<std::size_t>(band.argmin);
    const double limit = rmse[a] + rmse_se[a];
    std::size_t lo = a;
    std::size_t hi = a;
    while (lo > 0 && std::isfinite(rmse[lo - 1]) && rmse[lo - 1] <= limit) --lo;
    while (hi + 1 < rmse.size() && std::isfinite(rmse[hi + 1]) && rmse[hi + 1] <= limit) ++hi;
    band.lo = kappas[lo];
    band.hi = kappas[hi];
    return band;
}

std::vector<PhaseCell> run_phase_grid(const DgpConfig& dgp, const std::vector<double>& alpha_values,
                                      const std::vector<double>& tau_values,
                                      const std::vector<double>& kappa_grid, int reps, Index n,
                                      std::uint64_t base_seed, const EstimatorSpec& controls) {
    if (alpha_values.empty() || tau_values.empty()) {
        throw std::invalid_argument("phase grid needs non-empty alpha and tau values");
    }
    check_kappas(kappa_grid);
    if (reps < 2) throw std::invalid_argument("phase grid needs reps >= 2");

    std::vector<PhaseCell> cells;
    for (double alpha : alpha_values) {
        for (double tau : tau_values) {
            DgpConfig cfg = dgp;
            cfg.alpha = alpha;
            cfg.censor.tau = tau;
            const ReplicationSet set = replicate(cfg, kappa_grid, reps, n, base_seed, controls);
            const Index d = cfg.theta0.size();
            std::vector<std::vector<SweepRow>> summaries;
            for (std::size_t k = 0; k < kappa_grid.size(); ++k) {
                summaries.push_back(summarize(set.estimates[k], cfg.theta0, kappa_grid[k]));
            }
            for (Index j = 0; j < d; ++j) {
                PhaseCell cell;
                cell.alpha = alpha;
                cell.tau = tau;
                cell.coord = static_cast<int>(j);
                for (const auto& s : summaries) {
                    const SweepRow& row = s[static_cast<std::size_t>(j)];
                    // Cells with too many failures do not compete for the optimum.
                    cell.rmse.push_back(row.warning ? std::numeric_limits<double>::infinity()
                                                    : row.rmse);
                    cell.rmse_se.push_back(row.rmse_se);
                }
                const RmseBand band = rmse_band(kappa_grid, cell.rmse, cell.rmse_se);
                if (band.argmin >= 0) {
                    cell.optimal_kappa = kappa_grid[static_cast<std::size_t>(band.argmin)];
                    cell.rmse_at_opt = cell.rmse[static_cast<std::size_t>(band.argmin)];
                    cell.band_lo = band.lo;
                    cell.band_hi = band.hi;
                } else {
                    const double nan = std::numeric_limits<double>::quiet_NaN();
                    cell.optimal_kappa = cell.rmse_at_opt = cell.band_lo = cell.band_hi = nan;
                }
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::vector<MomentCheckRow> run_moment_check(const std::vector<double>& kappa_set,
                                             const std::vector<std::optional<double>>& beta_values,
                                             const CheckConfig& config) {
    check_kappas(kappa_set);
    std::vector<double> fitted;
    for (double k : kappa_set) fitted.push_back(used_kappa(k, config.substitute_gamma));

    std::vector<MomentCheckRow> rows;
    for (const auto& beta : beta_values) {
        DgpConfig dgp;
        dgp.theta0 = config.theta0;
        dgp.alpha = config.alpha;
        dgp.censor = check_censor(config, beta);
        const ReplicationSet set = replicate(dgp, fitted, config.reps, config.n, config.base_seed);
        const PopulationContext ctx = make_population_context(
            config.theta0, config.alpha, dgp.censor, config.population_draws, config.population_seed);
        for (std::size_t k = 0; k < fitted.size(); ++k) {
            MomentCheckRow row;
            row.kappa_requested = kappa_set[k];
            row.kappa_used = fitted[k];
            row.beta = beta;
            std::tie(row.average_theta, row.n_converged) = converged_mean(set.estimates[k]);
            row.components = row.n_converged > 0
                                 ? population_moments(row.average_theta, fitted[k], ctx)
                                 : Vector::Constant(config.theta0.size(),
                                                    std::numeric_limits<double>::quiet_NaN());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<BiasCheckRow> run_bias_check(const std::vector<double>& kappa_set,
                                         const std::vector<std::optional<double>>& beta_values,
                                         const CheckConfig& config) {
    check_kappas(kappa_set);
    std::vector<double> fitted;
    for (double k : kappa_set) fitted.push_back(used_kappa(k, config.substitute_gamma));

    std::vector<BiasCheckRow> rows;
    for (const auto& beta : beta_values) {
        DgpConfig dgp;
        dgp.theta0 = config.theta0;
        dgp.alpha = config.alpha;
        dgp.censor = check_censor(config, beta);
        const ReplicationSet set = replicate(dgp, fitted, config.reps, config.n, config.base_seed);
        const PopulationContext ctx = make_population_context(
            config.theta0, config.alpha, dgp.censor, config.population_draws, config.population_seed);
        for (std::size_t k = 0; k < fitted.size(); ++k) {
            BiasCheckRow row;
            row.kappa_requested = kappa_set[k];
            row.kappa_used = fitted[k];
            row.beta = beta;
            const std::vector<SweepRow> summary = summarize(set.estimates[k], config.theta0, fitted[k]);
            const Index d = config.theta0.size();
            row.simulated_bias.resize(d);
            row.simulated_bias_se.resize(d);
            for (Index j = 0; j < d; ++j) {
                row.simulated_bias[j] = summary[static_cast<std::size_t>(j)].bias;
                row.simulated_bias_se[j] = summary[static_cast<std::size_t>(j)].bias_se;
            }
            row.n_converged = summary.front().n_converged;
            row.analytic_bias = bias_approximation(fitted[k], ctx);
            row.abs_gap = (row.analytic_bias - row.simulated_bias).cwiseAbs();
            row.rel_gap = row.abs_gap.cwiseQuotient(row.simulated_bias.cwiseAbs());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace gpml
