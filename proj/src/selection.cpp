#include "gpml/selection.hpp"

#include "gpml/parallel.hpp"
#include "gpml/rng.hpp"
#include "gpml/solver.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gpml {

namespace {

constexpr double kTieTolerance = 1e-10;
constexpr double kSkipBudget = 0.2;

std::vector<Index> shuffled_rows(Index n, std::uint64_t seed) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Philox rng(seed);
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.bounded(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    return order;
}

double mean_squared_error(const Vector& theta, const Dataset& data) {
    const MeanEval pred = conditional_mean(theta, data.X());
    return (data.y() - pred.mu).squaredNorm() / static_cast<double>(data.n());
}

}  // namespace

std::vector<double> kappa_range(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("kappa range needs step > 0 and hi >= lo");
    }
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count + 1));
    // Snap to the step grid so 0 is exactly 0, not 1e-17. For steps like 0.1
    // dividing by the integer reciprocal gives the nearest double (0.3, not
    // 3 * 0.1 = 0.30000000000000004).
    const double per_unit = std::round(1.0 / step);
    const bool decimal = std::abs(1.0 / step - per_unit) < 1e-9;
    for (long i = 0; i <= count; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        out.push_back(decimal ? std::round(v * per_unit) / per_unit : std::round(v / step) * step);
    }
    return out;
}

std::vector<double> default_kappa_grid() { return kappa_range(-1.0, 1.0, 0.05); }

std::vector<int> make_folds(Index n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("make_folds: k must be >= 2");
    if (n < 2 * static_cast<Index>(k)) throw std::invalid_argument("make_folds: need n >= 2k");
    const std::vector<Index> order = shuffled_rows(n, seed);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < order.size(); ++j) {
        folds[static_cast<std::size_t>(order[j])] = static_cast<int>(j % static_cast<std::size_t>(k));
    }
    return folds;
}

int select_kappa_index(const std::vector<double>& kappas, const std::vector<double>& values) {
    double best = std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isfinite(v)) best = std::min(best, v);
    }
    if (!std::isfinite(best)) return -1;
    const double tol = kTieTolerance * std::max(1.0, best);
    int pick = -1;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] - best > tol) continue;
        if (pick < 0) {
            pick = static_cast<int>(i);
            continue;
        }
        const double a = std::abs(kappas[i]);
        const double b = std::abs(kappas[static_cast<std::size_t>(pick)]);
        if (a < b || (a == b && kappas[i] > kappas[static_cast<std::size_t>(pick)])) {
            pick = static_cast<int>(i);
        }
    }
    return pick;
}

CvResult cross_validate_with_folds(const Dataset& data, const std::vector<double>& grid,
                                   const std::vector<int>& folds, int k,
                                   const EstimatorSpec& controls) {
    if (grid.empty()) throw std::invalid_argument("cross_validate: empty kappa grid");
    if (k < 2) throw std::invalid_argument("cross_validate: k must be >= 2");
    if (static_cast<Index>(folds.size()) != data.n()) {
        throw DimensionError("cross_validate: fold assignment length does not match n");
    }
    for (double kappa : grid) {
        if (!(kappa >= -1.0 && kappa <= 1.0)) {
            throw std::invalid_argument("cross_validate: kappa outside [-1, 1]");
        }
    }

    std::vector<std::vector<Index>> train(static_cast<std::size_t>(k));
    std::vector<std::vector<Index>> test(static_cast<std::size_t>(k));
    for (Index i = 0; i < data.n(); ++i) {
        const int f = folds[static_cast<std::size_t>(i)];
        if (f < 0 || f >= k) throw std::invalid_argument("cross_validate: fold id out of range");
        for (int j = 0; j < k; ++j) {
            (j == f ? test : train)[static_cast<std::size_t>(j)].push_back(i);
        }
    }
    std::vector<Dataset> train_sets;
    std::vector<Dataset> test_sets;
    for (int j = 0; j < k; ++j) {
        train_sets.push_back(data.subset(train[static_cast<std::size_t>(j)]));
        test_sets.push_back(data.subset(test[static_cast<std::size_t>(j)]));
    }

    const std::size_t G = grid.size();
    CvResult out;
    out.kappa_grid = grid;
    out.per_fold = Matrix::Constant(k, static_cast<Index>(G), std::numeric_limits<double>::quiet_NaN());

    parallel_for(static_cast<std::size_t>(k) * G, [&](std::size_t task) {
        const std::size_t j = task / G;
        const std::size_t g = task % G;
        EstimatorSpec spec = controls;
        spec.kappa = grid[g];
        try {
            const FitResult f = fit(train_sets[j], spec);
            if (f.converged) {
                out.per_fold(static_cast<Index>(j), static_cast<Index>(g)) =
                    mean_squared_error(f.theta_hat, test_sets[j]);
            }
        } catch (const Error&) {
        }
    });

    out.e_curve.assign(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
        double sum = 0.0;
        bool failed = false;
        for (int j = 0; j < k; ++j) {
            const double v = out.per_fold(j, static_cast<Index>(g));
            if (std::isnan(v)) {
                out.failures.push_back({j, grid[g]});
                failed = true;
            } else {
                sum += v;
            }
        }
        out.e_curve[g] = failed ? std::numeric_limits<double>::infinity() : sum / k;
    }
    const int pick = select_kappa_index(grid, out.e_curve);
    if (pick < 0) {
        throw ConvergenceError("cross_validate: every kappa on the grid failed on some fold",
                               static_cast<int>(out.failures.size()), k * static_cast<int>(G));
    }
    out.selected_kappa = grid[static_cast<std::size_t>(pick)];
    return out;
}

CvResult cross_validate(const Dataset& data, const std::vector<double>& grid, int k,
                        std::uint64_t seed, const EstimatorSpec& controls) {
    return cross_validate_with_folds(data, grid, make_folds(data.n(), k, seed), k, controls);
}

HoldoutResult holdout_rmse(const Dataset& data, const EstimatorSpec& spec, double split_fraction,
                           std::uint64_t seed, int repeats) {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw std::invalid_argument("holdout_rmse: split_fraction must be in (0, 1)");
    }
    if (repeats < 1) throw std::invalid_argument("holdout_rmse: repeats must be >= 1");
    spec.validate();
    const Index n = data.n();
    const auto n_train = static_cast<Index>(std::llround(split_fraction * static_cast<double>(n)));
    if (n_train < data.d() || n_train >= n) {
        throw std::invalid_argument("holdout_rmse: split leaves an empty or underdetermined side");
    }

    std::vector<double> rmse(static_cast<std::size_t>(repeats), std::numeric_limits<double>::quiet_NaN());
    parallel_for(static_cast<std::size_t>(repeats), [&](std::size_t r) {
        const std::vector<Index> order = shuffled_rows(n, seed + r);
        const std::span<const Index> all(order);
        try {
            const FitResult f = fit(data.subset(all.first(static_cast<std::size_t>(n_train))), spec);
            if (f.converged) {
                const Dataset test = data.subset(all.subspan(static_cast<std::size_t>(n_train)));
                rmse[r] = std::sqrt(mean_squared_error(f.theta_hat, test));
            }
        } catch (const Error&) {
        }
    });

    HoldoutResult out;
    for (double v : rmse) {
        if (std::isnan(v)) {
            ++out.skipped;
        } else {
            out.rmse.push_back(v);
        }
    }
    if (out.skipped > kSkipBudget * repeats) {
        throw ConvergenceError("holdout_rmse: " + std::to_string(out.skipped) + " of " +
                                   std::to_string(repeats) + " splits failed to converge",
                               out.skipped, repeats);
    }
    const double kept = static_cast<double>(out.rmse.size());
    out.mean_rmse = std::accumulate(out.rmse.begin(), out.rmse.end(), 0.0) / kept;
    double ss = 0.0;
    for (double v : out.rmse) ss += (v - out.mean_rmse) * (v - out.mean_rmse);
    out.sd_rmse = out.rmse.size() > 1 ? std::sqrt(ss / (kept - 1.0)) : 0.0;
    return out;
}

}  // namespace gpml
