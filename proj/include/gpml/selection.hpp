#pragma once

#include "gpml/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace gpml {

struct CvFailure {
    int fold = 0;
    double kappa = 0.0;
};

struct CvResult {
    std::vector<double> kappa_grid;
    std::vector<double> e_curve;  // +inf for a kappa with any failed fold
    double selected_kappa = 0.0;
    Matrix per_fold;  // k x |grid|; NaN where the fit failed
    std::vector<CvFailure> failures;
};

/// Kappa from lo to hi inclusive in steps of `step` (rounded to the step grid).
std::vector<double> kappa_range(double lo, double hi, double step);

/// -1, -0.95, ..., 1.
std::vector<double> default_kappa_grid();

/// Fold id (0..k-1) for each row: a seeded Fisher-Yates shuffle, then
/// position j of the shuffled order goes to fold j % k.
std::vector<int> make_folds(Index n, int k, std::uint64_t seed);

/// Index of the smallest finite value. Values within 1e-10 * max(1, min)
/// of the minimum tie; ties go to the smallest |kappa|, then the larger kappa.
/// Returns -1 when no value is finite.
int select_kappa_index(const std::vector<double>& kappas, const std::vector<double>& values);

/// k-fold cross-validation of out-of-sample squared error over `grid`.
/// `controls` supplies c, tol and the solver limits; its kappa is ignored.
/// Throws ConvergenceError when every kappa has a failed fold.
CvResult cross_validate(const Dataset& data, const std::vector<double>& grid, int k,
                        std::uint64_t seed, const EstimatorSpec& controls = {});

/// As cross_validate with an explicit fold assignment.
CvResult cross_validate_with_folds(const Dataset& data, const std::vector<double>& grid,
                                   const std::vector<int>& folds, int k,
                                   const EstimatorSpec& controls = {});

struct HoldoutResult {
    double mean_rmse = 0.0;
    double sd_rmse = 0.0;  // sample standard deviation across kept repeats
    std::vector<double> rmse;  // kept repeats in repeat order
    int skipped = 0;
};

/// Repeated random train/test splits; repeat r shuffles rows with seed + r
/// and trains on the first round(split_fraction * n) of them. Throws
/// ConvergenceError when more than 20% of repeats fail.
HoldoutResult holdout_rmse(const Dataset& data, const EstimatorSpec& spec, double split_fraction,
                           std::uint64_t seed, int repeats);

}  // namespace gpml
