#pragma once

#include "gpml/experiments.hpp"
#include "gpml/model.hpp"
#include "gpml/selection.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpml {

enum class IoErrorCode { io, malformed, missing_column, non_numeric, negative_outcome };

std::string to_string(IoErrorCode code);

/// CSV and file failures. `row()` is the 1-based data row (header excluded)
/// or 0 when not tied to a row; `column()` is empty when not tied to one.
class IoError : public Error {
public:
    IoError(IoErrorCode code, const std::string& what, long row = 0, std::string column = {})
        : Error(what), code_(code), row_(row), column_(std::move(column)) {}
    IoErrorCode code() const noexcept { return code_; }
    long row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    IoErrorCode code_;
    long row_;
    std::string column_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Header row required; the outcome column becomes y and every other column
/// becomes a covariate in header order. Missing or non-numeric cells and
/// negative outcomes are rejected, never imputed.
Dataset read_csv(std::istream& in, const std::string& outcome_column);
Dataset load_csv(const std::string& path, const std::string& outcome_column);

/// Writes `outcome_column` first, then the covariates (named x1.. when the
/// dataset has no feature names).
void write_csv(std::ostream& out, const Dataset& data, const std::string& outcome_column = "y");
void save_csv(const std::string& path, const Dataset& data, const std::string& outcome_column = "y");

/// Means and n-denominator standard deviations of the original covariates.
struct TransformRecord {
    bool add_intercept = false;
    bool standardize = false;
    Vector means;
    Vector sds;
    std::vector<std::string> original_names;
};

struct Transformed {
    Dataset data;
    TransformRecord record;
};

/// Optional standardization (x - mean) / sd of every original column, then an
/// optional constant-1 column prepended (never standardized).
Transformed transform(const Dataset& data, bool add_intercept, bool standardize);

/// Coefficients on the original covariate scale (intercept first when one was
/// added), giving the same linear predictor on every row. Standardized fits
/// need an intercept to absorb the centering.
Vector unmap_coefficients(const Vector& theta, const TransformRecord& record);

// Result tables. Each writer emits a header row and one line per record.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_phase_csv(std::ostream& out, const std::vector<PhaseCell>& cells);
void write_moment_check_csv(std::ostream& out, const std::vector<MomentCheckRow>& rows);
void write_bias_check_csv(std::ostream& out, const std::vector<BiasCheckRow>& rows);

/// Writes `text` to `path`, throwing IoError(io) on failure.
void write_text_file(const std::string& path, const std::string& text);

using Json = nlohmann::ordered_json;

Json vector_json(const Vector& v);
Json matrix_json(const Matrix& m);
/// Finite numbers as numbers, inf/NaN as null.
Json number_json(double v);

/// Stable fit document: theta_hat, std_errors, kappa, c, converged,
/// moment_norm, n, d, seed, then diagnostics.
Json fit_json(const FitResult& fit, const EstimatorSpec& spec, const Dataset& data,
              std::uint64_t seed);

Json cv_json(const CvResult& cv, int k, std::uint64_t seed);

}  // namespace gpml
