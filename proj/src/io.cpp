#include "gpml/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gpml {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

// Comma-separated fields with optional double quotes ("" escapes a quote).
bool split_fields(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            fields.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += ch;
        }
    }
    if (quoted) return false;
    fields.push_back(was_quoted ? cur : trim(cur));
    return true;
}

// getline that also drops the carriage return of CRLF files.
bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::string beta_text(const std::optional<double>& beta) {
    return beta ? format_double(*beta) : "none";
}

}  // namespace

std::string to_string(IoErrorCode code) {
    switch (code) {
        case IoErrorCode::io: return "io";
        case IoErrorCode::malformed: return "malformed";
        case IoErrorCode::missing_column: return "missing_column";
        case IoErrorCode::non_numeric: return "non_numeric";
        case IoErrorCode::negative_outcome: return "negative_outcome";
    }
    return "unknown";
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Dataset read_csv(std::istream& in, const std::string& outcome_column) {
    std::string line;
    if (!next_line(in, line)) throw IoError(IoErrorCode::malformed, "csv: missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header;
    if (!split_fields(line, header)) throw IoError(IoErrorCode::malformed, "csv: unterminated quote in header");

    std::ptrdiff_t outcome = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == outcome_column) {
            if (outcome >= 0) {
                throw IoError(IoErrorCode::malformed, "csv: outcome column '" + outcome_column +
                                                          "' appears more than once");
            }
            outcome = static_cast<std::ptrdiff_t>(j);
        }
    }
    if (outcome < 0) {
        throw IoError(IoErrorCode::missing_column,
                      "csv: outcome column '" + outcome_column + "' not found in header", 0,
                      outcome_column);
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) != outcome) names.push_back(header[j]);
    }

    std::vector<double> ys;
    std::vector<double> xs;
    std::vector<std::string> fields;
    long row = 0;
    while (next_line(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        if (!split_fields(line, fields)) {
            throw IoError(IoErrorCode::malformed, "csv: unterminated quote in row " + std::to_string(row), row);
        }
        if (fields.size() != header.size()) {
            throw IoError(IoErrorCode::malformed,
                          "csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(header.size()),
                          row);
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            double v = 0.0;
            if (!parse_number(fields[j], v)) {
                const std::string what = fields[j].empty() ? "missing value" : "non-numeric value '" + fields[j] + "'";
                throw IoError(IoErrorCode::non_numeric,
                              "csv: " + what + " in row " + std::to_string(row) + ", column '" + header[j] + "'",
                              row, header[j]);
            }
            if (static_cast<std::ptrdiff_t>(j) == outcome) {
                if (v < 0.0) {
                    throw IoError(IoErrorCode::negative_outcome,
                                  "csv: negative outcome in row " + std::to_string(row), row, header[j]);
                }
                ys.push_back(v);
            } else {
                xs.push_back(v);
            }
        }
    }
    if (in.bad()) throw IoError(IoErrorCode::io, "csv: read failure");
    if (row == 0) throw IoError(IoErrorCode::malformed, "csv: no data rows");
    if (names.empty()) throw IoError(IoErrorCode::malformed, "csv: no covariate columns");

    const auto n = static_cast<Index>(ys.size());
    const auto d = static_cast<Index>(names.size());
    Vector y = Eigen::Map<Vector>(ys.data(), n);
    Matrix X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), n, d);
    return Dataset(std::move(y), std::move(X), std::move(names));
}

Dataset load_csv(const std::string& path, const std::string& outcome_column) {
    std::ifstream in(path);
    if (!in) throw IoError(IoErrorCode::io, "cannot open '" + path + "' for reading");
    return read_csv(in, outcome_column);
}

void write_csv(std::ostream& out, const Dataset& data, const std::string& outcome_column) {
    out << outcome_column;
    for (Index j = 0; j < data.d(); ++j) {
        out << ',';
        if (data.feature_names().empty()) {
            out << 'x' << (j + 1);
        } else {
            out << data.feature_names()[static_cast<std::size_t>(j)];
        }
    }
    out << '\n';
    for (Index i = 0; i < data.n(); ++i) {
        out << format_double(data.y()[i]);
        for (Index j = 0; j < data.d(); ++j) out << ',' << format_double(data.X()(i, j));
        out << '\n';
    }
}

void save_csv(const std::string& path, const Dataset& data, const std::string& outcome_column) {
    std::ostringstream os;
    write_csv(os, data, outcome_column);
    write_text_file(path, os.str());
}

Transformed transform(const Dataset& data, bool add_intercept, bool standardize) {
    const Index n = data.n();
    const Index d = data.d();
    TransformRecord rec;
    rec.add_intercept = add_intercept;
    rec.standardize = standardize;
    rec.original_names = data.feature_names();
    rec.means = Vector::Zero(d);
    rec.sds = Vector::Ones(d);

    Matrix X = data.X();
    if (standardize) {
        for (Index j = 0; j < d; ++j) {
            const double mean = X.col(j).mean();
            const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / static_cast<double>(n));
            if (!(sd > 0.0)) {
                const std::string name = data.feature_names().empty()
                                             ? "column " + std::to_string(j + 1)
                                             : "'" + data.feature_names()[static_cast<std::size_t>(j)] + "'";
                throw InvalidDataError("transform: " + name + " has zero standard deviation");
            }
            rec.means[j] = mean;
            rec.sds[j] = sd;
            X.col(j) = (X.col(j).array() - mean) / sd;
        }
    }
    std::vector<std::string> names = data.feature_names();
    if (add_intercept) {
        Matrix W(n, d + 1);
        W.col(0).setOnes();
        W.rightCols(d) = X;
        X = std::move(W);
        if (!names.empty()) names.insert(names.begin(), "intercept");
    }
    return {Dataset(data.y(), std::move(X), std::move(names)), std::move(rec)};
}

Vector unmap_coefficients(const Vector& theta, const TransformRecord& record) {
    const Index d = record.means.size();
    const Index offset = record.add_intercept ? 1 : 0;
    if (theta.size() != d + offset) {
        throw DimensionError("unmap_coefficients: expected " + std::to_string(d + offset) +
                             " coefficients, got " + std::to_string(theta.size()));
    }
    if (!record.standardize) return theta;
    if (!record.add_intercept) {
        throw UnsupportedConfiguration(
            "unmap_coefficients: standardized fits need an intercept to absorb the centering");
    }
    Vector out(d + 1);
    out[0] = theta[0];
    for (Index j = 0; j < d; ++j) {
        out[j + 1] = theta[j + 1] / record.sds[j];
        out[0] -= out[j + 1] * record.means[j];
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "cell_param_name,cell_param_value,kappa,coord,bias,std,rmse,n_converged,reps,n,base_seed\n";
    for (const SweepRow& r : result.rows) {
        out << r.cell_param_name << ',' << format_double(r.cell_param_value) << ','
            << format_double(r.kappa) << ',' << r.coord << ',' << format_double(r.bias) << ','
            << format_double(r.std) << ',' << format_double(r.rmse) << ',' << r.n_converged << ','
            << r.reps << ',' << r.n << ',' << r.base_seed << '\n';
    }
}

void write_phase_csv(std::ostream& out, const std::vector<PhaseCell>& cells) {
    out << "alpha,tau,coord,optimal_kappa,rmse_at_opt\n";
    for (const PhaseCell& c : cells) {
        out << format_double(c.alpha) << ',' << format_double(c.tau) << ',' << c.coord << ','
            << format_double(c.optimal_kappa) << ',' << format_double(c.rmse_at_opt) << '\n';
    }
}

void write_moment_check_csv(std::ostream& out, const std::vector<MomentCheckRow>& rows) {
    out << "kappa,kappa_used,beta,coord,component,average_theta,n_converged\n";
    for (const MomentCheckRow& r : rows) {
        for (Index j = 0; j < r.components.size(); ++j) {
            out << format_double(r.kappa_requested) << ',' << format_double(r.kappa_used) << ','
                << beta_text(r.beta) << ',' << j << ',' << format_double(r.components[j]) << ','
                << format_double(r.average_theta[j]) << ',' << r.n_converged << '\n';
        }
    }
}

void write_bias_check_csv(std::ostream& out, const std::vector<BiasCheckRow>& rows) {
    out << "kappa,kappa_used,beta,coord,simulated_bias,simulated_bias_se,analytic_bias,abs_gap,"
           "rel_gap,n_converged\n";
    for (const BiasCheckRow& r : rows) {
        for (Index j = 0; j < r.simulated_bias.size(); ++j) {
            out << format_double(r.kappa_requested) << ',' << format_double(r.kappa_used) << ','
                << beta_text(r.beta) << ',' << j << ',' << format_double(r.simulated_bias[j]) << ','
                << format_double(r.simulated_bias_se[j]) << ',' << format_double(r.analytic_bias[j])
                << ',' << format_double(r.abs_gap[j]) << ',' << format_double(r.rel_gap[j]) << ','
                << r.n_converged << '\n';
        }
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoErrorCode::io, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError(IoErrorCode::io, "write to '" + path + "' failed");
}

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
    Json arr = Json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(number_json(v[i]));
    return arr;
}

Json matrix_json(const Matrix& m) {
    Json arr = Json::array();
    for (Index i = 0; i < m.rows(); ++i) arr.push_back(vector_json(m.row(i).transpose()));
    return arr;
}

Json fit_json(const FitResult& fit, const EstimatorSpec& spec, const Dataset& data,
              std::uint64_t seed) {
    Json j;
    j["theta_hat"] = vector_json(fit.theta_hat);
    j["std_errors"] = fit.std_errors ? vector_json(*fit.std_errors) : Json(nullptr);
    j["kappa"] = spec.kappa;
    j["c"] = spec.c;
    j["converged"] = fit.converged;
    j["moment_norm"] = number_json(fit.moment_norm);
    j["n"] = data.n();
    j["d"] = data.d();
    j["seed"] = seed;
    j["iterations"] = fit.iterations;
    j["termination"] = to_string(fit.trace.reason);
    j["covariance"] = fit.covariance ? matrix_json(*fit.covariance) : Json(nullptr);
    j["feature_names"] = data.feature_names();
    return j;
}

Json cv_json(const CvResult& cv, int k, std::uint64_t seed) {
    Json j;
    j["kappa_grid"] = cv.kappa_grid;
    Json curve = Json::array();
    for (double v : cv.e_curve) curve.push_back(number_json(v));
    j["e_curve"] = curve;
    j["selected_kappa"] = cv.selected_kappa;
    j["k"] = k;
    j["seed"] = seed;
    j["per_fold"] = matrix_json(cv.per_fold);
    Json failures = Json::array();
    for (const CvFailure& f : cv.failures) failures.push_back({{"fold", f.fold}, {"kappa", f.kappa}});
    j["failures"] = failures;
    return j;
}

}  // namespace gpml
