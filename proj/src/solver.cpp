#include "gpml/solver.hpp"

#include "gpml/moments.hpp"
#include "gpml/parallel.hpp"
#include "gpml/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gpml {

namespace {

constexpr double kRankRatio = 1e-10;
constexpr double kMinStep = 0x1.0p-30;
constexpr double kSingularCondition = 1e12;
constexpr double kBootstrapDropBudget = 0.2;

double max_norm(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

// With no positive outcome the moments only vanish as theta runs off to
// -infinity, which a tolerance test would mistake for convergence.
bool no_positive_outcome(const Dataset& data) { return (data.y().array() == 0.0).all(); }

FitResult no_root(const Vector& theta) {
    FitResult out;
    out.theta_hat = theta;
    out.trace.reason = Termination::flat_region;
    out.moment_norm = std::numeric_limits<double>::infinity();
    return out;
}

EstimatorSpec poisson_spec(const EstimatorSpec& controls) {
    EstimatorSpec s = controls;
    s.kappa = 0.0;
    s.c = 0.0;
    return s;
}

}  // namespace

void check_full_rank(const Matrix& X) {
    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double top = sv.size() ? sv[0] : 0.0;
    const double bottom = sv.size() ? sv[sv.size() - 1] : 0.0;
    if (!(top > 0.0) || bottom / top < kRankRatio) {
        const Vector direction = svd.matrixV().col(svd.matrixV().cols() - 1);
        std::ostringstream os;
        os << "design matrix is rank deficient (singular value ratio " << (top > 0 ? bottom / top : 0.0)
           << "); null-space direction [" << direction.transpose() << "]";
        throw RankDeficientError(os.str(), direction);
    }
}

double convergence_threshold(const Dataset& data, const EstimatorSpec& spec) {
    return spec.tol * std::max(1.0, data.mean_outcome());
}

FitResult fit_poisson(const Dataset& data, const EstimatorSpec& controls) {
    check_full_rank(data.X());
    const EstimatorSpec spec = poisson_spec(controls);
    const double threshold = convergence_threshold(data, spec);

    FitResult out;
    Vector theta = Vector::Zero(data.d());
    if (no_positive_outcome(data)) return no_root(theta);
    MomentEval cur = evaluate_moments(theta, data, spec);
    double norm = max_norm(cur.m);
    out.trace.reason = Termination::max_iter;

    int it = 0;
    for (; it < spec.max_iter; ++it) {
        if (norm <= threshold) {
            out.trace.reason = Termination::converged;
            break;
        }
        // Newton ascent direction: (X' diag(mu) X / n) delta = m.
        Eigen::LDLT<Matrix> ldlt(-cur.J);
        const Vector delta = ldlt.solve(cur.m);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !delta.allFinite()) {
            out.trace.reason = Termination::flat_region;
            break;
        }
        bool accepted = false;
        for (double t = 1.0; t >= kMinStep; t *= 0.5) {
            const Vector cand = theta + t * delta;
            MomentEval next;
            try {
                next = evaluate_moments(cand, data, spec);
            } catch (const NonFiniteEvaluation&) {
                continue;
            }
            const double obj = *cur.objective;
            const double next_obj = *next.objective;
            if (!std::isfinite(next_obj)) continue;
            const double next_norm = max_norm(next.m);
            // Near the optimum the objective gain drops below rounding; accept
            // a step that is flat to rounding but shrinks the moments.
            const bool increases = next_obj > obj;
            const bool flat_but_better =
                next_obj >= obj - 1e-13 * std::abs(obj) && next_norm < norm;
            if (increases || flat_but_better) {
                theta = cand;
                cur = std::move(next);
                norm = next_norm;
                out.trace.iterations.push_back({0.0, theta, norm, t});
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.trace.reason = Termination::line_search_failed;
            break;
        }
    }
    if (it == spec.max_iter && norm <= threshold) out.trace.reason = Termination::converged;

    out.theta_hat = theta;
    out.moment_norm = norm;
    out.iterations = static_cast<int>(out.trace.iterations.size());
    out.converged = out.trace.reason == Termination::converged;
    return out;
}

FitResult solve_moments(const Dataset& data, const EstimatorSpec& spec, const Vector& start) {
    if (no_positive_outcome(data)) return no_root(start);
    const double threshold = convergence_threshold(data, spec);
    FitResult out;
    Vector theta = start;
    MomentEval cur = evaluate_moments(theta, data, spec);
    double norm = max_norm(cur.m);
    out.trace.reason = Termination::max_iter;

    int it = 0;
    for (; it < spec.max_iter; ++it) {
        if (norm <= threshold) {
            out.trace.reason = Termination::converged;
            break;
        }
        Eigen::PartialPivLU<Matrix> lu(cur.J);
        const Vector delta = lu.solve(-cur.m);
        if (!(lu.rcond() > 1e-14) || !delta.allFinite()) {
            out.trace.reason = Termination::flat_region;
            break;
        }
        bool accepted = false;
        for (double t = 1.0; t >= kMinStep; t *= 0.5) {
            const Vector cand = theta + t * delta;
            MomentEval next;
            try {
                next = evaluate_moments(cand, data, spec);
            } catch (const NonFiniteEvaluation&) {
                continue;
            }
            const double next_norm = max_norm(next.m);
            if (next_norm < norm) {
                theta = cand;
                cur = std::move(next);
                norm = next_norm;
                out.trace.iterations.push_back({spec.kappa, theta, norm, t});
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.trace.reason = Termination::line_search_failed;
            break;
        }
    }
    if (it == spec.max_iter && norm <= threshold) out.trace.reason = Termination::converged;

    out.theta_hat = theta;
    out.moment_norm = norm;
    out.iterations = static_cast<int>(out.trace.iterations.size());
    out.converged = out.trace.reason == Termination::converged;
    return out;
}

FitResult fit(const Dataset& data, const EstimatorSpec& spec) {
    spec.validate();
    FitResult result = fit_poisson(data, spec);
    if (no_positive_outcome(data)) return result;
    const bool poisson_target = spec.kappa == 0.0;

    if (!poisson_target) {
        SolverTrace trace = std::move(result.trace);
        Vector theta = result.theta_hat;
        const double direction = spec.kappa > 0 ? 1.0 : -1.0;
        std::vector<double> stages;
        for (int j = 1;; ++j) {
            const double k = direction * j * spec.continuation_step;
            if (std::abs(k) >= std::abs(spec.kappa)) break;
            stages.push_back(k);
        }
        stages.push_back(spec.kappa);

        for (double k : stages) {
            EstimatorSpec stage = spec;
            stage.kappa = k;
            try {
                result = solve_moments(data, stage, theta);
            } catch (const NonFiniteEvaluation&) {
                result.converged = false;
                result.trace.iterations.clear();
                result.trace.reason = Termination::non_finite;
                break;
            }
            theta = result.theta_hat;
            trace.iterations.insert(trace.iterations.end(), result.trace.iterations.begin(),
                                    result.trace.iterations.end());
        }
        trace.reason = result.trace.reason;
        result.trace = std::move(trace);
        result.theta_hat = theta;
        result.iterations = static_cast<int>(result.trace.iterations.size());
    }

    if (result.converged) {
        try {
            Matrix cov = sandwich_covariance(data, spec, result.theta_hat);
            result.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
            result.covariance = std::move(cov);
        } catch (const Error&) {
            // Leave covariance empty; the point estimate is still valid.
        }
    }
    return result;
}

Matrix sandwich_covariance(const Dataset& data, const EstimatorSpec& spec, const Vector& theta_hat) {
    const Matrix J = -moment_jacobian(theta_hat, data, spec);
    const Matrix I = score_outer_product(theta_hat, data, spec);
    Eigen::JacobiSVD<Matrix> svd(J);
    const Vector& sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                                : std::numeric_limits<double>::infinity();
    if (!(cond < kSingularCondition)) {
        std::ostringstream os;
        os << "sandwich_covariance: Jacobian is singular (condition number " << cond << ")";
        throw SingularMatrixError(os.str(), cond);
    }
    const Matrix Jinv = J.inverse();
    Matrix cov = Jinv * I * Jinv.transpose() / static_cast<double>(data.n());
    return 0.5 * (cov + cov.transpose());
}

BootstrapResult bootstrap_se(const Dataset& data, const EstimatorSpec& spec, int B,
                             std::uint64_t seed) {
    if (B < 2) throw std::invalid_argument("bootstrap_se: B must be >= 2");
    spec.validate();
    const Index n = data.n();
    const Index d = data.d();
    std::vector<std::optional<Vector>> draws(static_cast<std::size_t>(B));

    parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
        Philox rng(seed + b);
        std::vector<Index> rows(static_cast<std::size_t>(n));
        for (auto& r : rows) r = static_cast<Index>(rng.bounded(static_cast<std::uint64_t>(n)));
        try {
            const FitResult f = fit(data.subset(rows), spec);
            if (f.converged) draws[b] = f.theta_hat;
        } catch (const Error&) {
        }
    });

    BootstrapResult out;
    out.attempted = B;
    for (const auto& d_b : draws) out.dropped += d_b ? 0 : 1;
    if (out.dropped > kBootstrapDropBudget * B) {
        throw ConvergenceError("bootstrap_se: " + std::to_string(out.dropped) + " of " +
                                   std::to_string(B) + " resamples failed to converge",
                               out.dropped, B);
    }
    const int kept = B - out.dropped;
    out.estimates.resize(kept, d);
    int row = 0;
    for (const auto& d_b : draws) {
        if (d_b) out.estimates.row(row++) = d_b->transpose();
    }
    const Eigen::RowVectorXd mean = out.estimates.colwise().mean();
    const Matrix centered = out.estimates.rowwise() - mean;
    out.se = (centered.colwise().squaredNorm() / static_cast<double>(kept - 1)).cwiseSqrt().transpose();
    return out;
}

}  // namespace gpml
