#include "gpml/asymptotics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gpml {

namespace {

constexpr Index kMinDraws = 1000;
constexpr double kConditionLimit = 1e12;
constexpr int kNewtonMaxIter = 100;

double condition_number(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M);
    const Vector& sv = svd.singularValues();
    const double lo = sv[sv.size() - 1];
    return lo > 0.0 ? sv[0] / lo : std::numeric_limits<double>::infinity();
}

Matrix checked_inverse(const Matrix& M, const char* what) {
    const double cond = condition_number(M);
    if (!(cond < kConditionLimit)) {
        std::ostringstream os;
        os << what << " is singular (condition number " << cond << ")";
        throw SingularMatrixError(os.str(), cond);
    }
    return M.inverse();
}

Vector checked_eta(const Vector& theta, const PopulationContext& ctx) {
    if (theta.size() != ctx.x_draws.cols()) {
        throw DimensionError("population: theta has length " + std::to_string(theta.size()) +
                             " but draws have " + std::to_string(ctx.x_draws.cols()) + " columns");
    }
    Vector eta = ctx.x_draws * theta;
    const double cap = overflow_threshold();
    for (Index i = 0; i < eta.size(); ++i) {
        if (!(eta[i] <= cap)) {
            throw NonFiniteEvaluation("population: exp overflow at draw " + std::to_string(i), theta);
        }
    }
    return eta;
}

// sum_i w_i x_i x_i' / M
Matrix weighted_gram(const Matrix& X, const Vector& w) {
    return X.transpose() * (X.array().colwise() * w.array()).matrix() / static_cast<double>(X.rows());
}

Matrix sandwich(const Matrix& J, const Matrix& I) {
    const Matrix Jinv = checked_inverse(J, "asymptotic J");
    const Matrix V = Jinv * I * Jinv.transpose();
    return 0.5 * (V + V.transpose());
}

}  // namespace

PopulationContext make_population_context(Vector theta0, double alpha, CensorSpec censor,
                                          Matrix x_draws) {
    if (x_draws.rows() < kMinDraws) {
        throw std::invalid_argument("population context needs at least 1000 covariate draws");
    }
    if (theta0.size() != x_draws.cols()) {
        throw DimensionError("population context: theta0 has length " +
                             std::to_string(theta0.size()) + " but draws have " +
                             std::to_string(x_draws.cols()) + " columns");
    }
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    censor.validate();

    PopulationContext ctx;
    ctx.theta0 = std::move(theta0);
    ctx.alpha = alpha;
    ctx.censor = censor;
    ctx.x_draws = std::move(x_draws);
    ctx.eta0 = checked_eta(ctx.theta0, ctx);
    ctx.mu0 = ctx.eta0.array().exp();
    ctx.p.resize(ctx.draws());
    for (Index i = 0; i < ctx.draws(); ++i) ctx.p[i] = censor_probability(ctx.mu0[i], censor);
    return ctx;
}

PopulationContext make_population_context(Vector theta0, double alpha, CensorSpec censor, Index M,
                                          std::uint64_t seed) {
    return make_population_context(std::move(theta0), alpha, censor, draw_covariates(M, seed));
}

Vector population_moments(const Vector& theta, double kappa, const PopulationContext& ctx) {
    const Vector eta = checked_eta(theta, ctx);
    Vector r(ctx.draws());
    for (Index i = 0; i < r.size(); ++i) {
        r[i] = ((1.0 - ctx.p[i]) * ctx.mu0[i] - std::exp(eta[i])) * std::exp(kappa * eta[i]);
    }
    return ctx.x_draws.transpose() * r / static_cast<double>(ctx.draws());
}

Matrix population_jacobian(const Vector& theta, double kappa, const PopulationContext& ctx) {
    const Vector eta = checked_eta(theta, ctx);
    Vector w(ctx.draws());
    for (Index i = 0; i < w.size(); ++i) {
        const double mu = std::exp(eta[i]);
        const double weight = std::exp(kappa * eta[i]);
        w[i] = weight * (kappa * ((1.0 - ctx.p[i]) * ctx.mu0[i] - mu) - mu);
    }
    return weighted_gram(ctx.x_draws, w);
}

Vector pseudo_true(double kappa, const PopulationContext& ctx) {
    SolverTrace trace;
    Vector theta = ctx.theta0;
    Vector m = population_moments(theta, kappa, ctx);
    double norm = m.lpNorm<Eigen::Infinity>();
    auto threshold = [&] { return 1e-8 * std::max(1.0, theta.lpNorm<Eigen::Infinity>()); };

    for (int it = 0; it < kNewtonMaxIter; ++it) {
        if (norm <= threshold()) return theta;
        const Vector delta = population_jacobian(theta, kappa, ctx).partialPivLu().solve(-m);
        bool accepted = false;
        for (double t = 1.0; t >= 0x1.0p-30; t *= 0.5) {
            const Vector cand = theta + t * delta;
            Vector cm;
            try {
                cm = population_moments(cand, kappa, ctx);
            } catch (const NonFiniteEvaluation&) {
                continue;
            }
            const double cn = cm.lpNorm<Eigen::Infinity>();
            if (cn < norm) {
                theta = cand;
                m = std::move(cm);
                norm = cn;
                trace.iterations.push_back({kappa, theta, norm, t});
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Already at the rounding floor of the draw average.
            if (norm <= 1e3 * threshold()) return theta;
            trace.reason = Termination::line_search_failed;
            std::ostringstream os;
            os << "pseudo_true: line search stalled at kappa " << kappa << " with |m| " << norm;
            throw PseudoTrueError(os.str(), trace);
        }
    }
    if (norm <= threshold()) return theta;
    std::ostringstream os;
    os << "pseudo_true: no convergence at kappa " << kappa << " after " << kNewtonMaxIter
       << " iterations (|m| " << norm << ")";
    throw PseudoTrueError(os.str(), trace);
}

Vector bias_approximation(double kappa, const PopulationContext& ctx) {
    const Index M = ctx.draws();
    Vector wa(M);
    Vector wb(M);
    for (Index i = 0; i < M; ++i) {
        const double e = std::exp((kappa + 1.0) * ctx.eta0[i]);
        wa[i] = (ctx.p[i] * kappa - 1.0) * e;
        wb[i] = ctx.p[i] * e;
    }
    const Matrix A = weighted_gram(ctx.x_draws, wa);
    const Vector b = ctx.x_draws.transpose() * wb / static_cast<double>(M);
    const Matrix AtA = A.transpose() * A;
    return checked_inverse(AtA, "bias approximation A'A") * (A * b);
}

Matrix asymptotic_variance_at(const Vector& theta, double kappa, const PopulationContext& ctx) {
    const Vector eta = checked_eta(theta, ctx);
    const Index M = ctx.draws();
    Vector wi(M);
    Vector wj(M);
    for (Index i = 0; i < M; ++i) {
        const double mu = std::exp(eta[i]);
        const double weight = std::exp(kappa * eta[i]);
        const double p = ctx.p[i];
        const double mu0 = ctx.mu0[i];
        const double gap = mu0 - mu;
        const double noise = std::exp(ctx.alpha * ctx.eta0[i]);
        wi[i] = weight * weight * (p * mu * mu + (1.0 - p) * (gap * gap + noise));
        wj[i] = -((1.0 - p) * mu0 - mu) * weight * kappa + weight * mu;
    }
    return sandwich(weighted_gram(ctx.x_draws, wj), weighted_gram(ctx.x_draws, wi));
}

Matrix asymptotic_variance(double kappa, const PopulationContext& ctx) {
    return asymptotic_variance_at(pseudo_true(kappa, ctx), kappa, ctx);
}

Matrix uncensored_variance(double kappa, const PopulationContext& ctx) {
    const Vector wj = ((kappa + 1.0) * ctx.eta0.array()).exp();
    const Vector wi = ((2.0 * kappa + ctx.alpha) * ctx.eta0.array()).exp();
    return sandwich(weighted_gram(ctx.x_draws, wj), weighted_gram(ctx.x_draws, wi));
}

double efficient_kappa(double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("efficient_kappa: alpha must be >= 0");
    return 1.0 - alpha;
}

double corollary_bias_1d(OneDimEstimator estimator, const PopulationContext& ctx) {
    if (ctx.x_draws.cols() != 1) {
        throw DimensionError("corollary_bias_1d requires d = 1, got d = " +
                             std::to_string(ctx.x_draws.cols()));
    }
    double num = 0.0;
    double den = 0.0;
    for (Index i = 0; i < ctx.draws(); ++i) {
        const double x = ctx.x_draws(i, 0);
        const double p = ctx.p[i];
        const double mu = ctx.mu0[i];
        if (estimator == OneDimEstimator::poisson) {
            num += x * p * mu;
            den += x * x * mu;
        } else {
            num += x * p * mu * mu;
            den += x * x * (1.0 + p) * mu * mu;
        }
    }
    if (den == 0.0) throw SingularMatrixError("corollary_bias_1d: zero denominator", 0.0);
    return -num / den;
}

}  // namespace gpml
