#include "gpml/moments.hpp"

#include <cmath>

namespace gpml {

namespace {

constexpr double kEndpointTol = 1e-10;

enum class ObjectiveForm { poisson, gamma, nls, general };

ObjectiveForm objective_form(double kappa) {
    if (std::abs(kappa) < kEndpointTol) return ObjectiveForm::poisson;
    if (std::abs(kappa + 1.0) < kEndpointTol) return ObjectiveForm::gamma;
    if (std::abs(kappa - 1.0) < kEndpointTol) return ObjectiveForm::nls;
    return ObjectiveForm::general;
}

double objective_term(ObjectiveForm form, double kappa, double y, double eta, double mu, double w) {
    switch (form) {
        case ObjectiveForm::poisson: return y * eta - mu;
        case ObjectiveForm::gamma: return -eta - y * w;
        case ObjectiveForm::nls: return -0.5 * (y - mu) * (y - mu);
        case ObjectiveForm::general:
            return y * w / kappa - mu * w / (kappa + 1.0);
    }
    return 0.0;
}

// Per-observation quantities shared by moments, Jacobian, objective and scores.
struct Pointwise {
    Vector eta;
    Vector mu;
    Vector weight;    // (c + mu)^kappa
    Vector score;     // (y - mu) * w
    Vector jac_diag;  // d score / d eta
};

Pointwise pointwise(const Vector& theta, const Dataset& data, const EstimatorSpec& spec,
                    bool with_jacobian) {
    Pointwise p;
    p.eta = linear_predictor(theta, data.X());
    if (!theta.allFinite()) throw NonFiniteEvaluation("moments: theta is not finite", theta);
    const double cap = overflow_threshold();
    const Index n = data.n();
    const auto& y = data.y();
    const double kappa = spec.kappa;
    const double c = spec.c;
    p.mu.resize(n);
    p.weight.resize(n);
    p.score.resize(n);
    if (with_jacobian) p.jac_diag.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double eta = p.eta[i];
        if (eta > cap) {
            throw NonFiniteEvaluation("moments: exp(eta) overflow at row " + std::to_string(i),
                                      theta);
        }
        const double mu = std::exp(eta);
        const double r = y[i] - mu;
        p.mu[i] = mu;
        if (c == 0.0) {
            const double w = kappa == 0.0 ? 1.0 : std::exp(kappa * eta);
            p.weight[i] = w;
            p.score[i] = r * w;
            if (with_jacobian) p.jac_diag[i] = w * (kappa * r - mu);
        } else {
            const double base = c + mu;
            const double w = std::pow(base, kappa);
            p.weight[i] = w;
            p.score[i] = r * w;
            if (with_jacobian) {
                p.jac_diag[i] = std::pow(base, kappa - 1.0) * (kappa * mu * r - mu * base);
            }
        }
    }
    return p;
}

}  // namespace

double moment_weight(double mu, double kappa, double c) {
    if (c == 0.0) return kappa == 0.0 ? 1.0 : std::exp(kappa * std::log(mu));
    return std::pow(c + mu, kappa);
}

MomentEval evaluate_moments(const Vector& theta, const Dataset& data, const EstimatorSpec& spec,
                            bool with_jacobian) {
    const Pointwise p = pointwise(theta, data, spec, with_jacobian);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    MomentEval out;
    out.m = data.X().transpose() * p.score * inv_n;
    if (!out.m.allFinite()) {
        throw NonFiniteEvaluation("moments: moment vector is not finite", theta);
    }
    if (with_jacobian) {
        const Matrix weighted = data.X().array().colwise() * p.jac_diag.array();
        out.J = data.X().transpose() * weighted * inv_n;
        out.J = 0.5 * (out.J + out.J.transpose()).eval();
        if (!out.J.allFinite()) {
            throw NonFiniteEvaluation("moments: Jacobian is not finite", theta);
        }
    }
    if (spec.c == 0.0) {
        const ObjectiveForm form = objective_form(spec.kappa);
        const auto& y = data.y();
        double total = 0.0;
        for (Index i = 0; i < data.n(); ++i) {
            total += objective_term(form, spec.kappa, y[i], p.eta[i], p.mu[i], p.weight[i]);
        }
        out.objective = total;
    }
    return out;
}

Vector moment_vector(const Vector& theta, const Dataset& data, const EstimatorSpec& spec) {
    return evaluate_moments(theta, data, spec, false).m;
}

Matrix moment_jacobian(const Vector& theta, const Dataset& data, const EstimatorSpec& spec) {
    return evaluate_moments(theta, data, spec, true).J;
}

Matrix score_outer_product(const Vector& theta, const Dataset& data, const EstimatorSpec& spec) {
    const Pointwise p = pointwise(theta, data, spec, false);
    const Matrix scaled = data.X().array().colwise() * p.score.array();
    Matrix I = scaled.transpose() * scaled / static_cast<double>(data.n());
    return 0.5 * (I + I.transpose());
}

ObjectiveEval objective_and_gradient(const Vector& theta, const Dataset& data,
                                     const EstimatorSpec& spec) {
    if (spec.c != 0.0) {
        throw UnsupportedConfiguration(
            "objective_and_gradient: the objective family is only defined for c = 0");
    }
    const Vector eta = linear_predictor(theta, data.X());
    const double cap = overflow_threshold();
    const ObjectiveForm form = objective_form(spec.kappa);
    const double kappa = spec.kappa;
    const auto& y = data.y();
    Vector dterm(data.n());
    double total = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        if (eta[i] > cap) {
            throw NonFiniteEvaluation("objective: exp(eta) overflow at row " + std::to_string(i),
                                      theta);
        }
        const double mu = std::exp(eta[i]);
        // Derivative of each closed form with respect to eta.
        switch (form) {
            case ObjectiveForm::poisson: dterm[i] = y[i] - mu; break;
            case ObjectiveForm::gamma: {
                const double w = std::exp(-eta[i]);
                dterm[i] = y[i] * w - 1.0;
                total += objective_term(form, kappa, y[i], eta[i], mu, w);
                continue;
            }
            case ObjectiveForm::nls: dterm[i] = (y[i] - mu) * mu; break;
            case ObjectiveForm::general: {
                const double w = std::exp(kappa * eta[i]);
                dterm[i] = y[i] * w - mu * w;
                total += objective_term(form, kappa, y[i], eta[i], mu, w);
                continue;
            }
        }
        total += objective_term(form, kappa, y[i], eta[i], mu, 1.0);
    }
    ObjectiveEval out;
    out.value = total;
    out.gradient = data.X().transpose() * dterm;
    if (!std::isfinite(out.value) || !out.gradient.allFinite()) {
        throw NonFiniteEvaluation("objective: non-finite value", theta);
    }
    return out;
}

ObjectiveEval objective_and_gradient(const Vector& theta, const Dataset& data, double kappa) {
    EstimatorSpec spec;
    spec.kappa = kappa;
    return objective_and_gradient(theta, data, spec);
}

}  // namespace gpml
