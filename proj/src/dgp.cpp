#include "gpml/dgp.hpp"

#include "gpml/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gpml {

namespace {

// Stream ids within one seed.
constexpr std::uint64_t kCovariateStream = 0;
constexpr std::uint64_t kOutcomeStream = 1;

}  // namespace

std::string to_string(CensorFamily f) {
    switch (f) {
        case CensorFamily::none: return "none";
        case CensorFamily::logistic_power: return "logistic_power";
        case CensorFamily::double_exponential: return "double_exponential";
        case CensorFamily::threshold: return "threshold";
    }
    return "unknown";
}

CensorFamily parse_censor_family(const std::string& name) {
    if (name == "none") return CensorFamily::none;
    if (name == "logistic_power" || name == "logistic") return CensorFamily::logistic_power;
    if (name == "double_exponential") return CensorFamily::double_exponential;
    if (name == "threshold") return CensorFamily::threshold;
    throw std::invalid_argument("unknown censoring family '" + name + "'");
}

void CensorSpec::validate() const {
    switch (family) {
        case CensorFamily::none: return;
        case CensorFamily::logistic_power:
        case CensorFamily::double_exponential:
            if (!(tau > 0.0) || !(beta > 0.0)) {
                throw std::invalid_argument("censoring requires tau > 0 and beta > 0");
            }
            return;
        case CensorFamily::threshold:
            if (!(threshold_c > 0.0)) {
                throw std::invalid_argument("threshold censoring requires c > 0");
            }
            return;
    }
}

void DgpConfig::validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (theta0.size() < 1 || !theta0.allFinite()) {
        throw std::invalid_argument("theta0 must be a finite, non-empty vector");
    }
    censor.validate();
}

Matrix draw_covariates(Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("draw_covariates: n must be >= 1");
    Philox rng(seed, kCovariateStream);
    Matrix X(n, 2);
    for (Index i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = rng.uniform();
    }
    return X;
}

double censor_probability(double mu0, const CensorSpec& censor) {
    if (!(mu0 > 0.0)) {
        throw std::invalid_argument("censor_probability: mu0 must be > 0");
    }
    switch (censor.family) {
        case CensorFamily::none: return 0.0;
        case CensorFamily::logistic_power:
            return 1.0 / (1.0 + std::pow(censor.tau * mu0, censor.beta));
        case CensorFamily::double_exponential:
            return std::exp(-std::pow(censor.tau * mu0, censor.beta));
        case CensorFamily::threshold: return mu0 <= censor.threshold_c ? 1.0 : 0.0;
    }
    return 0.0;
}

double draw_outcome(double mu0, double alpha, double p_censor, UnitDraws draws) {
    if (draws.uniform < p_censor) return 0.0;
    const double v = std::pow(mu0, alpha - 2.0);
    const double s2 = std::log1p(v);
    const double log_eta = -0.5 * s2 + std::sqrt(s2) * draws.normal;
    return mu0 * std::exp(log_eta);
}

SimulatedSample generate(const DgpConfig& config, const Matrix& X) {
    config.validate();
    if (X.rows() != config.n || X.cols() != config.theta0.size()) {
        throw DimensionError("generate: design must be n x length(theta0)");
    }
    Philox rng(config.seed, kOutcomeStream);
    const Vector mu0 = (X * config.theta0).array().exp();
    Vector y(config.n);
    std::vector<bool> mask(static_cast<std::size_t>(config.n));
    for (Index i = 0; i < config.n; ++i) {
        const double p = censor_probability(mu0[i], config.censor);
        UnitDraws draws;
        draws.uniform = rng.uniform();
        draws.normal = rng.normal();
        y[i] = draw_outcome(mu0[i], config.alpha, p, draws);
        mask[static_cast<std::size_t>(i)] = draws.uniform < p;
    }
    return SimulatedSample{Dataset(std::move(y), X), std::move(mask), mu0};
}

SimulatedSample generate(const DgpConfig& config) {
    config.validate();
    if (config.theta0.size() != 2) {
        throw DimensionError("generate: the default design has two covariates; supply X for d != 2");
    }
    return generate(config, draw_covariates(config.n, config.seed));
}

}  // namespace gpml
