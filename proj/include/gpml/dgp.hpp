#pragma once

#include "gpml/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gpml {

enum class CensorFamily { none, logistic_power, double_exponential, threshold };

std::string to_string(CensorFamily f);
CensorFamily parse_censor_family(const std::string& name);

/// Probability that an observation is zeroed, as a function of mu0 = exp(theta0'x):
///   logistic_power      1 / (1 + (tau*mu0)^beta)
///   double_exponential  exp(-(tau*mu0)^beta)
///   threshold           1 if mu0 <= threshold_c, else 0
struct CensorSpec {
    CensorFamily family = CensorFamily::none;
    double tau = 1.0;
    double beta = 1.0;
    double threshold_c = 1.0;

    void validate() const;

    static CensorSpec none() { return {}; }
    static CensorSpec logistic_power(double tau, double beta) {
        return {CensorFamily::logistic_power, tau, beta, 1.0};
    }
    static CensorSpec double_exponential(double tau, double beta) {
        return {CensorFamily::double_exponential, tau, beta, 1.0};
    }
    static CensorSpec threshold(double c) { return {CensorFamily::threshold, 1.0, 1.0, c}; }
};

struct DgpConfig {
    Vector theta0 = Vector::Ones(2);
    double alpha = 1.0;
    CensorSpec censor;
    Index n = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimulatedSample {
    Dataset dataset;
    std::vector<bool> censored_mask;
    Vector latent_mean;
};

/// n x 2 design: column 0 standard normal, column 1 uniform on [0, 1].
/// Draws come from stream 0 of `seed`, row by row (normal, then uniform).
Matrix draw_covariates(Index n, std::uint64_t seed);

double censor_probability(double mu0, const CensorSpec& censor);

struct UnitDraws {
    double uniform = 0.0;
    double normal = 0.0;
};

/// Zero when draws.uniform < p_censor, otherwise mu0 * eta with eta log-normal,
/// E[eta] = 1 and Var[eta] = mu0^(alpha - 2).
double draw_outcome(double mu0, double alpha, double p_censor, UnitDraws draws);

/// Full simulation design on drawn covariates (theta0 must have length 2).
SimulatedSample generate(const DgpConfig& config);

/// Same outcome mechanism on a caller-supplied design.
SimulatedSample generate(const DgpConfig& config, const Matrix& X);

}  // namespace gpml
