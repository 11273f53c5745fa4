#include <doctest.h>

#include "gpml/dgp.hpp"
#include "gpml/rng.hpp"

#include <cmath>
#include <random>

using namespace gpml;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double mean_se = 0.0;
    double var_se = 0.0;
};

// Sample mean and variance with standard errors from the fourth moment.
Moments moments(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - m.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    m.var = m2;
    m.mean_se = std::sqrt(m2 / n);
    m.var_se = std::sqrt((m4 - m2 * m2) / n);
    return m;
}

std::vector<double> uncensored_draws(double mu0, double alpha, int n, std::uint64_t seed) {
    Philox rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& y : out) y = draw_outcome(mu0, alpha, 0.0, {rng.uniform(), rng.normal()});
    return out;
}

}  // namespace

TEST_CASE("covariate law") {
    const Matrix X = draw_covariates(100000, 7);
    const double m0 = X.col(0).mean();
    const double v0 = (X.col(0).array() - m0).square().mean();
    CHECK(std::abs(m0) <= 0.02);
    CHECK(std::abs(v0 - 1.0) <= 0.02);
    CHECK(std::abs(X.col(1).mean() - 0.5) <= 0.01);
    CHECK(X.col(1).minCoeff() >= 0.0);
    CHECK(X.col(1).maxCoeff() < 1.0);
    CHECK(X == draw_covariates(100000, 7));
    CHECK(X != draw_covariates(100000, 8));
}

TEST_CASE("covariate stream layout: normal then uniform per row") {
    Philox rng(11, 0);
    const Matrix X = draw_covariates(3, 11);
    for (Index i = 0; i < 3; ++i) {
        CHECK(X(i, 0) == rng.normal());
        CHECK(X(i, 1) == rng.uniform());
    }
}

TEST_CASE("censoring probabilities") {
    CHECK(censor_probability(1.0, CensorSpec::logistic_power(1, 1)) == 0.5);
    CHECK(censor_probability(1.0, CensorSpec::double_exponential(1, 1)) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(censor_probability(1.0, CensorSpec::logistic_power(2, 2)) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(censor_probability(3.0, CensorSpec::none()) == 0.0);
    CHECK(censor_probability(1.0, CensorSpec::threshold(1.0)) == 1.0);
    CHECK(censor_probability(1.0001, CensorSpec::threshold(1.0)) == 0.0);
    CHECK_THROWS_AS(censor_probability(0.0, CensorSpec::none()), std::invalid_argument);
    CHECK_THROWS_AS(censor_probability(-1.0, CensorSpec::logistic_power(1, 1)), std::invalid_argument);
}

TEST_CASE("censor and config validation") {
    CHECK_THROWS_AS(CensorSpec::logistic_power(0, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(CensorSpec::double_exponential(1, -1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(CensorSpec::threshold(0).validate(), std::invalid_argument);
    CHECK_NOTHROW((CensorSpec{CensorFamily::none, -1, -1, -1}).validate());
    DgpConfig cfg;
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(parse_censor_family("logistic") == CensorFamily::logistic_power);
    CHECK_THROWS_AS(parse_censor_family("probit"), std::invalid_argument);
}

TEST_CASE("draw_outcome by hand") {
    CHECK(draw_outcome(5.0, 1.0, 1.0, {0.999, 3.0}) == 0.0);
    // alpha = 2: v = 1, s^2 = log 2, so with z = 0 the draw is mu0 * exp(-log(2)/2).
    const double oracle = 3.0 * std::exp(-std::log(2.0) / 2.0);
    CHECK(draw_outcome(3.0, 2.0, 0.0, {0.5, 0.0}) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(oracle == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("mean-one noise at mu0 = 1, alpha = 2") {
    const Moments m = moments(uncensored_draws(1.0, 2.0, 1000000, 99));
    CHECK(std::abs(m.mean - 1.0) <= 0.01);
    CHECK(std::abs(m.var - 1.0) <= 0.05);
}

TEST_CASE("noise has mean one and variance mu0^(alpha - 2) across a grid") {
    std::uint64_t seed = 1000;
    for (double mu0 : {0.25, 1.0, 4.0}) {
        for (double alpha : {0.0, 1.0, 2.0}) {
            std::vector<double> eta = uncensored_draws(mu0, alpha, 1000000, ++seed);
            for (double& e : eta) e /= mu0;
            const Moments m = moments(eta);
            CAPTURE(mu0);
            CAPTURE(alpha);
            CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.mean_se);
            CHECK(std::abs(m.var - std::pow(mu0, alpha - 2.0)) <= 3.0 * m.var_se);
        }
    }
}

TEST_CASE("uncensored outcome variance is mu0^alpha") {
    std::uint64_t seed = 2000;
    for (double mu0 : {0.25, 1.0, 4.0}) {
        for (double alpha : {0.5, 1.5}) {
            const Moments m = moments(uncensored_draws(mu0, alpha, 1000000, ++seed));
            CAPTURE(mu0);
            CAPTURE(alpha);
            CHECK(std::abs(m.var - std::pow(mu0, alpha)) <= 3.0 * m.var_se);
        }
    }
}

TEST_CASE("generate: mean-one ratio without censoring") {
    DgpConfig cfg;
    cfg.alpha = 2.0;
    cfg.n = 100000;
    cfg.seed = 4;
    const SimulatedSample s = generate(cfg);
    CHECK(std::abs((s.dataset.y().array() / s.latent_mean.array()).mean() - 1.0) <= 0.01);
    CHECK((s.dataset.y().array() > 0.0).all());
}

TEST_CASE("generate: zero share matches the covariate average of P") {
    DgpConfig cfg;
    cfg.alpha = 1.0;
    cfg.censor = CensorSpec::logistic_power(1.0, 2.0);
    cfg.n = 100000;
    cfg.seed = 5;
    const SimulatedSample s = generate(cfg);
    const double zeros = (s.dataset.y().array() == 0.0).cast<double>().mean();

    // Independent estimate of E_x P over 10^6 draws from a different generator.
    std::mt19937_64 eng(123);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    double acc = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        const double mu0 = std::exp(normal(eng) + unif(eng));
        acc += 1.0 / (1.0 + mu0 * mu0);
    }
    CHECK(std::abs(zeros - acc / draws) <= 0.01);
}

TEST_CASE("generate: threshold censoring is deterministic") {
    DgpConfig cfg;
    cfg.censor = CensorSpec::threshold(1.0);
    cfg.n = 5000;
    cfg.seed = 6;
    const SimulatedSample s = generate(cfg);
    for (Index i = 0; i < cfg.n; ++i) {
        if (s.latent_mean[i] <= 1.0) {
            CHECK(s.dataset.y()[i] == 0.0);
        } else {
            CHECK(s.dataset.y()[i] > 0.0);
        }
    }
}

TEST_CASE("generate: mask and zeros coincide; outcome stream layout") {
    DgpConfig cfg;
    cfg.censor = CensorSpec::logistic_power(1.0, 1.0);
    cfg.n = 2000;
    cfg.seed = 77;
    const SimulatedSample s = generate(cfg);
    for (Index i = 0; i < cfg.n; ++i) {
        CHECK(s.censored_mask[static_cast<std::size_t>(i)] == (s.dataset.y()[i] == 0.0));
    }
    Philox rng(77, 1);
    for (Index i = 0; i < 5; ++i) {
        const double u = rng.uniform();
        const double z = rng.normal();
        const double p = censor_probability(s.latent_mean[i], cfg.censor);
        CHECK(s.dataset.y()[i] == draw_outcome(s.latent_mean[i], cfg.alpha, p, {u, z}));
    }
}

TEST_CASE("sparsity decreases in tau") {
    double previous = 1.0;
    for (double tau : {0.5, 1.0, 2.0, 4.0}) {
        DgpConfig cfg;
        cfg.censor = CensorSpec::logistic_power(tau, 2.0);
        cfg.n = 50000;
        cfg.seed = 8;
        const SimulatedSample s = generate(cfg);
        const double zeros = (s.dataset.y().array() == 0.0).cast<double>().mean();
        CHECK(zeros < previous);
        previous = zeros;
    }
}

TEST_CASE("generate is a pure function of its config") {
    DgpConfig cfg;
    cfg.censor = CensorSpec::double_exponential(1.0, 2.0);
    cfg.n = 300;
    cfg.seed = 9;
    const SimulatedSample a = generate(cfg);
    const SimulatedSample b = generate(cfg);
    CHECK(a.dataset.y() == b.dataset.y());
    CHECK(a.dataset.X() == b.dataset.X());
    CHECK(a.censored_mask == b.censored_mask);
    cfg.seed = 10;
    CHECK(generate(cfg).dataset.y() != a.dataset.y());
}

TEST_CASE("generate on a supplied design") {
    DgpConfig cfg;
    cfg.theta0 = Vector::Constant(1, 0.5);
    cfg.n = 50;
    const Matrix X = Matrix::Ones(50, 1);
    const SimulatedSample s = generate(cfg, X);
    CHECK(s.dataset.d() == 1);
    CHECK(s.latent_mean[0] == doctest::Approx(std::exp(0.5)));
    CHECK_THROWS_AS(generate(cfg), DimensionError);
    CHECK_THROWS_AS(generate(cfg, Matrix::Ones(49, 1)), DimensionError);
}
