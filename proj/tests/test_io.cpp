#include <doctest.h>

#include "gpml/dgp.hpp"
#include "gpml/io.hpp"
#include "gpml/solver.hpp"
#include "test_support.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace gpml;

namespace {

Dataset parse(const std::string& text, const std::string& outcome = "y") {
    std::istringstream in(text);
    return read_csv(in, outcome);
}

IoError parse_error(const std::string& text, const std::string& outcome = "y") {
    try {
        parse(text, outcome);
    } catch (const IoError& e) {
        return e;
    }
    FAIL("expected IoError");
    return IoError(IoErrorCode::io, "unreachable");
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
    Philox rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::exp(40.0 * rng.normal()) * (rng.uniform() - 0.5);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("read_csv basics") {
    const Dataset d = parse("a,y,b\n1,2,3\n4,0,6.5\n");
    CHECK(d.n() == 2);
    CHECK(d.d() == 2);
    CHECK(d.feature_names() == std::vector<std::string>{"a", "b"});
    CHECK(d.y()[0] == 2.0);
    CHECK(d.y()[1] == 0.0);
    CHECK(d.X()(1, 1) == 6.5);
}

TEST_CASE("read_csv tolerates BOM, quotes, CRLF and blank lines") {
    const Dataset d = parse("\xEF\xBB\xBF\"y\",\"x, one\"\r\n1,\"2\"\r\n\r\n3,4\r\n");
    CHECK(d.n() == 2);
    CHECK(d.feature_names() == std::vector<std::string>{"x, one"});
    CHECK(d.X()(1, 0) == 4.0);
}

TEST_CASE("read_csv error codes") {
    CHECK(parse_error("").code() == IoErrorCode::malformed);
    CHECK(parse_error("y,x\n").code() == IoErrorCode::malformed);
    CHECK(parse_error("y\n1\n").code() == IoErrorCode::malformed);
    CHECK(parse_error("y,y,x\n1,1,1\n").code() == IoErrorCode::malformed);
    CHECK(parse_error("y,x\n\"1,2\n").code() == IoErrorCode::malformed);

    const IoError fields = parse_error("y,x\n1,2\n3\n");
    CHECK(fields.code() == IoErrorCode::malformed);
    CHECK(fields.row() == 2);

    const IoError missing = parse_error("a,b\n1,2\n", "y");
    CHECK(missing.code() == IoErrorCode::missing_column);
    CHECK(missing.column() == "y");

    const IoError text = parse_error("y,x\n1,2\n3,abc\n");
    CHECK(text.code() == IoErrorCode::non_numeric);
    CHECK(text.row() == 2);
    CHECK(text.column() == "x");

    CHECK(parse_error("y,x\n1,\n").code() == IoErrorCode::non_numeric);
    CHECK(parse_error("y,x\n1,nan\n").code() == IoErrorCode::non_numeric);
    CHECK(parse_error("y,x\n1,2x\n").code() == IoErrorCode::non_numeric);

    const IoError neg = parse_error("y,x\n1,2\n2,2\n-0.5,1\n");
    CHECK(neg.code() == IoErrorCode::negative_outcome);
    CHECK(neg.row() == 3);

    try {
        load_csv("/nonexistent/file.csv", "y");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code() == IoErrorCode::io);
    }
}

TEST_CASE("CSV round trip preserves every bit and the fit") {
    DgpConfig cfg;
    cfg.censor = CensorSpec::logistic_power(1.0, 2.0);
    cfg.n = 500;
    cfg.seed = 21;
    const Dataset original = generate(cfg).dataset;
    std::stringstream buf;
    write_csv(buf, original);
    CHECK(lines(buf.str())[0] == "y,x1,x2");
    const Dataset back = read_csv(buf, "y");
    CHECK(back.y() == original.y());
    CHECK(back.X() == original.X());
    for (double k : {-1.0, 0.0, 1.0}) {
        CHECK(fit(back, {k}).theta_hat == fit(original, {k}).theta_hat);
    }
}

TEST_CASE("file round trip with named columns") {
    const auto path = std::filesystem::temp_directory_path() / "gpml_io_roundtrip.csv";
    const Dataset named(testing::random_dataset(2, 20, 2).y(), testing::random_dataset(2, 20, 2).X(),
                        {"size", "distance"});
    save_csv(path.string(), named, "trade");
    const Dataset back = load_csv(path.string(), "trade");
    CHECK(back.feature_names() == named.feature_names());
    CHECK(back.X() == named.X());
    std::filesystem::remove(path);
}

TEST_CASE("transforms") {
    Matrix X(4, 2);
    X << 1, 10, 2, 10, 3, 30, 6, 30;
    Vector y(4);
    y << 1, 2, 3, 4;
    const Dataset d(y, X, {"a", "b"});

    SUBCASE("standardize with intercept") {
        const Transformed t = transform(d, true, true);
        CHECK(t.data.d() == 3);
        CHECK(t.data.feature_names() == std::vector<std::string>{"intercept", "a", "b"});
        CHECK((t.data.X().col(0).array() == 1.0).all());
        CHECK(t.record.means[0] == 3.0);
        CHECK(t.record.sds[0] == doctest::Approx(std::sqrt(3.5)));
        CHECK(t.record.sds[1] == 10.0);
        for (Index j = 1; j < 3; ++j) {
            CHECK(std::abs(t.data.X().col(j).mean()) <= 1e-15);
            CHECK(t.data.X().col(j).squaredNorm() / 4.0 == doctest::Approx(1.0));
        }
    }
    SUBCASE("unmapped coefficients reproduce the linear predictor") {
        for (bool intercept : {false, true}) {
            for (bool standardize : {false, true}) {
                if (standardize && !intercept) continue;
                const Transformed t = transform(d, intercept, standardize);
                const Vector theta = testing::random_theta(7, t.data.d());
                const Vector orig = unmap_coefficients(theta, t.record);
                Matrix design = X;
                if (intercept) {
                    design.resize(4, 3);
                    design << Vector::Ones(4), X;
                }
                CHECK(testing::relative_error(design * orig, t.data.X() * theta) <= 1e-12);
            }
        }
    }
    SUBCASE("standardizing without an intercept cannot be unmapped") {
        const Transformed t = transform(d, false, true);
        CHECK_THROWS_AS(unmap_coefficients(Vector::Ones(2), t.record), UnsupportedConfiguration);
    }
    SUBCASE("a constant column cannot be standardized") {
        Matrix Xc = X;
        Xc.col(1).setConstant(5.0);
        try {
            transform(Dataset(y, Xc, {"a", "flat"}), true, true);
            FAIL("expected InvalidDataError");
        } catch (const InvalidDataError& e) {
            CHECK(std::string(e.what()).find("flat") != std::string::npos);
        }
    }
}

TEST_CASE("sweep CSV schema") {
    SweepResult res;
    SweepRow r;
    r.cell_param_name = "alpha";
    r.cell_param_value = 0.5;
    r.kappa = -1.0;
    r.coord = 1;
    r.bias = 0.25;
    r.std = 0.125;
    r.rmse = std::sqrt(0.25 * 0.25 + 0.125 * 0.125);
    r.n_converged = 49;
    r.reps = 50;
    r.n = 1000;
    r.base_seed = 7;
    res.rows = {r};
    std::ostringstream out;
    write_sweep_csv(out, res);
    const auto l = lines(out.str());
    REQUIRE(l.size() == 2);
    CHECK(l[0] == "cell_param_name,cell_param_value,kappa,coord,bias,std,rmse,n_converged,reps,n,base_seed");
    CHECK(l[1] == "alpha,0.5,-1,1,0.25,0.125," + format_double(r.rmse) + ",49,50,1000,7");
}

TEST_CASE("phase, moment-check and bias-check CSV schemas") {
    PhaseCell c;
    c.alpha = 1;
    c.tau = 2;
    c.coord = 0;
    c.optimal_kappa = 0.25;
    c.rmse_at_opt = 0.03;
    std::ostringstream phase;
    write_phase_csv(phase, {c});
    CHECK(lines(phase.str()) == std::vector<std::string>{"alpha,tau,coord,optimal_kappa,rmse_at_opt",
                                                         "1,2,0,0.25,0.03"});

    MomentCheckRow m;
    m.kappa_requested = -1;
    m.kappa_used = -0.95;
    m.average_theta = Vector::Ones(2);
    m.components = Vector::Zero(2);
    m.n_converged = 10;
    std::ostringstream mom;
    write_moment_check_csv(mom, {m});
    const auto ml = lines(mom.str());
    CHECK(ml[0] == "kappa,kappa_used,beta,coord,component,average_theta,n_converged");
    CHECK(ml.size() == 3);
    CHECK(ml[1] == "-1,-0.95,none,0,0,1,10");

    BiasCheckRow b;
    b.beta = 2.0;
    b.simulated_bias = Vector::Constant(2, 0.5);
    b.simulated_bias_se = Vector::Constant(2, 0.1);
    b.analytic_bias = Vector::Constant(2, 0.25);
    b.abs_gap = Vector::Constant(2, 0.25);
    b.rel_gap = Vector::Constant(2, 0.5);
    b.n_converged = 3;
    std::ostringstream bias;
    write_bias_check_csv(bias, {b});
    const auto bl = lines(bias.str());
    CHECK(bl[0] ==
          "kappa,kappa_used,beta,coord,simulated_bias,simulated_bias_se,analytic_bias,abs_gap,rel_gap,n_converged");
    CHECK(bl[2] == "0,0,2,1,0.5,0.1,0.25,0.25,0.5,3");
}

TEST_CASE("fit JSON is schema-stable") {
    const Dataset d = testing::noiseless(draw_covariates(100, 2), Vector::Ones(2));
    const EstimatorSpec spec{0.5};
    const Json j = fit_json(fit(d, spec), spec, d, 42);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    const std::vector<std::string> expected{"theta_hat", "std_errors", "kappa", "c", "converged",
                                            "moment_norm", "n", "d", "seed", "iterations",
                                            "termination", "covariance", "feature_names"};
    CHECK(keys == expected);
    CHECK(j["converged"] == true);
    CHECK(j["seed"] == 42);
    CHECK(std::abs(j["theta_hat"][0].get<double>() - 1.0) <= 1e-6);
    CHECK(j["termination"] == "converged");

    CHECK(number_json(INFINITY).is_null());
    CHECK(number_json(std::nan("")).is_null());
    CHECK(number_json(2.5) == 2.5);
    CHECK(matrix_json(Matrix::Identity(2, 2)).dump() == "[[1.0,0.0],[0.0,1.0]]");
}

TEST_CASE("CV JSON keeps failed kappas as null") {
    CvResult cv;
    cv.kappa_grid = {-1, 0};
    cv.e_curve = {INFINITY, 2.0};
    cv.selected_kappa = 0;
    cv.per_fold = Matrix::Constant(2, 2, 1.0);
    cv.failures = {{1, -1.0}};
    const Json j = cv_json(cv, 2, 5);
    CHECK(j["e_curve"][0].is_null());
    CHECK(j["e_curve"][1] == 2.0);
    CHECK(j["selected_kappa"] == 0.0);
    CHECK(j["failures"][0]["fold"] == 1);
}

TEST_CASE("writing to an unwritable path is an io error") {
    try {
        write_text_file("/nonexistent/dir/out.txt", "x");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code() == IoErrorCode::io);
    }
}
