#include "cli.hpp"

#include "gpml/asymptotics.hpp"
#include "gpml/dgp.hpp"
#include "gpml/experiments.hpp"
#include "gpml/io.hpp"
#include "gpml/selection.hpp"
#include "gpml/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gpml::cli {

namespace {

// Raised for flag values that parse but fail validation.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

double parse_real(const std::string& text, const std::string& flag) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError(flag + ": '" + text + "' is not a number");
    }
}

/// "a,b,c" or "lo:hi:step".
std::vector<double> parse_values(const std::string& text, const std::string& flag) {
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3) throw UsageError(flag + ": ranges are written lo:hi:step");
        try {
            return kappa_range(parse_real(parts[0], flag), parse_real(parts[1], flag),
                               parse_real(parts[2], flag));
        } catch (const UsageError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw UsageError(flag + ": " + e.what());
        }
    }
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(parse_real(part, flag));
    if (out.empty()) throw UsageError(flag + ": empty value list");
    return out;
}

/// Like parse_values but "none" means an uncensored row.
std::vector<std::optional<double>> parse_betas(const std::string& text) {
    std::vector<std::optional<double>> out;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) {
        if (part == "none") {
            out.emplace_back(std::nullopt);
        } else {
            out.emplace_back(parse_real(part, "--betas"));
        }
    }
    if (out.empty()) throw UsageError("--betas: empty value list");
    return out;
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

struct Output {
    std::string path;

    void emit(std::ostream& out, const std::string& text) const {
        if (path.empty()) {
            out << text;
        } else {
            write_text_file(path, text);
        }
    }
};

struct EstimatorFlags {
    double kappa = 0.0;
    double c = 0.0;
    double tol = 1e-8;
    int max_iter = 200;
    double continuation_step = 0.1;

    void add(CLI::App* app, bool with_kappa) {
        if (with_kappa) app->add_option("--kappa", kappa, "Family index in [-1, 1]")->capture_default_str();
        app->add_option("--c", c, "Weight shift c >= 0")->capture_default_str();
        app->add_option("--tol", tol, "Tolerance on the max-norm of the moments")->capture_default_str();
        app->add_option("--max-iter", max_iter, "Newton iterations per stage")->capture_default_str();
        app->add_option("--continuation-step", continuation_step, "Kappa continuation step")
            ->capture_default_str();
    }

    EstimatorSpec spec() const {
        EstimatorSpec s;
        s.kappa = kappa;
        s.c = c;
        s.tol = tol;
        s.max_iter = max_iter;
        s.continuation_step = continuation_step;
        try {
            s.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return s;
    }
};

struct DataFlags {
    std::string path;
    std::string outcome = "y";
    bool add_intercept = false;
    bool standardize = false;

    void add(CLI::App* app) {
        app->add_option("--data", path, "Input CSV with a header row")->required();
        app->add_option("--outcome", outcome, "Outcome column name")->capture_default_str();
        app->add_flag("--add-intercept", add_intercept, "Prepend a constant-1 column");
        app->add_flag("--standardize", standardize, "Standardize covariates (n-denominator sd)");
    }
};

struct DgpFlags {
    double alpha = 1.0;
    std::string censor = "none";
    double tau = 1.0;
    double beta = 2.0;
    double threshold_c = 1.0;
    std::string theta0 = "1,1";
    long n = 1000;

    void add(CLI::App* app, bool with_n = true) {
        app->add_option("--alpha", alpha, "Heteroskedasticity exponent")->capture_default_str();
        app->add_option("--censor", censor, "none | logistic_power | double_exponential | threshold")
            ->capture_default_str();
        app->add_option("--tau", tau, "Censoring scale")->capture_default_str();
        app->add_option("--beta", beta, "Censoring power")->capture_default_str();
        app->add_option("--threshold-c", threshold_c, "Threshold censoring level")->capture_default_str();
        app->add_option("--theta0", theta0, "True parameter, comma separated")->capture_default_str();
        if (with_n) app->add_option("--n", n, "Sample size")->capture_default_str();
    }

    CensorSpec censor_spec() const {
        try {
            CensorSpec c{parse_censor_family(censor), tau, beta, threshold_c};
            c.validate();
            return c;
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }

    DgpConfig config(std::uint64_t seed) const {
        DgpConfig cfg;
        cfg.theta0 = to_vector(parse_values(theta0, "--theta0"));
        cfg.alpha = alpha;
        cfg.censor = censor_spec();
        cfg.n = n;
        cfg.seed = seed;
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        if (cfg.theta0.size() != 2) throw UsageError("--theta0: the simulation design has two covariates");
        return cfg;
    }
};

Json dgp_json(const DgpConfig& cfg) {
    Json j;
    j["theta0"] = vector_json(cfg.theta0);
    j["alpha"] = cfg.alpha;
    j["censor"] = to_string(cfg.censor.family);
    j["tau"] = cfg.censor.tau;
    j["beta"] = cfg.censor.beta;
    j["threshold_c"] = cfg.censor.threshold_c;
    return j;
}

Json beta_list_json(const std::vector<std::optional<double>>& betas) {
    Json arr = Json::array();
    for (const auto& b : betas) arr.push_back(b ? Json(*b) : Json("none"));
    return arr;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized pseudo-maximum-likelihood estimation and simulation"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    Output output;
    std::function<void()> action;

    auto common = [&](CLI::App* sub, bool seed_required) {
        auto* opt = sub->add_option("--seed", seed, "Random seed");
        if (seed_required) opt->required();
        sub->add_option("--out", output.path, "Output path (default: standard output)");
    };

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator to a CSV dataset");
    DataFlags fit_data;
    EstimatorFlags fit_est;
    int bootstrap = 0;
    fit_data.add(fit_cmd);
    fit_est.add(fit_cmd, true);
    fit_cmd->add_option("--bootstrap", bootstrap, "Bootstrap resamples for standard errors (0 = off)");
    common(fit_cmd, false);
    fit_cmd->callback([&] {
        action = [&] {
            const EstimatorSpec spec = fit_est.spec();
            if (bootstrap == 1 || bootstrap < 0) throw UsageError("--bootstrap: need 0 or at least 2 resamples");
            const Dataset raw = load_csv(fit_data.path, fit_data.outcome);
            const Transformed tr = transform(raw, fit_data.add_intercept, fit_data.standardize);
            const FitResult f = fit(tr.data, spec);
            Json j = fit_json(f, spec, tr.data, seed);
            j["add_intercept"] = fit_data.add_intercept;
            j["standardize"] = fit_data.standardize;
            if (fit_data.standardize) {
                j["standardization"] = {{"means", vector_json(tr.record.means)},
                                        {"sds", vector_json(tr.record.sds)}};
                if (fit_data.add_intercept) {
                    j["theta_original_scale"] = vector_json(unmap_coefficients(f.theta_hat, tr.record));
                }
            }
            if (bootstrap >= 2) {
                const BootstrapResult b = bootstrap_se(tr.data, spec, bootstrap, seed);
                j["bootstrap"] = {{"B", bootstrap},
                                  {"se", vector_json(b.se)},
                                  {"dropped", b.dropped}};
            }
            output.emit(out, j.dump(2) + "\n");
        };
    });

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validate kappa on a CSV dataset");
    DataFlags cv_data;
    EstimatorFlags cv_est;
    std::string grid_text = "-1:1:0.05";
    int k = 5;
    int holdout = 0;
    double split = 0.8;
    cv_data.add(cv_cmd);
    cv_est.add(cv_cmd, false);
    cv_cmd->add_option("--grid", grid_text, "Kappa grid: lo:hi:step or a comma list")->capture_default_str();
    cv_cmd->add_option("--k", k, "Number of folds")->capture_default_str();
    cv_cmd->add_option("--holdout", holdout, "Random train/test splits evaluated at the selected kappa");
    cv_cmd->add_option("--split", split, "Training share of each holdout split")->capture_default_str();
    common(cv_cmd, false);
    cv_cmd->callback([&] {
        action = [&] {
            const EstimatorSpec controls = cv_est.spec();
            const std::vector<double> grid = parse_values(grid_text, "--grid");
            const Dataset raw = load_csv(cv_data.path, cv_data.outcome);
            const Transformed tr = transform(raw, cv_data.add_intercept, cv_data.standardize);
            CvResult cv;
            try {
                cv = cross_validate(tr.data, grid, k, seed, controls);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            Json j = cv_json(cv, k, seed);
            if (holdout > 0) {
                EstimatorSpec spec = controls;
                spec.kappa = cv.selected_kappa;
                const HoldoutResult h = holdout_rmse(tr.data, spec, split, seed, holdout);
                j["holdout"] = {{"kappa", spec.kappa},
                                {"repeats", holdout},
                                {"split", split},
                                {"mean_rmse", h.mean_rmse},
                                {"sd_rmse", h.sd_rmse},
                                {"skipped", h.skipped}};
            }
            output.emit(out, j.dump(2) + "\n");
        };
    });

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Draw one dataset from the simulation design");
    DgpFlags sim_dgp;
    sim_dgp.add(sim_cmd);
    common(sim_cmd, true);
    sim_cmd->callback([&] {
        action = [&] {
            const SimulatedSample s = generate(sim_dgp.config(seed));
            const Dataset named(s.dataset.y(), s.dataset.X(), {"x1", "x2"});
            std::ostringstream os;
            write_csv(os, named);
            output.emit(out, os.str());
        };
    });

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over one design parameter");
    DgpFlags sweep_dgp;
    EstimatorFlags sweep_est;
    std::string axis = "alpha";
    std::string values;
    std::string kappas = "-1,-0.5,0,0.5,1";
    int reps = 200;
    sweep_dgp.add(sweep_cmd);
    sweep_est.add(sweep_cmd, false);
    sweep_cmd->add_option("--axis", axis, "alpha | tau | beta | kappa")->capture_default_str();
    sweep_cmd->add_option("--values", values, "Cell values: lo:hi:step or a comma list")->required();
    sweep_cmd->add_option("--kappas", kappas, "Kappas fitted in each cell")->capture_default_str();
    sweep_cmd->add_option("--reps", reps, "Replications per cell")->capture_default_str();
    common(sweep_cmd, true);
    sweep_cmd->callback([&] {
        action = [&] {
            ReplicationPlan plan;
            plan.dgp = sweep_dgp.config(seed);
            try {
                plan.axis = parse_sweep_axis(axis);
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("--axis: ") + e.what());
            }
            plan.values = parse_values(values, "--values");
            plan.kappa_set = parse_values(kappas, "--kappas");
            plan.reps = reps;
            plan.n = sweep_dgp.n;
            plan.base_seed = seed;
            plan.controls = sweep_est.spec();
            try {
                plan.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const SweepResult result = run_sweep(plan);
            for (const SweepRow& r : result.rows) {
                if (r.warning && r.coord == 0) {
                    err << "warning: " << r.cell_param_name << " = " << format_double(r.cell_param_value)
                        << ", kappa = " << format_double(r.kappa) << ": only " << r.n_converged << " of "
                        << r.reps << " fits converged\n";
                }
            }
            std::ostringstream os;
            write_sweep_csv(os, result);
            output.emit(out, os.str());
            if (!output.path.empty()) {
                Json meta;
                meta["command"] = "sweep";
                meta["created_utc"] = utc_timestamp();
                meta["axis"] = to_string(plan.axis);
                meta["values"] = plan.values;
                meta["kappa_set"] = plan.kappa_set;
                meta["reps"] = plan.reps;
                meta["n"] = plan.n;
                meta["base_seed"] = plan.base_seed;
                meta["replication_seed_rule"] = "base_seed xor replication index";
                meta["dgp"] = dgp_json(plan.dgp);
                Json warnings = Json::array();
                for (const SweepRow& r : result.rows) {
                    if (r.warning && r.coord == 0) {
                        warnings.push_back({{"cell_param_value", r.cell_param_value},
                                            {"kappa", r.kappa},
                                            {"n_converged", r.n_converged}});
                    }
                }
                meta["non_convergence_warnings"] = warnings;
                write_text_file(output.path + ".meta.json", meta.dump(2) + "\n");
            }
        };
    });

    // phase
    auto* phase_cmd = app.add_subcommand("phase", "RMSE-optimal kappa over an (alpha, tau) grid");
    DgpFlags phase_dgp;
    EstimatorFlags phase_est;
    std::string alphas = "0,0.5,1,1.5,2";
    std::string taus = "0.5,1,2,4,8";
    std::string phase_grid = "-1:1:0.25";
    int phase_reps = 200;
    phase_dgp.censor = "logistic_power";
    phase_dgp.add(phase_cmd);
    phase_est.add(phase_cmd, false);
    phase_cmd->add_option("--alphas", alphas, "Alpha values")->capture_default_str();
    phase_cmd->add_option("--taus", taus, "Tau values")->capture_default_str();
    phase_cmd->add_option("--grid", phase_grid, "Kappa grid")->capture_default_str();
    phase_cmd->add_option("--reps", phase_reps, "Replications per cell")->capture_default_str();
    common(phase_cmd, true);
    phase_cmd->callback([&] {
        action = [&] {
            const DgpConfig cfg = phase_dgp.config(seed);
            if (phase_reps < 2) throw UsageError("--reps: need at least 2 replications");
            const auto cells = run_phase_grid(cfg, parse_values(alphas, "--alphas"),
                                              parse_values(taus, "--taus"),
                                              parse_values(phase_grid, "--grid"), phase_reps,
                                              phase_dgp.n, seed, phase_est.spec());
            std::ostringstream os;
            write_phase_csv(os, cells);
            output.emit(out, os.str());
        };
    });

    // moment-check and bias-check share their flags.
    struct CheckFlags {
        std::string kappas = "-1,0,1";
        std::string betas = "none,0.25,1,5,9";
        double alpha = 1.0;
        double tau = 1.0;
        int reps = 200;
        long n = 1000;
        long draws = 100000;
        bool substitute_gamma = false;

        void add(CLI::App* app) {
            app->add_option("--kappas", kappas, "Kappas to fit")->capture_default_str();
            app->add_option("--betas", betas, "Censoring powers; 'none' for an uncensored row")
                ->capture_default_str();
            app->add_option("--alpha", alpha, "Heteroskedasticity exponent")->capture_default_str();
            app->add_option("--tau", tau, "Censoring scale")->capture_default_str();
            app->add_option("--reps", reps, "Replications per row")->capture_default_str();
            app->add_option("--n", n, "Sample size")->capture_default_str();
            app->add_option("--draws", draws, "Covariate draws for population integrals")
                ->capture_default_str();
            app->add_flag("--substitute-gamma", substitute_gamma, "Fit kappa = -0.95 in place of -1");
        }

        CheckConfig config(std::uint64_t s) const {
            if (reps < 2 || n < 2 || draws < 1000 || !(alpha >= 0.0) || !(tau > 0.0)) {
                throw UsageError("check: need reps >= 2, n >= 2, draws >= 1000, alpha >= 0, tau > 0");
            }
            CheckConfig c;
            c.alpha = alpha;
            c.tau = tau;
            c.reps = reps;
            c.n = n;
            c.base_seed = s;
            c.population_draws = draws;
            c.substitute_gamma = substitute_gamma;
            return c;
        }
    };

    auto* moment_cmd = app.add_subcommand("moment-check", "Population moments at the average fit");
    CheckFlags moment_flags;
    moment_flags.add(moment_cmd);
    common(moment_cmd, false);
    moment_cmd->callback([&] {
        action = [&] {
            const auto rows = run_moment_check(parse_values(moment_flags.kappas, "--kappas"),
                                               parse_betas(moment_flags.betas),
                                               moment_flags.config(seed));
            std::ostringstream os;
            write_moment_check_csv(os, rows);
            output.emit(out, os.str());
        };
    });

    auto* bias_cmd = app.add_subcommand("bias-check", "Simulated bias against the bias approximation");
    CheckFlags bias_flags;
    bias_flags.betas = "none,1,2,5";
    bias_flags.add(bias_cmd);
    common(bias_cmd, false);
    bias_cmd->callback([&] {
        action = [&] {
            const auto rows = run_bias_check(parse_values(bias_flags.kappas, "--kappas"),
                                             parse_betas(bias_flags.betas), bias_flags.config(seed));
            std::ostringstream os;
            write_bias_check_csv(os, rows);
            output.emit(out, os.str());
        };
    });

    // asymptotics
    auto* asym_cmd = app.add_subcommand("asymptotics", "Pseudo-true parameter, bias and variance");
    DgpFlags asym_dgp;
    double asym_kappa = 0.0;
    long asym_draws = kDefaultPopulationDraws;
    asym_dgp.add(asym_cmd, false);
    asym_cmd->add_option("--kappa", asym_kappa, "Family index in [-1, 1]")->capture_default_str();
    asym_cmd->add_option("--draws", asym_draws, "Covariate draws for population integrals")
        ->capture_default_str();
    common(asym_cmd, false);
    asym_cmd->callback([&] {
        action = [&] {
            if (!(asym_kappa >= -1.0 && asym_kappa <= 1.0)) throw UsageError("--kappa must be in [-1, 1]");
            if (asym_draws < 1000) throw UsageError("--draws must be >= 1000");
            const DgpConfig cfg = asym_dgp.config(seed);
            const std::uint64_t draw_seed = seed == 0 ? kDefaultPopulationSeed : seed;
            const PopulationContext ctx =
                make_population_context(cfg.theta0, cfg.alpha, cfg.censor, asym_draws, draw_seed);
            const Vector pt = pseudo_true(asym_kappa, ctx);
            Json j;
            j["kappa"] = asym_kappa;
            j["dgp"] = dgp_json(cfg);
            j["draws"] = asym_draws;
            j["draw_seed"] = draw_seed;
            j["pseudo_true"] = vector_json(pt);
            j["pseudo_true_bias"] = vector_json(pt - cfg.theta0);
            j["bias_approximation"] = vector_json(bias_approximation(asym_kappa, ctx));
            j["asymptotic_variance"] = matrix_json(asymptotic_variance_at(pt, asym_kappa, ctx));
            j["efficient_kappa_uncensored"] = efficient_kappa(cfg.alpha);
            output.emit(out, j.dump(2) + "\n");
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace gpml::cli
