#include "hsrobust/cli.hpp"

#include "hsrobust/comparators.hpp"
#include "hsrobust/datasets.hpp"
#include "hsrobust/errors.hpp"
#include "hsrobust/hscore.hpp"
#include "hsrobust/report_json.hpp"
#include "hsrobust/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace hsrobust::cli {

namespace {

using nlohmann::json;

struct DataArgs {
    std::string data;
    std::string model;  ///< empty: regression for boston:<csv>, normal otherwise
    std::string column;
    std::string response;
    bool standardize_response = false;
};

void add_data_options(CLI::App* sub, DataArgs& a, bool with_model) {
    sub->add_option("--data", a.data, "newcomb | boston:<csv> | <csv>")->required();
    if (with_model) {
        sub->add_option("--model", a.model, "normal | regression (default: regression for boston:<csv>)")
            ->check(CLI::IsMember({"normal", "regression"}));
    }
    sub->add_option("--column", a.column, "sample column of a CSV for the normal model (default: first)");
    sub->add_option("--response", a.response, "response column of a regression CSV (default: last)");
    sub->add_flag("--standardize-response", a.standardize_response, "standardize medv when reading boston:<csv>");
}

void resolve_model(DataArgs& a) {
    if (a.model.empty()) a.model = a.data.rfind("boston:", 0) == 0 ? "regression" : "normal";
}

Dataset load(const DataArgs& a) {
    const bool regression = a.model == "regression";
    if (a.data == "newcomb") {
        if (regression) throw InvalidConfiguration("newcomb has no covariates; use --model normal");
        return load_newcomb();
    }
    if (a.data.rfind("boston:", 0) == 0) {
        if (!regression) throw InvalidConfiguration("boston data needs --model regression");
        BostonOptions bo;
        bo.standardize_response = a.standardize_response;
        return load_boston(a.data.substr(7), bo);
    }
    return regression ? load_csv_regression(a.data, a.response) : load_csv_sample(a.data, a.column);
}

DivergenceKind resolve_kind(const std::string& name, const std::string& model) {
    if (name.empty()) return model == "regression" ? DivergenceKind::GammaDiv : DivergenceKind::DPD;
    try {
        return parse_divergence_kind(name);
    } catch (const InvalidArgument& e) {
        throw InvalidConfiguration(e.what());
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw InvalidConfiguration("cannot write '" + path + "'");
    f << content;
    if (!f) throw InvalidConfiguration("failed writing '" + path + "'");
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

GammaGrid parse_grid(const std::string& spec) {
    try {
        return GammaGrid::parse(spec);
    } catch (const InvalidArgument& e) {
        throw InvalidConfiguration(e.what());
    }
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
    DataArgs data;
    std::string divergence;
    double gamma = 0.1;
    double lambda = 0.0;
    std::string variance;
    double level = 0.95;
};

json wald_block(const FitResult& fit, const Eigen::MatrixXd& vcov, double level) {
    std::vector<std::string> names;
    if (fit.is_regression()) {
        names.push_back("intercept");
        for (Eigen::Index k = 0; k < fit.regression().beta.size(); ++k) names.push_back("beta" + std::to_string(k + 1));
        names.push_back("sigma2");
    } else {
        names = {"mu", "sigma2"};
    }
    json out = json::object();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto ci = wald_interval(fit, vcov, static_cast<Eigen::Index>(k), level);
        out[names[k]] = {number(ci.lower), number(ci.upper)};
    }
    return out;
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
    if (!std::isfinite(a.gamma) || a.gamma < 0.0) throw InvalidConfiguration("--gamma must be finite and >= 0");
    if (!std::isfinite(a.lambda) || a.lambda < 0.0) throw InvalidConfiguration("--lambda must be finite and >= 0");
    const auto kind = resolve_kind(a.divergence, a.data.model);
    const auto ds = load(a.data);
    const auto data = ds.observations();
    FitResult fit;
    if (a.data.model == "regression") {
        if (kind != DivergenceKind::GammaDiv) throw InvalidConfiguration("regression supports --divergence gamma");
        fit = fit_regression_at(data, a.gamma, a.lambda);
    } else {
        if (a.lambda != 0.0) throw InvalidConfiguration("--lambda applies to --model regression");
        fit = fit_normal_at(data, kind, a.gamma);
    }
    json j = to_json(fit, ds.feature_names);
    j["n"] = data.size();
    j["data"] = ds.name;

    const bool smooth = a.lambda == 0.0;
    const bool model_ok = !fit.is_regression() && (kind == DivergenceKind::DPD || a.gamma == 0.0);
    std::string which = a.variance.empty() ? (model_ok ? "model" : "sandwich") : a.variance;
    if (which == "model" && !model_ok) {
        throw InvalidConfiguration("--variance model is available for normal-model dpd fits");
    }
    j["vcov"] = nullptr;
    if (smooth) {
        try {
            const auto vcov = estimate_vcov(data, fit, parse_variance_estimator(which));
            j["variance"] = which;
            j["vcov"] = to_json(vcov);
            j["level"] = a.level;
            j["wald"] = wald_block(fit, vcov, a.level);
        } catch (const SingularInformation& e) {
            err << "warning: " << e.what() << "; vcov omitted\n";
        }
    }
    emit(out, j);
    return kExitOk;
}

// ---- select-gamma ------------------------------------------------------------

struct SelectArgs {
    DataArgs data;
    std::string divergence;
    std::string method = "hs";
    std::string grid;
    std::string curve;
    double pilot = 0.5;
    std::string variance = "model";
    int rounds = 20;
    int folds = 10;
    std::uint64_t seed = 1;
    int nlambda = 50;
    double lambda_ratio = 1e-4;
};

RegressionSelectOptions regression_options(int folds, std::uint64_t seed, int nlambda, double ratio) {
    RegressionSelectOptions o;
    o.cv.folds = folds;
    o.cv.seed = seed;
    o.cv.nlambda = nlambda;
    o.cv.lambda_ratio = ratio;
    try {
        o.cv.validate();
    } catch (const InvalidArgument& e) {
        throw InvalidConfiguration(e.what());
    }
    return o;
}

ComparatorOptions comparator_options(double pilot, const std::string& variance, int rounds) {
    if (!(pilot >= 0.0) || !std::isfinite(pilot)) throw InvalidConfiguration("--pilot must be finite and >= 0");
    if (rounds < 1) throw InvalidConfiguration("--rounds must be at least 1");
    ComparatorOptions c;
    c.pilot_gamma = pilot;
    c.variance = parse_variance_estimator(variance);
    c.max_rounds = rounds;
    return c;
}

int cmd_select(const SelectArgs& a, std::ostream& out) {
    const bool regression = a.data.model == "regression";
    const auto grid = parse_grid(a.grid.empty() ? (regression ? "0.02:0.02:0.70" : "0.01:0.01:0.70") : a.grid);
    const auto kind = resolve_kind(a.divergence, a.data.model);
    if (a.method != "hs" && (regression || kind != DivergenceKind::DPD)) {
        throw InvalidConfiguration("--method " + a.method + " applies to normal-model dpd fits");
    }
    const auto comparator = comparator_options(a.pilot, a.variance, a.rounds);
    const auto reg_opts = regression_options(a.folds, a.seed, a.nlambda, a.lambda_ratio);
    const auto ds = load(a.data);
    const auto data = ds.observations();

    SelectionResult sel;
    if (regression) {
        if (kind != DivergenceKind::GammaDiv) throw InvalidConfiguration("regression supports --divergence gamma");
        sel = select_gamma_regression(data, grid, reg_opts);
    } else {
        const auto fits = fit_grid(data, kind, grid);
        if (a.method == "hs") {
            sel = select_gamma(fits, data);
        } else if (a.method == "owj") {
            sel = select_gamma_owj(fits, data, comparator);
        } else {
            sel = select_gamma_iwj(fits, data, comparator);
        }
    }
    if (!a.curve.empty()) write_file(a.curve, curve_csv(sel));
    json j = to_json(sel, a.method, ds.feature_names);
    j["data"] = ds.name;
    j["n"] = data.size();
    emit(out, j);
    return kExitOk;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
    std::vector<double> omegas{0.0, 0.05, 0.10, 0.15};
    int n = 100;
    int reps = 5000;
    std::uint64_t seed = 1;
    std::vector<std::string> methods{"hs", "owj", "iwj", "fixed:0.1", "fixed:0.3", "fixed:0.5"};
    std::string grid = "0:0.01:0.70";
    double mu = 2.0;
    double sigma = 1.0;
    double shift = 7.0;
    std::string contamination = "floor";
    std::string variance = "model";
    double pilot = 0.5;
    int rounds = 20;
    double level = 0.95;
    int threads = 0;
    double max_failure_rate = 0.01;
    std::string out;
    std::string table2;
    std::string summary;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    SimDesign d;
    d.n = a.n;
    d.mu_true = a.mu;
    d.sigma_true = a.sigma;
    d.omegas = a.omegas;
    d.shift = a.shift;
    d.replications = a.reps;
    d.seed = a.seed;
    d.methods.clear();
    for (const auto& m : a.methods) d.methods.push_back(parse_method(m));
    d.grid = parse_grid(a.grid);
    d.contamination = parse_contamination_rule(a.contamination);
    d.comparator = comparator_options(a.pilot, a.variance, a.rounds);
    d.level = a.level;
    d.threads = a.threads;
    d.max_failure_rate = a.max_failure_rate;
    d.validate();
    const auto report = run_design(d);
    if (!a.out.empty()) write_file(a.out, table1_csv(report));
    if (!a.table2.empty()) write_file(a.table2, table2_csv(report));
    if (!a.summary.empty()) write_file(a.summary, summary_csv(report));
    emit(out, to_json(report));
    return kExitOk;
}

// ---- analyze-boston ----------------------------------------------------------

struct BostonArgs {
    std::string data;
    std::string grid = "0.02:0.02:0.70";
    std::vector<double> compare{0.0, 0.5};
    int folds = 10;
    std::uint64_t seed = 1;
    int nlambda = 50;
    double lambda_ratio = 1e-4;
    bool standardize_response = false;
    std::string out;
    std::string curve;
};

std::string label(double g) {
    std::ostringstream os;
    os << std::setprecision(12) << g;
    return os.str();
}

int cmd_boston(const BostonArgs& a, std::ostream& out) {
    const auto grid = parse_grid(a.grid);
    const auto opts = regression_options(a.folds, a.seed, a.nlambda, a.lambda_ratio);
    for (double g : a.compare) {
        if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidConfiguration("--compare values must be finite and >= 0");
    }
    BostonOptions bo;
    bo.standardize_response = a.standardize_response;
    const auto ds = load_boston(a.data, bo);
    const auto data = ds.observations();
    const auto sel = select_gamma_regression(data, grid, opts);

    std::vector<std::pair<double, FitResult>> columns{{sel.gamma_opt, sel.fit_opt()}};
    std::vector<double> lambdas{sel.lambdas.at(sel.index_opt)};
    for (double g : a.compare) {
        double lambda = 0.0;
        columns.emplace_back(g, fit_regression_cv(data, g, opts, &lambda));
        lambdas.push_back(lambda);
    }

    std::ostringstream csv;
    csv << std::setprecision(17) << "term,beta_gamma_opt";
    for (double g : a.compare) csv << ",beta_gamma_" << label(g);
    csv << '\n';
    const auto k = ds.feature_names.size();
    for (std::size_t t = 0; t <= k; ++t) {
        csv << (t == 0 ? std::string("intercept") : ds.feature_names[t - 1]);
        for (const auto& [g, fit] : columns) {
            const auto& p = *fit.standardized;
            csv << ',' << (t == 0 ? p.intercept : p.beta(static_cast<Eigen::Index>(t - 1)));
        }
        csv << '\n';
    }
    if (!a.out.empty()) write_file(a.out, csv.str());
    if (!a.curve.empty()) write_file(a.curve, curve_csv(sel));

    json j = to_json(sel, "hs", ds.feature_names);
    j["data"] = ds.name;
    j["n"] = data.size();
    json cmp = json::array();
    for (std::size_t c = 0; c < columns.size(); ++c) {
        cmp.push_back({{"gamma", columns[c].first},
                       {"lambda", number(lambdas[c])},
                       {"role", c == 0 ? "gamma_opt" : "comparison"},
                       {"fit", to_json(columns[c].second, ds.feature_names)}});
    }
    j["coefficients"] = cmp;
    emit(out, j);
    return kExitOk;
}

// ---- config file -------------------------------------------------------------

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfiguration(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidConfiguration(path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

bool flag_given(const std::vector<std::string>& args, const std::string& name) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& s) {
        return s == name || s.rfind(name + "=", 0) == 0;
    });
}

// Merges key = value pairs into the argument list right after the
// subcommand name, skipping keys also given as flags (flags win).
std::vector<std::string> apply_config(CLI::App& app, std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::size_t pos = 0;
    CLI::App* sub = nullptr;
    for (std::size_t i = 1; i < args.size() && !sub; ++i) {
        for (auto* s : app.get_subcommands({})) {
            if (s->get_name() == args[i]) {
                sub = s;
                pos = i;
                break;
            }
        }
    }
    if (!sub) throw InvalidConfiguration("--config needs a subcommand");
    std::vector<std::string> extra;
    for (const auto& [key, value] : read_config(path)) {
        const auto name = "--" + key;
        if (key == "config" || key == "help" || !sub->get_option_no_throw(name)) {
            throw InvalidConfiguration("unknown config key '" + key + "' for " + sub->get_name());
        }
        if (flag_given(args, name)) continue;
        extra.push_back(name + "=" + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos) + 1, extra.begin(), extra.end());
    return args;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust divergence estimation with H-score tuning-parameter selection", "hsrobust"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand all help");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit one model at a fixed gamma");
    add_data_options(fit, fit_args.data, true);
    fit->add_option("--divergence", fit_args.divergence, "dpd | gamma (default: dpd for normal, gamma for regression)")
        ->check(CLI::IsMember({"dpd", "gamma"}));
    fit->add_option("--gamma", fit_args.gamma, "tuning parameter (0 = likelihood)")->capture_default_str();
    fit->add_option("--lambda", fit_args.lambda, "l1 penalty (regression)")->capture_default_str();
    fit->add_option("--variance", fit_args.variance, "model | sandwich")->check(CLI::IsMember({"model", "sandwich"}));
    fit->add_option("--level", fit_args.level, "Wald interval level")->capture_default_str();

    SelectArgs sel_args;
    auto* sel = app.add_subcommand("select-gamma", "select gamma over a grid");
    add_data_options(sel, sel_args.data, true);
    sel->add_option("--divergence", sel_args.divergence, "dpd | gamma")->check(CLI::IsMember({"dpd", "gamma"}));
    sel->add_option("--method", sel_args.method, "hs | owj | iwj")
        ->check(CLI::IsMember({"hs", "owj", "iwj"}))
        ->capture_default_str();
    sel->add_option("--grid", sel_args.grid, "start:step:end or a comma list");
    sel->add_option("--curve", sel_args.curve, "write gamma,score CSV here");
    sel->add_option("--pilot", sel_args.pilot, "pilot gamma for owj/iwj")->capture_default_str();
    sel->add_option("--variance", sel_args.variance, "model | sandwich (owj/iwj)")
        ->check(CLI::IsMember({"model", "sandwich"}))
        ->capture_default_str();
    sel->add_option("--rounds", sel_args.rounds, "iwj round limit")->capture_default_str();
    sel->add_option("--folds", sel_args.folds, "CV folds (regression)")->capture_default_str();
    sel->add_option("--seed", sel_args.seed, "CV fold seed (regression)")->capture_default_str();
    sel->add_option("--nlambda", sel_args.nlambda, "lambda grid size (regression)")->capture_default_str();
    sel->add_option("--lambda-ratio", sel_args.lambda_ratio, "lambda_min / lambda_max")->capture_default_str();

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the selection methods");
    sim->add_option("--omega", sim_args.omegas, "contamination ratios")->delimiter(',')->capture_default_str();
    sim->add_option("--n", sim_args.n, "sample size")->capture_default_str();
    sim->add_option("--reps", sim_args.reps, "replications")->capture_default_str();
    sim->add_option("--seed", sim_args.seed, "master seed")->capture_default_str();
    sim->add_option("--methods", sim_args.methods, "hs,owj,iwj,fixed:<g>")->delimiter(',')->capture_default_str();
    sim->add_option("--grid", sim_args.grid, "gamma grid")->capture_default_str();
    sim->add_option("--mu", sim_args.mu, "true mean")->capture_default_str();
    sim->add_option("--sigma", sim_args.sigma, "true sd")->capture_default_str();
    sim->add_option("--shift", sim_args.shift, "outlier shift")->capture_default_str();
    sim->add_option("--contamination", sim_args.contamination, "floor | at-least-one")
        ->check(CLI::IsMember({"floor", "at-least-one"}))
        ->capture_default_str();
    sim->add_option("--variance", sim_args.variance, "model | sandwich")
        ->check(CLI::IsMember({"model", "sandwich"}))
        ->capture_default_str();
    sim->add_option("--pilot", sim_args.pilot, "pilot gamma for owj/iwj")->capture_default_str();
    sim->add_option("--rounds", sim_args.rounds, "iwj round limit")->capture_default_str();
    sim->add_option("--level", sim_args.level, "Wald interval level")->capture_default_str();
    sim->add_option("--threads", sim_args.threads, "worker threads (0 = all cores)")->capture_default_str();
    sim->add_option("--max-failure-rate", sim_args.max_failure_rate, "tolerated failure share")
        ->capture_default_str();
    sim->add_option("--out", sim_args.out, "RMSE/CP/AL blocks by omega and method (CSV)");
    sim->add_option("--table2", sim_args.table2, "mean selected gamma by omega (CSV)");
    sim->add_option("--summary", sim_args.summary, "long CSV with standard errors");

    BostonArgs bos_args;
    auto* bos = app.add_subcommand("analyze-boston", "gamma selection and coefficient comparison on Boston housing");
    bos->add_option("--data", bos_args.data, "Boston housing CSV")->required();
    bos->add_option("--grid", bos_args.grid, "gamma grid")->capture_default_str();
    bos->add_option("--compare", bos_args.compare, "comparison gammas")->delimiter(',')->capture_default_str();
    bos->add_option("--folds", bos_args.folds, "CV folds")->capture_default_str();
    bos->add_option("--seed", bos_args.seed, "CV fold seed")->capture_default_str();
    bos->add_option("--nlambda", bos_args.nlambda, "lambda grid size")->capture_default_str();
    bos->add_option("--lambda-ratio", bos_args.lambda_ratio, "lambda_min / lambda_max")->capture_default_str();
    bos->add_flag("--standardize-response", bos_args.standardize_response, "standardize medv before fitting");
    bos->add_option("--out", bos_args.out, "coefficient CSV");
    bos->add_option("--curve", bos_args.curve, "gamma,score CSV");

    for (auto* s : {fit, sel, sim, bos}) s->add_option("--config", "key = value file (flags take precedence)");

    try {
        auto args = apply_config(app, raw_args);
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
        resolve_model(fit_args.data);
        resolve_model(sel_args.data);
        if (fit->parsed()) return cmd_fit(fit_args, out, err);
        if (sel->parsed()) return cmd_select(sel_args, out);
        if (sim->parsed()) return cmd_simulate(sim_args, out);
        return cmd_boston(bos_args, out);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidConfiguration& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IngestionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const HarnessError& e) {
        err << "error: " << e.what() << '\n';
        return kExitHarness;
    } catch (const FitFailure& e) {
        err << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const DegenerateFit& e) {
        err << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const SelectionFailure& e) {
        err << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const SingularInformation& e) {
        err << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace hsrobust::cli
