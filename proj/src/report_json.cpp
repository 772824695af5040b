#include "hsrobust/report_json.hpp"

#include <cmath>
#include <sstream>

namespace hsrobust {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

json regression_params(const RegressionParams& p, const std::vector<std::string>& names) {
    json beta = json::array();
    for (Eigen::Index k = 0; k < p.beta.size(); ++k) beta.push_back(number(p.beta(k)));
    json out = {{"intercept", number(p.intercept)}, {"beta", beta}, {"sigma2", number(p.sigma2)}};
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) == p.beta.size()) out["feature_names"] = names;
    return out;
}

json estimate(const Estimate& e) { return {{"value", number(e.value)}, {"se", number(e.se)}}; }

}  // namespace

json to_json(const FitResult& fit, const std::vector<std::string>& feature_names) {
    json out;
    out["model"] = fit.is_regression() ? "regression" : "normal";
    out["divergence"] = fit.gamma == 0.0 ? std::string("loglik") : std::string(to_string(fit.kind));
    out["gamma"] = fit.gamma;
    if (fit.is_regression()) {
        out["lambda"] = fit.lambda;
        out["params"] = regression_params(fit.regression(), feature_names);
        if (fit.standardized) out["standardized"] = regression_params(*fit.standardized, feature_names);
    } else {
        out["params"] = {{"mu", number(fit.normal().mu)}, {"sigma2", number(fit.normal().sigma2)},
                         {"sigma", number(std::sqrt(fit.normal().sigma2))}};
    }
    out["objective"] = number(fit.objective);
    out["iterations"] = fit.iterations;
    out["converged"] = fit.converged;
    out["grad_norm"] = number(fit.grad_norm);
    return out;
}

json to_json(const SelectionResult& sel, const std::string& method, const std::vector<std::string>& feature_names) {
    json out;
    out["method"] = method;
    out["gamma_opt"] = sel.gamma_opt;
    out["index_opt"] = sel.index_opt;
    out["grid"] = sel.grid.values;
    json scores = json::array();
    for (double s : sel.scores) scores.push_back(number(s));
    out["scores"] = scores;
    if (!sel.lambdas.empty()) {
        json lambdas = json::array();
        for (double l : sel.lambdas) lambdas.push_back(number(l));
        out["lambdas"] = lambdas;
        out["lambda_opt"] = number(sel.lambdas.at(sel.index_opt));
    }
    if (sel.rounds > 0) out["rounds"] = sel.rounds;
    json failures = json::array();
    for (std::size_t k = 0; k < sel.failures.size(); ++k) {
        if (!sel.failures[k].empty()) failures.push_back({{"gamma", sel.grid.values[k]}, {"error", sel.failures[k]}});
    }
    out["failures"] = failures;
    out["fit"] = to_json(sel.fit_opt(), feature_names);
    return out;
}

json to_json(const SimulationReport& report) {
    const auto& d = report.design;
    json methods = json::array();
    for (const auto& m : d.methods) methods.push_back(method_label(m));
    json design = {{"n", d.n},
                   {"mu_true", d.mu_true},
                   {"sigma_true", d.sigma_true},
                   {"omegas", d.omegas},
                   {"shift", d.shift},
                   {"replications", d.replications},
                   {"seed", d.seed},
                   {"methods", methods},
                   {"grid", d.grid.values},
                   {"contamination", std::string(to_string(d.contamination))},
                   {"variance", std::string(to_string(d.comparator.variance))},
                   {"pilot_gamma", d.comparator.pilot_gamma},
                   {"iwj_max_rounds", d.comparator.max_rounds},
                   {"level", d.level}};
    json counts = json::array();
    for (double w : d.omegas) counts.push_back(contamination_count(static_cast<std::size_t>(d.n), w, d.contamination));
    design["contaminated"] = counts;
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"omega", r.omega},
                        {"method", method_label(r.method)},
                        {"rmse_x100", estimate(r.rmse_x100)},
                        {"cp_percent", estimate(r.cp_percent)},
                        {"al_x100", estimate(r.al_x100)},
                        {"mean_gamma", estimate(r.mean_gamma)},
                        {"successes", r.successes},
                        {"failures", r.failures}});
    }
    return {{"design", design}, {"rows", rows}, {"failure_count", report.failure_log.size()}};
}

std::string curve_csv(const SelectionResult& sel) {
    std::ostringstream os;
    os.precision(17);
    os << "gamma,score\n";
    for (std::size_t k = 0; k < sel.grid.size(); ++k) {
        os << sel.grid.values[k] << ',';
        if (std::isfinite(sel.scores[k])) os << sel.scores[k];
        os << '\n';
    }
    return os.str();
}

}  // namespace hsrobust
