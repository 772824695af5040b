// One PASS/FAIL/SKIP line per acceptance criterion, followed by indented detail.
#include "hsrobust/cli.hpp"
#include "hsrobust/comparators.hpp"
#include "hsrobust/datasets.hpp"
#include "hsrobust/hscore.hpp"
#include "hsrobust/report_json.hpp"
#include "hsrobust/simulator.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hsrobust;

namespace {

int failures = 0;

void verdict(int id, const std::string& status, const std::string& summary) {
    if (status == "FAIL") ++failures;
    std::printf("%s criterion %d: %s\n", status.c_str(), id, summary.c_str());
    std::fflush(stdout);
}

void detail(const std::string& line) {
    std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol + 1e-9; }

ObservationSet normal_sample(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::VectorXd y(n);
    for (auto& v : y) v = 2.0 + z(rng);
    return {y, std::nullopt};
}

ObservationSet regression_sample(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = z(rng);
    Eigen::VectorXd y = 1.0 + X.col(0).array() - 0.5 * X.col(1).array();
    for (int i = 0; i < n; ++i) y(i) += 0.5 * z(rng) + (i % 10 == 0 ? 5.0 : 0.0);
    return {y, X};
}

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = select_gamma(load_newcomb().observations(), DivergenceKind::DPD, GammaGrid::range(0.01, 0.01, 0.70));
    const double secs = seconds_since(t0);
    const bool ok = res.gamma_opt == 0.09 && secs < 10.0;
    verdict(1, ok ? "PASS" : "FAIL", fmt("Newcomb gamma_opt = %.2f (target 0.09), %.3f s (limit 10 s)", res.gamma_opt, secs));
}

void criterion2() {
    const auto path = testing::env_or("BOSTON_CSV", "");
    if (path.empty() || !std::filesystem::exists(path)) {
        verdict(2, "SKIP", "Boston gamma_opt: BOSTON_CSV not set or missing");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = load_boston(path).observations();
    const auto res = select_gamma_regression(data, GammaGrid::range(0.02, 0.02, 0.70));
    const double secs = seconds_since(t0);
    const bool ok = within(res.gamma_opt, 0.16, 0.04) && secs < 600.0;
    verdict(2, ok ? "PASS" : "FAIL",
            fmt("Boston gamma_opt = %.2f (target 0.16 +- 0.04), %.1f s (limit 600 s)", res.gamma_opt, secs));
    std::size_t failed = 0;
    for (const auto& f : res.failures) failed += !f.empty();
    detail(fmt("lambda_opt = %.6g, failed grid points = %zu, medv on its original scale", res.lambdas[res.index_opt], failed));
}

SimDesign table_design(ContaminationRule rule) {
    SimDesign d;
    d.contamination = rule;
    d.threads = 0;
    return d;
}

void criterion3_and_4() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_design(table_design(ContaminationRule::AtLeastOne));
    const double secs = seconds_since(t0);

    const std::vector<double> omegas{0.0, 0.05, 0.10, 0.15};
    const double rmse[] = {10.3, 10.7, 11.0, 11.4}, cp[] = {94.8, 94.7, 94.3, 94.1}, al[] = {40.6, 41.7, 42.5, 43.4};
    bool ok3 = secs < 3600.0;
    std::vector<std::string> lines;
    for (std::size_t w = 0; w < 4; ++w) {
        const auto& hs = rep.at(omegas[w], Method::hs());
        const bool row = within(hs.rmse_x100.value, rmse[w], 0.5) && within(hs.cp_percent.value, cp[w], 1.0) &&
                         within(hs.al_x100.value, al[w], 1.0);
        ok3 = ok3 && row;
        lines.push_back(fmt("omega=%.2f HS RMSE %.2f (se %.2f, target %.1f+-0.5) CP %.2f (se %.2f, target %.1f+-1) "
                            "AL %.2f (se %.2f, target %.1f+-1)%s",
                            omegas[w], hs.rmse_x100.value, hs.rmse_x100.se, rmse[w], hs.cp_percent.value,
                            hs.cp_percent.se, cp[w], hs.al_x100.value, hs.al_x100.se, al[w], row ? "" : "  <-- outside"));
    }
    const double cp10 = rep.at(0.10, Method::fixed(0.1)).cp_percent.value;
    const double cp15 = rep.at(0.15, Method::fixed(0.1)).cp_percent.value;
    const bool breakdown = cp10 <= 40.0 && cp15 <= 1.0;
    ok3 = ok3 && breakdown;
    verdict(3, ok3 ? "PASS" : "FAIL",
            fmt("simulation RMSE/CP/AL (n=100, 5000 reps, at-least-one contamination), %.0f s (limit 3600 s)", secs));
    for (const auto& l : lines) detail(l);
    detail(fmt("gamma=0.1 breakdown: CP %.1f at omega=0.10 (<= 40), %.1f at omega=0.15 (<= 1)", cp10, cp15));

    // The floor(n omega) rule only differs at omega = 0.
    auto floor_design = table_design(ContaminationRule::Floor);
    floor_design.omegas = {0.0};
    floor_design.methods = {Method::hs(), Method::owj(), Method::iwj()};
    const auto fl = run_design(floor_design);
    const auto& hs0 = fl.at(0.0, Method::hs());
    detail(fmt("info, floor(n omega) rule at omega=0 (clean data): HS RMSE %.2f CP %.2f AL %.2f mean gamma %.3f; "
               "OWJ gamma %.3f IWJ gamma %.3f",
               hs0.rmse_x100.value, hs0.cp_percent.value, hs0.al_x100.value, hs0.mean_gamma.value,
               fl.at(0.0, Method::owj()).mean_gamma.value, fl.at(0.0, Method::iwj()).mean_gamma.value));

    const double t_hs[] = {0.088, 0.169, 0.217, 0.252}, t_owj[] = {0.212, 0.260, 0.284, 0.302},
                 t_iwj[] = {0.158, 0.230, 0.267, 0.294};
    bool ok4 = true;
    lines.clear();
    for (std::size_t w = 0; w < 4; ++w) {
        const double hs = rep.at(omegas[w], Method::hs()).mean_gamma.value;
        const double owj = rep.at(omegas[w], Method::owj()).mean_gamma.value;
        const double iwj = rep.at(omegas[w], Method::iwj()).mean_gamma.value;
        const bool row = within(hs, t_hs[w], 0.02) && within(owj, t_owj[w], 0.05) && within(iwj, t_iwj[w], 0.05) &&
                         hs < iwj && iwj < owj;
        ok4 = ok4 && row;
        lines.push_back(fmt("omega=%.2f HS %.3f (%.3f+-0.02) OWJ %.3f (%.3f+-0.05) IWJ %.3f (%.3f+-0.05) order %s%s",
                            omegas[w], hs, t_hs[w], owj, t_owj[w], iwj, t_iwj[w],
                            hs < iwj && iwj < owj ? "HS<IWJ<OWJ" : "violated", row ? "" : "  <-- outside"));
    }
    verdict(4, ok4 ? "PASS" : "FAIL", "simulation mean selected gamma and ordering HS < IWJ < OWJ");
    for (const auto& l : lines) detail(l);
}

void criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::vector<std::string> lines;
    for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
        for (double g : {0.1, 0.3}) {
            const DivergenceConfig cfg{kind, g, 0.0};
            double med[2], lap[2], prof[2], med2[2];
            int idx = 0;
            for (int n : {100, 400}) {
                std::vector<double> rel, rel_lap, rel_prof, rel2;
                for (std::uint64_t seed = 1; seed <= 50; ++seed) {
                    const auto c = verify_proposition1(normal_sample(n, seed), cfg, 0);
                    rel.push_back(c.marginal_gap / std::abs(c.rhs_d1));
                    rel_lap.push_back(c.laplace_gap / std::abs(c.rhs_d1));
                    rel_prof.push_back(c.gap / std::abs(c.rhs_d1));
                    rel2.push_back(c.marginal_gap2 / std::abs(c.rhs_d2));
                }
                med[idx] = median(rel);
                lap[idx] = median(rel_lap);
                prof[idx] = median(rel_prof);
                med2[idx] = median(rel2);
                ++idx;
            }
            const bool row = med[0] < 0.05 && med[1] < med[0];
            ok = ok && row;
            lines.push_back(fmt("%s gamma=%.1f: marginal d1 gap median %.2f%% (n=100) -> %.2f%% (n=400); "
                                "info: d2 %.2f%% -> %.2f%%, Laplace d1 %.2f%% -> %.2f%%, profile d1 %.1e -> %.1e%s",
                                std::string(to_string(kind)).c_str(), g, 100 * med[0], 100 * med[1], 100 * med2[0],
                                100 * med2[1], 100 * lap[0], 100 * lap[1], prof[0], prof[1], row ? "" : "  <-- fails"));
        }
    }
    double worst_ift = 0.0;
    for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
        for (double g : {0.1, 0.3}) {
            for (std::uint64_t seed = 1; seed <= 50; ++seed) {
                const auto c = verify_proposition1(normal_sample(200, seed), {kind, g, 0.0}, 0);
                worst_ift = std::max(worst_ift, c.dtheta_rel_error);
            }
        }
    }
    ok = ok && worst_ift < 1e-3;
    verdict(5, ok ? "PASS" : "FAIL",
            fmt("marginal-likelihood derivative gap < 5%% at n=100 and shrinking at n=400 (50 seeds); "
                "d theta/d y_i identity max rel error %.2e at n=200 (limit 1e-3); %.1f s",
                worst_ift, seconds_since(t0)));
    for (const auto& l : lines) detail(l);
}

void criterion6() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> mu(-3.0, 3.0), logs(std::log(0.05), std::log(20.0)), z(-4.0, 4.0),
        gam(0.01, 1.0);
    struct Case {
        double y, m, s, g;
        Eigen::RowVector2d x;
        RegressionParams reg;
    };
    std::vector<Case> cases;
    while (cases.size() < 100) {
        const double m = mu(rng), s = std::exp(logs(rng)), zz = z(rng);
        if (std::abs(zz) < 0.05) continue;
        Case c{m + zz * std::sqrt(s), m, s, gam(rng), Eigen::RowVector2d(z(rng), z(rng)), {}};
        c.reg = RegressionParams{m - 0.3 * c.x(0) - 0.7 * c.x(1), Eigen::Vector2d(0.3, 0.7), s};
        cases.push_back(c);
    }
    using Fn = std::function<double(const Case&, double)>;
    struct Named {
        std::string name;
        Fn f;
        Fn df;
    };
    auto dpd = [](const Case& c, double y) { return dpd_term(y, NormalParams{c.m, c.s}, {DivergenceKind::DPD, c.g, 0.0}); };
    auto gdv = [](const Case& c, double y) {
        return gammadiv_term(y, NormalParams{c.m, c.s}, {DivergenceKind::GammaDiv, c.g, 0.0});
    };
    auto dpd_r = [](const Case& c, double y) { return dpd_term(y, c.reg, {DivergenceKind::DPD, c.g, 0.0}, c.x); };
    auto gdv_r = [](const Case& c, double y) { return gammadiv_term(y, c.reg, {DivergenceKind::GammaDiv, c.g, 0.0}, c.x); };
    auto ll = [](const Case& c, double y) { return loglik_limit_term(y, NormalParams{c.m, c.s}); };
    auto ll_r = [](const Case& c, double y) { return loglik_limit_term(y, c.reg, c.x); };
    std::vector<Named> fns{
        {"density_dy", [](const Case& c, double y) { return density(y, NormalParams{c.m, c.s}); },
         [](const Case& c, double y) { return density_dy(y, NormalParams{c.m, c.s}); }},
        {"density_d2y", [](const Case& c, double y) { return density_dy(y, NormalParams{c.m, c.s}); },
         [](const Case& c, double y) { return density_d2y(y, NormalParams{c.m, c.s}); }},
        {"density_dy (regression)", [](const Case& c, double y) { return density(y, c.reg, c.x); },
         [](const Case& c, double y) { return density_dy(y, c.reg, c.x); }},
        {"density_d2y (regression)", [](const Case& c, double y) { return density_dy(y, c.reg, c.x); },
         [](const Case& c, double y) { return density_d2y(y, c.reg, c.x); }},
    };
    auto add_term = [&](const std::string& name, auto term) {
        fns.push_back({name + " D'", [=](const Case& c, double y) { return term(c, y).d; },
                       [=](const Case& c, double y) { return term(c, y).d1; }});
        fns.push_back({name + " D''", [=](const Case& c, double y) { return term(c, y).d1; },
                       [=](const Case& c, double y) { return term(c, y).d2; }});
    };
    add_term("dpd", dpd);
    add_term("gamma", gdv);
    add_term("loglik", ll);
    add_term("dpd (regression)", dpd_r);
    add_term("gamma (regression)", gdv_r);
    add_term("loglik (regression)", ll_r);
    for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
        for (int k = 0; k < 2; ++k) {
            const std::string name = std::string("d/dy score[") + (k ? "sigma2" : "mu") + "] " + std::string(to_string(kind));
            fns.push_back({name, [=](const Case& c, double y) { return param_derivatives(y, c.m, c.s, kind, c.g).grad(k); },
                           [=](const Case& c, double y) { return param_derivatives(y, c.m, c.s, kind, c.g).grad_dy(k); }});
        }
    }
    bool ok = true;
    std::vector<std::string> lines;
    for (const auto& fn : fns) {
        double worst = 0.0;
        for (const auto& c : cases) {
            const double h = 1e-3 * std::sqrt(c.s);
            const double fd = testing::derivative_fine([&](double y) { return fn.f(c, y); }, c.y, h);
            worst = std::max(worst, testing::rel_error(fd, fn.df(c, c.y)));
        }
        ok = ok && worst < 1e-5;
        lines.push_back(fmt("%-28s max rel error %.2e", fn.name.c_str(), worst));
    }
    verdict(6, ok ? "PASS" : "FAIL",
            fmt("%zu analytic y-derivatives vs finite differences on 100 random points each (limit 1e-5)", fns.size()));
    for (const auto& l : lines) detail(l);
}

void criterion7() {
    double worst_mle = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto data = normal_sample(100, seed);
        const auto mle = fit_normal_mle(data).normal();
        for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
            const auto fit = fit_normal(data, {kind, 1e-8, 0.0}).normal();
            worst_mle = std::max({worst_mle, std::abs(fit.mu - mle.mu), std::abs(fit.sigma2 - mle.sigma2)});
        }
    }
    const auto newcomb = load_newcomb().observations();
    double worst_dpd = 0.0;
    for (const auto& data : {newcomb, normal_sample(100, 7)}) {
        const auto fits = fit_grid(data, DivergenceKind::DPD, GammaGrid::range(0.01, 0.01, 0.70));
        for (const auto& f : fits.fits) {
            const double generic = hscore(data, *f);
            worst_dpd = std::max(worst_dpd, std::abs(hscore_normal_dpd_closed(data, *f) - generic) / std::abs(generic));
        }
    }
    double worst_reg = 0.0;
    std::vector<ObservationSet> reg_sets{regression_sample(200, 5, 3)};
    const auto path = testing::env_or("BOSTON_CSV", "");
    if (!path.empty() && std::filesystem::exists(path)) reg_sets.push_back(load_boston(path).observations());
    for (const auto& data : reg_sets) {
        for (double g : {0.02, 0.16, 0.4, 0.7}) {
            const auto f = fit_regression_at(data, g, 0.01);
            const double generic = hscore(data, f);
            worst_reg = std::max(worst_reg, std::abs(hscore_regression_gamma_closed(data, f) - generic) / std::abs(generic));
        }
    }
    const bool ok = worst_mle < 1e-4 && worst_dpd < 1e-10 && worst_reg < 1e-10;
    verdict(7, ok ? "PASS" : "FAIL",
            fmt("gamma=1e-8 vs MLE max abs diff %.2e (limit 1e-4); closed-form H-score rel diff: normal DPD %.2e, "
                "regression gamma %.2e (limit 1e-10)",
                worst_mle, worst_dpd, worst_reg));
    detail(fmt("regression closed form checked on %zu data sets%s", reg_sets.size(),
               reg_sets.size() > 1 ? " (synthetic, Boston)" : " (synthetic; Boston unavailable)"));
}

std::string cli_out(std::vector<std::string> args) {
    args.insert(args.begin(), "hsrobust");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return std::to_string(code) + "\n" + out.str();
}

void criterion8() {
    auto d = table_design(ContaminationRule::AtLeastOne);
    d.replications = 300;
    std::vector<std::string> dumps;
    for (int threads : {1, 4, 1, 3}) {
        d.threads = threads;
        const auto rep = run_design(d);
        dumps.push_back(to_json(rep).dump() + table1_csv(rep));
    }
    const bool sim_ok = std::all_of(dumps.begin(), dumps.end(), [&](const auto& s) { return s == dumps[0]; });

    const std::vector<std::string> sim_args{"simulate", "--reps", "50", "--seed", "7"};
    auto with_threads = [&](const char* t) {
        auto a = sim_args;
        a.insert(a.end(), {"--threads", t});
        return cli_out(a);
    };
    const bool cli_sim_ok = with_threads("1") == with_threads("2") && with_threads("1") == with_threads("1");

    const auto sel = [] { return cli_out({"select-gamma", "--data", "newcomb", "--method", "iwj"}); };
    const bool sel_ok = sel() == sel();

    const auto reg = regression_sample(150, 4, 5);
    RegressionSelectOptions ro;
    ro.cv.folds = 5;
    ro.cv.nlambda = 10;
    ro.cv.seed = 11;
    const auto grid = GammaGrid::parse("0.1,0.3,0.5");
    const auto a = to_json(select_gamma_regression(reg, grid, ro), "hs").dump();
    const auto b = to_json(select_gamma_regression(reg, grid, ro), "hs").dump();
    const bool reg_ok = a == b;

    const bool ok = sim_ok && cli_sim_ok && sel_ok && reg_ok;
    verdict(8, ok ? "PASS" : "FAIL", "bit-identical output across runs and thread counts");
    detail(fmt("library simulation (300 reps, threads 1/4/1/3): %s", sim_ok ? "identical" : "DIFFERENT"));
    detail(fmt("CLI simulate --seed 7 (threads 1/2/1): %s", cli_sim_ok ? "identical" : "DIFFERENT"));
    detail(fmt("CLI select-gamma iwj, two runs: %s", sel_ok ? "identical" : "DIFFERENT"));
    detail(fmt("regression CV selection, two runs: %s", reg_ok ? "identical" : "DIFFERENT"));
}

}  // namespace

int main(int argc, char** argv) {
    // Optional list of criterion numbers to run, e.g. `acceptance 1 6 7`.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    if (wanted(1)) criterion1();
    if (wanted(2)) criterion2();
    if (wanted(3) || wanted(4)) criterion3_and_4();
    if (wanted(5)) criterion5();
    if (wanted(6)) criterion6();
    if (wanted(7)) criterion7();
    if (wanted(8)) criterion8();
    std::printf("%d criterion failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
