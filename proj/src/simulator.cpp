#include "hsrobust/simulator.hpp"

#include "hsrobust/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace hsrobust {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string fmt(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string fmt_general(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

// Outcome of one method on one replication.
struct Outcome {
    bool ok = false;
    double error = 0.0;
    bool covered = false;
    double length = 0.0;
    double gamma = 0.0;
    std::string failure;
};

std::optional<std::size_t> grid_index(const GammaGrid& grid, double gamma) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (std::abs(grid.values[k] - gamma) < 1e-12) return k;
    }
    return std::nullopt;
}

Outcome evaluate(const SimDesign& d, const Method& m, const ObservationSet& data, const GridFits* fits) {
    Outcome out;
    try {
        FitResult fit;
        if (m.kind == MethodKind::Fixed) {
            const auto k = fits ? grid_index(fits->grid, m.gamma) : std::nullopt;
            if (k && fits->fits[*k]) {
                fit = *fits->fits[*k];
            } else if (k) {
                throw FitFailure("fit at gamma=" + fmt_general(m.gamma) + " failed: " + fits->failures[*k], {});
            } else {
                fit = fit_normal_at(data, DivergenceKind::DPD, m.gamma, std::nullopt, d.comparator.select.fit);
            }
        } else {
            SelectionResult sel;
            if (m.kind == MethodKind::HS) {
                sel = select_gamma(*fits, data);
            } else if (m.kind == MethodKind::OWJ) {
                sel = select_gamma_owj(*fits, data, d.comparator);
            } else {
                sel = select_gamma_iwj(*fits, data, d.comparator);
            }
            fit = sel.fit_opt();
        }
        const auto vcov = estimate_vcov(data, fit, d.comparator.variance);
        const auto ci = wald_interval(fit, vcov, 0, d.level);
        out.error = fit.normal().mu - d.mu_true;
        out.covered = ci.covers(d.mu_true);
        out.length = ci.length();
        out.gamma = fit.gamma;
        out.ok = std::isfinite(out.error) && std::isfinite(out.length);
        if (!out.ok) out.failure = "non-finite estimate";
    } catch (const std::runtime_error& e) {
        out.failure = e.what();
    } catch (const std::invalid_argument& e) {
        out.failure = e.what();
    }
    return out;
}

std::vector<Outcome> run_replication(const SimDesign& d, double omega, int rep) {
    const ObservationSet data{draw_replication(d, omega, rep), std::nullopt};
    const bool need_grid = std::any_of(d.methods.begin(), d.methods.end(), [&](const Method& m) {
        return m.selects() || grid_index(d.grid, m.gamma).has_value();
    });
    std::optional<GridFits> fits;
    if (need_grid) fits = fit_grid(data, DivergenceKind::DPD, d.grid, d.comparator.select);
    std::vector<Outcome> out;
    out.reserve(d.methods.size());
    for (const auto& m : d.methods) out.push_back(evaluate(d, m, data, fits ? &*fits : nullptr));
    return out;
}

MethodSummary summarize(const Method& m, double omega, const std::vector<const Outcome*>& rows) {
    MethodSummary s;
    s.method = m;
    s.omega = omega;
    std::vector<double> sq, cover, len, gam;
    for (const auto* o : rows) {
        if (!o->ok) {
            ++s.failures;
            continue;
        }
        sq.push_back(o->error * o->error);
        cover.push_back(o->covered ? 1.0 : 0.0);
        len.push_back(o->length);
        gam.push_back(o->gamma);
    }
    s.successes = static_cast<int>(sq.size());
    if (sq.empty()) return s;
    auto mean_se = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        return Estimate{mean, sd / std::sqrt(n)};
    };
    const auto mse = mean_se(sq);
    const double rmse = std::sqrt(mse.value);
    s.rmse_x100 = {100.0 * rmse, rmse > 0.0 ? 100.0 * mse.se / (2.0 * rmse) : 0.0};
    const auto cp = mean_se(cover);
    const double nn = static_cast<double>(cover.size());
    s.cp_percent = {100.0 * cp.value, 100.0 * std::sqrt(cp.value * (1.0 - cp.value) / nn)};
    const auto al = mean_se(len);
    s.al_x100 = {100.0 * al.value, 100.0 * al.se};
    s.mean_gamma = mean_se(gam);
    return s;
}

}  // namespace

std::string method_label(const Method& m) {
    switch (m.kind) {
        case MethodKind::HS: return "HS";
        case MethodKind::OWJ: return "OWJ";
        case MethodKind::IWJ: return "IWJ";
        case MethodKind::Fixed: return "gamma=" + fmt_general(m.gamma);
    }
    return "?";
}

Method parse_method(const std::string& text) {
    const auto t = lower(text);
    if (t == "hs") return Method::hs();
    if (t == "owj") return Method::owj();
    if (t == "iwj") return Method::iwj();
    std::string num = t;
    for (const std::string prefix : {"fixed:", "gamma="}) {
        if (t.rfind(prefix, 0) == 0) num = t.substr(prefix.size());
    }
    std::size_t used = 0;
    double g = 0.0;
    try {
        g = std::stod(num, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != num.size()) {
        throw InvalidArgument("unknown method '" + text + "' (expected hs|owj|iwj|fixed:<gamma>)");
    }
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("fixed gamma must be finite and non-negative");
    return Method::fixed(g);
}

std::string_view to_string(ContaminationRule rule) {
    return rule == ContaminationRule::Floor ? "floor" : "at-least-one";
}

ContaminationRule parse_contamination_rule(std::string_view name) {
    if (name == "floor") return ContaminationRule::Floor;
    if (name == "at-least-one") return ContaminationRule::AtLeastOne;
    throw InvalidArgument("unknown contamination rule '" + std::string(name) + "' (expected floor|at-least-one)");
}

std::size_t contamination_count(std::size_t n, double omega, ContaminationRule rule) {
    if (!(omega >= 0.0 && omega < 1.0)) throw InvalidArgument("omega must lie in [0, 1)");
    // The small allowance keeps e.g. 100 * 0.15 = 15.000000000000002 or
    // 14.999999999999998 on the intended integer.
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * omega + 1e-9));
    if (rule == ContaminationRule::AtLeastOne) return std::min(n, std::max<std::size_t>(1, k));
    return std::min(n, k);
}

void SimDesign::validate() const {
    if (n < 3) throw InvalidConfiguration("n must be at least 3");
    if (replications < 1) throw InvalidConfiguration("replications must be at least 1");
    if (!std::isfinite(mu_true) || !std::isfinite(shift)) throw InvalidConfiguration("mu and shift must be finite");
    if (!(sigma_true > 0.0) || !std::isfinite(sigma_true)) throw InvalidConfiguration("sigma must be positive");
    if (omegas.empty()) throw InvalidConfiguration("at least one omega is required");
    for (double w : omegas) {
        if (!(w >= 0.0 && w < 1.0)) throw InvalidConfiguration("omega must lie in [0, 1)");
    }
    if (methods.empty()) throw InvalidConfiguration("at least one method is required");
    if (!(level > 0.0 && level < 1.0)) throw InvalidConfiguration("level must lie in (0, 1)");
    if (threads < 0) throw InvalidConfiguration("threads must be non-negative");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
        throw InvalidConfiguration("max_failure_rate must lie in [0, 1]");
    }
    if (comparator.max_rounds < 1) throw InvalidConfiguration("iwj rounds must be at least 1");
    if (!(comparator.pilot_gamma >= 0.0)) throw InvalidConfiguration("pilot gamma must be non-negative");
    try {
        grid.validate();
    } catch (const InvalidArgument& e) {
        throw InvalidConfiguration(e.what());
    }
}

const MethodSummary& SimulationReport::at(double omega, const Method& m) const {
    for (const auto& r : rows) {
        if (std::abs(r.omega - omega) < 1e-12 && r.method.kind == m.kind &&
            (m.kind != MethodKind::Fixed || std::abs(r.method.gamma - m.gamma) < 1e-12)) {
            return r;
        }
    }
    throw InvalidArgument("no row for " + method_label(m) + " at omega " + fmt_general(omega));
}

Eigen::VectorXd draw_replication(const SimDesign& d, double omega, int rep) {
    // Counter-based substream: the same (seed, rep) gives the same clean
    // sample for every omega and every thread count.
    const std::uint64_t key = splitmix64(splitmix64(d.seed) ^ static_cast<std::uint64_t>(rep));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(d.mu_true, d.sigma_true);
    Eigen::VectorXd y(d.n);
    for (int i = 0; i < d.n; ++i) y(i) = normal(rng);
    const auto k = contamination_count(static_cast<std::size_t>(d.n), omega, d.contamination);
    y.head(static_cast<Eigen::Index>(k)).array() += d.shift;
    return y;
}

SimulationReport run_design(const SimDesign& design) {
    design.validate();
    const auto nw = design.omegas.size();
    const auto reps = static_cast<std::size_t>(design.replications);
    const std::size_t tasks = nw * reps;
    std::vector<std::vector<Outcome>> results(tasks);

    int threads = design.threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : design.threads;
    threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
            const auto w = t / reps;
            const auto r = t % reps;
            results[t] = run_replication(design, design.omegas[w], static_cast<int>(r));
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SimulationReport report;
    report.design = design;
    std::vector<std::string> over_limit;
    for (std::size_t w = 0; w < nw; ++w) {
        for (std::size_t m = 0; m < design.methods.size(); ++m) {
            std::vector<const Outcome*> rows;
            rows.reserve(reps);
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& o = results[w * reps + r][m];
                rows.push_back(&o);
                if (!o.ok) {
                    report.failure_log.push_back("omega=" + fmt_general(design.omegas[w]) + " rep=" +
                                                 std::to_string(r) + " " + method_label(design.methods[m]) + ": " +
                                                 o.failure);
                }
            }
            auto s = summarize(design.methods[m], design.omegas[w], rows);
            if (static_cast<double>(s.failures) > design.max_failure_rate * static_cast<double>(reps)) {
                over_limit.push_back(method_label(s.method) + " at omega=" + fmt_general(s.omega) + " (" +
                                     std::to_string(s.failures) + " of " + std::to_string(reps) + ")");
            }
            report.rows.push_back(std::move(s));
        }
    }
    if (!over_limit.empty()) {
        std::string msg = "replication failures above the tolerated rate:";
        for (const auto& s : over_limit) msg += " " + s + ";";
        throw HarnessError(msg);
    }
    return report;
}

SimulationReport run_table2(SimDesign design) {
    std::vector<Method> keep;
    for (const auto& m : design.methods) {
        if (m.selects()) keep.push_back(m);
    }
    if (keep.empty()) keep = {Method::hs(), Method::owj(), Method::iwj()};
    design.methods = std::move(keep);
    return run_design(design);
}

std::string table1_csv(const SimulationReport& report) {
    std::ostringstream os;
    os << "block,omega";
    for (const auto& m : report.design.methods) os << ',' << method_label(m);
    os << '\n';
    const std::pair<const char*, Estimate MethodSummary::*> blocks[] = {
        {"RMSE", &MethodSummary::rmse_x100}, {"CP", &MethodSummary::cp_percent}, {"AL", &MethodSummary::al_x100}};
    for (const auto& [name, field] : blocks) {
        for (double w : report.design.omegas) {
            os << name << ',' << fmt_general(w);
            for (const auto& m : report.design.methods) os << ',' << fmt((report.at(w, m).*field).value, 1);
            os << '\n';
        }
    }
    return os.str();
}

std::string table2_csv(const SimulationReport& report) {
    std::ostringstream os;
    os << "omega";
    for (const auto& m : report.design.methods) {
        if (m.selects()) os << ',' << method_label(m);
    }
    os << '\n';
    for (double w : report.design.omegas) {
        os << fmt_general(w);
        for (const auto& m : report.design.methods) {
            if (m.selects()) os << ',' << fmt(report.at(w, m).mean_gamma.value, 3);
        }
        os << '\n';
    }
    return os.str();
}

std::string summary_csv(const SimulationReport& report) {
    std::ostringstream os;
    os << "omega,method,rmse_x100,rmse_x100_se,cp_percent,cp_percent_se,al_x100,al_x100_se,mean_gamma,"
          "mean_gamma_se,successes,failures\n";
    os << std::setprecision(10);
    for (const auto& r : report.rows) {
        os << r.omega << ',' << method_label(r.method) << ',' << r.rmse_x100.value << ',' << r.rmse_x100.se << ','
           << r.cp_percent.value << ',' << r.cp_percent.se << ',' << r.al_x100.value << ',' << r.al_x100.se << ','
           << r.mean_gamma.value << ',' << r.mean_gamma.se << ',' << r.successes << ',' << r.failures << '\n';
    }
    return os.str();
}

}  // namespace hsrobust
