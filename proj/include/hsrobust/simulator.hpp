#pragma once

#include "hsrobust/comparators.hpp"
#include "hsrobust/hscore.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hsrobust {

enum class MethodKind { HS, OWJ, IWJ, Fixed };

struct Method {
    MethodKind kind = MethodKind::HS;
    double gamma = 0.0;  ///< Fixed only

    static Method hs() { return {MethodKind::HS, 0.0}; }
    static Method owj() { return {MethodKind::OWJ, 0.0}; }
    static Method iwj() { return {MethodKind::IWJ, 0.0}; }
    static Method fixed(double gamma) { return {MethodKind::Fixed, gamma}; }

    bool selects() const { return kind != MethodKind::Fixed; }
};

/// "HS", "OWJ", "IWJ", "gamma=0.1".
std::string method_label(const Method& m);
/// Accepts hs | owj | iwj | fixed:<g> | <g> (case-insensitive).
Method parse_method(const std::string& text);

/// How many of the first observations are shifted.
///   Floor:      floor(n omega).
///   AtLeastOne: max(1, floor(n omega)); reproduces tables generated with a
///               1-based `1:(n*omega)` index, which is c(1, 0) at omega = 0.
enum class ContaminationRule { Floor, AtLeastOne };

std::string_view to_string(ContaminationRule rule);
ContaminationRule parse_contamination_rule(std::string_view name);
std::size_t contamination_count(std::size_t n, double omega, ContaminationRule rule);

struct SimDesign {
    int n = 100;
    double mu_true = 2.0;
    double sigma_true = 1.0;
    std::vector<double> omegas{0.0, 0.05, 0.10, 0.15};
    double shift = 7.0;
    int replications = 5000;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::hs(), Method::owj(), Method::iwj(), Method::fixed(0.1), Method::fixed(0.3),
                                Method::fixed(0.5)};
    GammaGrid grid = GammaGrid::range(0.0, 0.01, 0.70);
    ContaminationRule contamination = ContaminationRule::Floor;
    ComparatorOptions comparator;
    double level = 0.95;
    /// 0 selects std::thread::hardware_concurrency().
    int threads = 1;
    /// Share of failed replications (per method and omega) tolerated.
    double max_failure_rate = 0.01;

    void validate() const;
};

/// Monte Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct MethodSummary {
    Method method;
    double omega = 0.0;
    Estimate rmse_x100;
    Estimate cp_percent;
    Estimate al_x100;
    /// Selection methods only; the fixed gamma otherwise (se 0).
    Estimate mean_gamma;
    int successes = 0;
    int failures = 0;
};

struct SimulationReport {
    SimDesign design;
    /// omega-major, method-minor.
    std::vector<MethodSummary> rows;
    std::vector<std::string> failure_log;

    const MethodSummary& at(double omega, const Method& m) const;
};

/// One replication's draw: n values from N(mu, sigma^2) with the first
/// contamination_count(...) values shifted. Stream depends on (seed, rep).
Eigen::VectorXd draw_replication(const SimDesign& design, double omega, int rep);

/// Throws HarnessError when any (method, omega) cell exceeds max_failure_rate.
SimulationReport run_design(const SimDesign& design);

/// Selection methods only.
SimulationReport run_table2(SimDesign design);

/// Wide layout: block,omega,<method columns>; blocks RMSE, CP, AL.
std::string table1_csv(const SimulationReport& report);
/// Mean selected gamma: omega,<selection-method columns>.
std::string table2_csv(const SimulationReport& report);
/// Long format with standard errors, one row per (omega, method).
std::string summary_csv(const SimulationReport& report);

}  // namespace hsrobust
