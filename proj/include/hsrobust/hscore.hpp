#pragma once

#include "hsrobust/divergences.hpp"
#include "hsrobust/estimators.hpp"
#include "hsrobust/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hsrobust {

/// Strictly increasing, finite, non-negative gamma values.
struct GammaGrid {
    std::vector<double> values;

    /// start, start+step, ..., end (inclusive). Values are rounded to 12
    /// decimals so that e.g. 0.09 prints and compares as 0.09.
    static GammaGrid range(double start, double step, double end);
    /// Parses "start:step:end".
    static GammaGrid parse(const std::string& spec);

    void validate() const;
    std::size_t size() const { return values.size(); }
};

/// Fits at every grid point; a failed point holds std::nullopt and a message.
struct GridFits {
    GammaGrid grid;
    std::vector<std::optional<FitResult>> fits;
    std::vector<std::string> failures;
};

struct SelectionResult {
    GammaGrid grid;
    /// Criterion per grid point; NaN where the fit failed.
    std::vector<double> scores;
    double gamma_opt = 0.0;
    std::size_t index_opt = 0;
    std::vector<std::optional<FitResult>> fits;
    std::vector<std::string> failures;
    /// Regression only: CV-selected lambda per grid point.
    std::vector<double> lambdas;
    /// Iterative comparators only: rounds performed.
    int rounds = 0;

    const FitResult& fit_opt() const { return *fits.at(index_opt); }
};

/// H_n(gamma) = (1/n) sum_i { 2 D''(y_i; theta_hat) + D'(y_i; theta_hat)^2 }.
/// `cfg` must name the divergence and gamma the fit was produced with.
double hscore_at(const ObservationSet& data, const FitResult& fit, const DivergenceConfig& cfg);

/// Same criterion evaluated with the fit's own kind and gamma (gamma == 0
/// uses the log-likelihood terms).
double hscore(const ObservationSet& data, const FitResult& fit);

/// Normal-model DPD criterion written directly in mu_hat, sigma2_hat and
/// phi^gamma, including the 1/n factor.
double hscore_normal_dpd_closed(const ObservationSet& data, const FitResult& fit);

/// Regression gamma-divergence criterion written directly with C_gamma(sigma2_hat).
double hscore_regression_gamma_closed(const ObservationSet& data, const FitResult& fit);

struct SelectOptions {
    FitOptions fit;
    /// Start each grid fit from the previous point's estimate (ascending gamma).
    bool warm_start = true;
};

/// Normal model: fits along the grid.
GridFits fit_grid(const ObservationSet& data, DivergenceKind kind, const GammaGrid& grid,
                  const SelectOptions& options = {});

/// argmin of a per-point criterion; ties go to the smaller gamma.
SelectionResult select_from_scores(const GridFits& fits, std::vector<double> scores);

SelectionResult select_gamma(const GridFits& fits, const ObservationSet& data);
SelectionResult select_gamma(const ObservationSet& data, DivergenceKind kind, const GammaGrid& grid,
                             const SelectOptions& options = {});

struct RegressionSelectOptions {
    CvConfig cv;
    RegressionOptions regression;
};

/// l1 gamma-divergence regression: lambda is re-selected by CV at every gamma.
SelectionResult select_gamma_regression(const ObservationSet& data, const GammaGrid& grid,
                                        const RegressionSelectOptions& options = {});

/// Fit at a single (gamma, CV-selected lambda); used by the grid search and
/// by the coefficient comparison at fixed gamma.
FitResult fit_regression_cv(const ObservationSet& data, double gamma, const RegressionSelectOptions& options,
                            double* lambda_out = nullptr);

/// Numerical check of the marginal-likelihood derivative approximation at
/// observation i. The prior is flat in (mu, log sigma2).
struct Proposition1Check {
    double h = 0.0;
    /// Exact derivatives of log int prod_j exp D(y_j; theta) dtheta, by 2-D
    /// Gauss-Legendre quadrature: E[D'] and E[D''] + Var[D'] under the
    /// posterior.
    double marginal_d1 = 0.0;
    double marginal_d2 = 0.0;
    /// Finite differences (step h, refits at y_i +- h) of the profile
    /// sum_j D(y_j; theta_hat(y)).
    double profile_d1 = 0.0;
    double profile_d2 = 0.0;
    /// Same with the Laplace correction -1/2 log det(-H(theta_hat)).
    double laplace_d1 = 0.0;
    double laplace_d2 = 0.0;
    /// D'(y_i; theta_hat) and D''(y_i; theta_hat).
    double rhs_d1 = 0.0;
    double rhs_d2 = 0.0;
    double marginal_gap = 0.0;   ///< |marginal_d1 - rhs_d1|
    double marginal_gap2 = 0.0;  ///< |marginal_d2 - rhs_d2|
    double gap = 0.0;          ///< |profile_d1 - rhs_d1|
    double gap2 = 0.0;         ///< |profile_d2 - rhs_d2|
    double laplace_gap = 0.0;  ///< |laplace_d1 - rhs_d1|
    double laplace_gap2 = 0.0; ///< |laplace_d2 - rhs_d2|
    /// d theta_hat / d y_i in (mu, sigma2): refit differences vs -H^{-1} S'(y_i).
    Eigen::Vector2d dtheta_fd = Eigen::Vector2d::Zero();
    Eigen::Vector2d dtheta_ift = Eigen::Vector2d::Zero();
    double dtheta_rel_error = 0.0;
};

/// h <= 0 selects 1e-4 (1 + |y_i|).
Proposition1Check verify_proposition1(const ObservationSet& data, const DivergenceConfig& cfg, Eigen::Index i,
                                      double h = 0.0);

}  // namespace hsrobust
