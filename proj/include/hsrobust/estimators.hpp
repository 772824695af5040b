#pragma once

#include "hsrobust/divergences.hpp"
#include "hsrobust/models.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace hsrobust {

/// Outcome of an M-estimation.
///
/// For the normal model `objective` is sum_i D_gamma(y_i; theta_hat) (maximized)
/// and `hessian` is its observed Hessian in (mu, sigma2). For regression
/// `objective` is the penalized gamma-divergence loss (minimized) and
/// `hessian` is the Hessian of sum_i D_gamma in (intercept, beta, sigma2).
/// gamma == 0 marks the log-likelihood limit.
struct FitResult {
    DivergenceKind kind = DivergenceKind::DPD;
    double gamma = 0.0;
    double lambda = 0.0;
    std::variant<NormalParams, RegressionParams> params;
    /// Regression only: coefficients on the internally standardized scale.
    std::optional<RegressionParams> standardized;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    Eigen::MatrixXd hessian;

    bool is_regression() const { return std::holds_alternative<RegressionParams>(params); }
    const NormalParams& normal() const { return std::get<NormalParams>(params); }
    const RegressionParams& regression() const { return std::get<RegressionParams>(params); }
};

struct FitOptions {
    /// Max-norm of the gradient in (mu, log sigma2) at convergence.
    double grad_tol = 1e-8;
    int max_iter = 200;
};

/// sum_i D(y_i) with gradient and Hessian in (mu, sigma2).
struct NormalObjective {
    double value = 0.0;
    double shifted = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

NormalObjective evaluate_normal(const ObservationSet& data, const NormalParams& params,
                                DivergenceKind kind, double gamma);

/// Median and (1.4826 MAD)^2; falls back to the sample variance when MAD = 0.
NormalParams robust_start(const Eigen::VectorXd& y);

/// Sample mean and (1/n) sum of squared deviations, with the log-likelihood Hessian.
FitResult fit_normal_mle(const ObservationSet& data);

/// argmax_theta sum_i D_gamma(y_i; mu, sigma2) by damped Newton on (mu, log sigma2).
FitResult fit_normal(const ObservationSet& data, const DivergenceConfig& cfg,
                     std::optional<NormalParams> init = std::nullopt, const FitOptions& options = {});

/// Same as fit_normal but also accepts gamma == 0 (routes to fit_normal_mle).
FitResult fit_normal_at(const ObservationSet& data, DivergenceKind kind, double gamma,
                        std::optional<NormalParams> init = std::nullopt, const FitOptions& options = {});

struct RegressionOptions {
    bool standardize = true;
    /// Relative change of the penalized loss between MM iterations.
    double mm_tol = 1e-10;
    int mm_max_iter = 5000;
    double cd_tol = 1e-12;
    int cd_max_sweeps = 1000;
};

/// Penalized gamma-divergence loss on the data's own scale:
///   -(1/gamma) log mean_i phi_i^gamma - gamma/(2(1+gamma)) log sigma2 + lambda |beta|_1
/// (gamma == 0: mean negative log-likelihood plus the penalty).
double regression_objective(const ObservationSet& data, const RegressionParams& params, double gamma,
                            double lambda);

/// l1-penalized gamma-divergence regression by majorize-minimize with a
/// weighted-lasso coordinate descent inner solver. lambda applies on the
/// standardized scale when options.standardize is set. The loss is not
/// convex; without `init` the MM starts from the beta = 0 fit, as the path does.
FitResult fit_regression_gamma(const ObservationSet& data, const DivergenceConfig& cfg,
                               std::optional<RegressionParams> init = std::nullopt,
                               const RegressionOptions& options = {});

/// gamma >= 0 variant (gamma == 0 is the l1-penalized Gaussian likelihood).
FitResult fit_regression_at(const ObservationSet& data, double gamma, double lambda,
                            std::optional<RegressionParams> init = std::nullopt,
                            const RegressionOptions& options = {});

/// Smallest lambda (standardized scale when options.standardize) at which the
/// beta = 0 fit satisfies the KKT conditions.
double lambda_max(const ObservationSet& data, double gamma, const RegressionOptions& options = {});

/// n log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> default_lambda_grid(const ObservationSet& data, double gamma, int count = 50,
                                        double ratio = 1e-4, const RegressionOptions& options = {});

/// Fits along a descending lambda grid with warm starts.
std::vector<FitResult> fit_regression_path(const ObservationSet& data, double gamma,
                                           const std::vector<double>& lambdas,
                                           const RegressionOptions& options = {});

struct CvConfig {
    int folds = 10;
    /// Strictly positive and descending; empty selects
    /// default_lambda_grid(nlambda, lambda_ratio).
    std::vector<double> lambda_grid;
    int nlambda = 50;
    double lambda_ratio = 1e-4;
    std::uint64_t seed = 1;

    void validate() const;
};

struct CvResult {
    double lambda_opt = 0.0;
    std::vector<double> lambdas;
    /// Mean held-out loss per lambda; the loss is -mean_i D_gamma(y_i; theta_hat)
    /// for the transformed gamma-divergence (negative log-likelihood at gamma 0).
    std::vector<double> cv_curve;
};

/// Reproducible fold assignment: fold id per observation.
std::vector<int> assign_folds(Eigen::Index n, int folds, std::uint64_t seed);

/// cfg.lambda is ignored; gamma == 0 is accepted for the non-robust comparison fit.
CvResult cv_select_lambda(const ObservationSet& data, double gamma, const CvConfig& cv,
                          const RegressionOptions& options = {});
CvResult cv_select_lambda(const ObservationSet& data, const DivergenceConfig& cfg, const CvConfig& cv,
                          const RegressionOptions& options = {});

}  // namespace hsrobust
