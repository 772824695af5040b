#pragma once

#include "hsrobust/estimators.hpp"
#include "hsrobust/hscore.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace hsrobust {

/// bread = (1/n) sum dS/dtheta, meat = (1/n) sum S S', vcov = bread^-1 meat bread^-T / n.
/// Coordinates are (mu, sigma2) for the normal model and
/// (intercept, beta, sigma2) for unpenalized regression.
struct SandwichVariance {
    Eigen::MatrixXd bread;
    Eigen::MatrixXd meat;
    Eigen::MatrixXd vcov;
};

SandwichVariance sandwich(const ObservationSet& data, const FitResult& fit);

/// Asymptotic covariance of a normal-model DPD estimator computed under the
/// fitted model N(mu_hat, sigma2_hat), in (mu, sigma2), divided by n. The mu
/// entry is sigma2 (1+gamma)^3 / (1+2 gamma)^(3/2) / n. gamma == 0 gives the
/// inverse Fisher information.
Eigen::Matrix2d model_variance(const FitResult& fit, Eigen::Index n);

enum class VarianceEstimator { Model, Sandwich };

std::string_view to_string(VarianceEstimator v);
VarianceEstimator parse_variance_estimator(std::string_view name);

Eigen::MatrixXd estimate_vcov(const ObservationSet& data, const FitResult& fit, VarianceEstimator which);

struct WaldInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;

    double length() const { return upper - lower; }
    bool covers(double v) const { return lower <= v && v <= upper; }
};

/// Two-sided standard-normal quantile z_{(1+level)/2}.
double wald_multiplier(double level);

WaldInterval wald_interval(const FitResult& fit, const Eigen::MatrixXd& vcov, Eigen::Index coordinate,
                           double level = 0.95);
WaldInterval wald_interval(const FitResult& fit, const SandwichVariance& var, Eigen::Index coordinate,
                           double level = 0.95);

struct ComparatorOptions {
    double pilot_gamma = 0.5;
    VarianceEstimator variance = VarianceEstimator::Model;
    int max_rounds = 20;
    SelectOptions select;
};

/// Estimated MSE per grid point:
///   (mu - mu_P)^2 + (log sigma - log sigma_P)^2 + tr Var(mu, log sigma).
std::vector<double> mse_scores(const GridFits& fits, const ObservationSet& data, const NormalParams& pilot,
                               VarianceEstimator variance);

SelectionResult select_gamma_owj(const GridFits& fits, const ObservationSet& data,
                                 const ComparatorOptions& options = {});
SelectionResult select_gamma_owj(const ObservationSet& data, const GammaGrid& grid,
                                 const ComparatorOptions& options = {});

/// Repeats OWJ with the previous round's selected fit as pilot until the
/// selected grid index repeats or max_rounds is reached.
SelectionResult select_gamma_iwj(const GridFits& fits, const ObservationSet& data,
                                 const ComparatorOptions& options = {});
SelectionResult select_gamma_iwj(const ObservationSet& data, const GammaGrid& grid,
                                 const ComparatorOptions& options = {});

}  // namespace hsrobust
