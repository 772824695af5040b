#pragma once

#include <Eigen/Dense>

#include <optional>

namespace hsrobust {

/// Variances at or below this value are rejected rather than clamped.
inline constexpr double kMinVariance = 1e-12;

struct NormalParams {
    double mu = 0.0;
    double sigma2 = 1.0;
};

/// y ~ N(intercept + x'beta, sigma2). The intercept is kept apart from beta
/// because it is never penalized.
struct RegressionParams {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
};

/// Responses with optional covariates (absent for the location-scale model).
struct ObservationSet {
    Eigen::VectorXd y;
    std::optional<Eigen::MatrixXd> X;

    Eigen::Index size() const { return y.size(); }
    bool has_covariates() const { return X.has_value(); }
};

/// A single covariate row; accepts matrix rows and contiguous vectors alike.
using CovariateRow = Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

void validate(const NormalParams& params);
void validate(const RegressionParams& params);
void validate(const ObservationSet& data);

/// Conditional normal at covariate row x.
NormalParams conditional(const RegressionParams& params, const CovariateRow& x);

double log_density(double y, const NormalParams& params);
double density(double y, const NormalParams& params);
double density(double y, const RegressionParams& params, const CovariateRow& x);

/// First and second partial derivatives of the density in the observation.
double density_dy(double y, const NormalParams& params);
double density_dy(double y, const RegressionParams& params, const CovariateRow& x);
double density_d2y(double y, const NormalParams& params);
double density_d2y(double y, const RegressionParams& params, const CovariateRow& x);

/// log of int f(t)^(1+gamma) dt = -(gamma/2) log(2 pi sigma2) - log(1+gamma)/2.
double log_power_integral(double sigma2, double gamma);
double power_integral(const NormalParams& params, double gamma);
double power_integral(const RegressionParams& params, double gamma);

/// C_gamma = (int f^(1+gamma))^(gamma/(1+gamma)), the gamma-divergence normalizer.
double log_gamma_norm_constant(double sigma2, double gamma);
double gamma_norm_constant(const NormalParams& params, double gamma);
double gamma_norm_constant(const RegressionParams& params, double gamma);

}  // namespace hsrobust
