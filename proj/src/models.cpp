#include "hsrobust/models.hpp"

#include "hsrobust/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hsrobust {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw InvalidArgument(std::string(what) + " must be finite");
    }
}

void require_variance(double sigma2) {
    require_finite(sigma2, "sigma2");
    if (sigma2 <= kMinVariance) {
        throw InvalidArgument("sigma2 must exceed " + std::to_string(kMinVariance));
    }
}

void require_gamma(double gamma) {
    require_finite(gamma, "gamma");
    if (gamma < 0.0) throw InvalidArgument("gamma must be non-negative");
}

}  // namespace

void validate(const NormalParams& params) {
    require_finite(params.mu, "mu");
    require_variance(params.sigma2);
}

void validate(const RegressionParams& params) {
    if (params.beta.size() < 1) throw InvalidArgument("beta must have at least one entry");
    if (!params.beta.allFinite()) throw InvalidArgument("beta must be finite");
    require_finite(params.intercept, "intercept");
    require_variance(params.sigma2);
}

void validate(const ObservationSet& data) {
    if (data.y.size() < 2) throw InvalidArgument("need at least two observations");
    if (!data.y.allFinite()) throw InvalidArgument("responses must be finite");
    if (data.X) {
        if (data.X->rows() != data.y.size()) {
            throw InvalidArgument("covariate row count must equal the number of responses");
        }
        if (data.X->cols() < 1) throw InvalidArgument("covariate matrix has no columns");
        if (!data.X->allFinite()) throw InvalidArgument("covariates must be finite");
    }
}

NormalParams conditional(const RegressionParams& params, const CovariateRow& x) {
    if (x.size() != params.beta.size()) {
        throw InvalidArgument("covariate row length does not match beta");
    }
    return {params.intercept + x.dot(params.beta.transpose()), params.sigma2};
}

double log_density(double y, const NormalParams& params) {
    require_finite(y, "y");
    validate(params);
    const double r = y - params.mu;
    return -0.5 * std::log(2.0 * std::numbers::pi * params.sigma2) - 0.5 * r * r / params.sigma2;
}

double density(double y, const NormalParams& params) { return std::exp(log_density(y, params)); }

double density(double y, const RegressionParams& params, const CovariateRow& x) {
    return density(y, conditional(params, x));
}

double density_dy(double y, const NormalParams& params) {
    const double f = density(y, params);
    return -f * (y - params.mu) / params.sigma2;
}

double density_dy(double y, const RegressionParams& params, const CovariateRow& x) {
    return density_dy(y, conditional(params, x));
}

double density_d2y(double y, const NormalParams& params) {
    const double f = density(y, params);
    const double z2 = (y - params.mu) * (y - params.mu) / params.sigma2;
    return f * (z2 - 1.0) / params.sigma2;
}

double density_d2y(double y, const RegressionParams& params, const CovariateRow& x) {
    return density_d2y(y, conditional(params, x));
}

double log_power_integral(double sigma2, double gamma) {
    require_variance(sigma2);
    require_gamma(gamma);
    return -0.5 * gamma * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * std::log1p(gamma);
}

double power_integral(const NormalParams& params, double gamma) {
    validate(params);
    return std::exp(log_power_integral(params.sigma2, gamma));
}

double power_integral(const RegressionParams& params, double gamma) {
    validate(params);
    return std::exp(log_power_integral(params.sigma2, gamma));
}

double log_gamma_norm_constant(double sigma2, double gamma) {
    return gamma / (1.0 + gamma) * log_power_integral(sigma2, gamma);
}

double gamma_norm_constant(const NormalParams& params, double gamma) {
    validate(params);
    return std::exp(log_gamma_norm_constant(params.sigma2, gamma));
}

double gamma_norm_constant(const RegressionParams& params, double gamma) {
    validate(params);
    return std::exp(log_gamma_norm_constant(params.sigma2, gamma));
}

}  // namespace hsrobust
