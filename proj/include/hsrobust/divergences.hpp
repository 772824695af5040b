#pragma once

#include "hsrobust/models.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace hsrobust {

enum class DivergenceKind { DPD, GammaDiv };

std::string_view to_string(DivergenceKind kind);
DivergenceKind parse_divergence_kind(std::string_view name);

/// Divergence family, its tuning parameter and the optional l1 weight used by
/// the regression path. gamma must be strictly positive: the gamma -> 0 limit
/// is the log-likelihood and goes through loglik_limit_term / the MLE path.
struct DivergenceConfig {
    DivergenceKind kind = DivergenceKind::DPD;
    double gamma = 0.1;
    double lambda = 0.0;

    void validate() const;
};

/// D_gamma(y; theta) and its first two partial derivatives in y.
struct PerObsTerms {
    double d = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

PerObsTerms dpd_term(double y, const NormalParams& params, const DivergenceConfig& cfg);
PerObsTerms dpd_term(double y, const RegressionParams& params, const DivergenceConfig& cfg,
                     const CovariateRow& x);

/// Transformed (additive) gamma-divergence term f^gamma / (gamma C_gamma).
PerObsTerms gammadiv_term(double y, const NormalParams& params, const DivergenceConfig& cfg);
PerObsTerms gammadiv_term(double y, const RegressionParams& params, const DivergenceConfig& cfg,
                          const CovariateRow& x);

PerObsTerms loglik_limit_term(double y, const NormalParams& params);
PerObsTerms loglik_limit_term(double y, const RegressionParams& params, const CovariateRow& x);

/// Dispatches on kind; gamma == 0 selects the log-likelihood limit.
PerObsTerms divergence_term(double y, const NormalParams& params, DivergenceKind kind, double gamma);

/// Value and derivatives of one observation's term with respect to the
/// conditional mean m and the variance s = sigma2.
///
/// `shifted` equals `value` minus the gamma-only constant 1/gamma, evaluated
/// with expm1 so that sums stay accurate as gamma -> 0 (it tends to log f,
/// or log f - 1 for DPD whose integral term tends to 1).
/// `grad_dy` is d/dy of `grad`, i.e. S'(y; theta) in (m, s) coordinates.
struct ParamDerivatives {
    double value = 0.0;
    double shifted = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
    Eigen::Vector2d grad_dy = Eigen::Vector2d::Zero();
};

/// gamma == 0 gives the log-likelihood. Inputs are assumed validated.
ParamDerivatives param_derivatives(double y, double m, double s, DivergenceKind kind, double gamma);

/// Only the shifted value; the hot path of line searches.
double shifted_value(double y, double m, double s, DivergenceKind kind, double gamma);

}  // namespace hsrobust
