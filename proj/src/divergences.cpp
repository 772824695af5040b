#include "hsrobust/divergences.hpp"

#include "hsrobust/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hsrobust {

std::string_view to_string(DivergenceKind kind) {
    return kind == DivergenceKind::DPD ? "dpd" : "gamma";
}

DivergenceKind parse_divergence_kind(std::string_view name) {
    if (name == "dpd") return DivergenceKind::DPD;
    if (name == "gamma") return DivergenceKind::GammaDiv;
    throw InvalidArgument("unknown divergence '" + std::string(name) + "' (expected dpd|gamma)");
}

void DivergenceConfig::validate() const {
    if (!std::isfinite(gamma) || gamma <= 0.0) {
        throw InvalidArgument("gamma must be strictly positive and finite");
    }
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw InvalidArgument("lambda must be non-negative and finite");
    }
}

namespace {

double log_phi(double r, double s) {
    return -0.5 * std::log(2.0 * std::numbers::pi * s) - 0.5 * r * r / s;
}

// log of the DPD integral term (2 pi s)^(-gamma/2) (1+gamma)^(-3/2).
double log_dpd_integral_term(double s, double gamma) {
    return log_power_integral(s, gamma) - std::log1p(gamma);
}

PerObsTerms dpd_terms(double y, const NormalParams& p, double gamma) {
    const double r = y - p.mu;
    const double s = p.sigma2;
    const double fg = std::exp(gamma * log_phi(r, s));
    return {fg / gamma - std::exp(log_dpd_integral_term(s, gamma)), -fg * r / s,
            fg * (gamma * r * r / s - 1.0) / s};
}

PerObsTerms gammadiv_terms(double y, const NormalParams& p, double gamma) {
    const double r = y - p.mu;
    const double s = p.sigma2;
    const double scaled = std::exp(gamma * log_phi(r, s) - log_gamma_norm_constant(s, gamma));
    return {scaled / gamma, -scaled * r / s, scaled * (gamma * r * r / s - 1.0) / s};
}

PerObsTerms loglik_terms(double y, const NormalParams& p) {
    const double r = y - p.mu;
    return {log_phi(r, p.sigma2), -r / p.sigma2, -1.0 / p.sigma2};
}

void require_kind(const DivergenceConfig& cfg, DivergenceKind expected) {
    cfg.validate();
    if (cfg.kind != expected) throw InvalidArgument("divergence kind does not match the term requested");
}

void require_finite_y(double y) {
    if (!std::isfinite(y)) throw InvalidArgument("y must be finite");
}

}  // namespace

PerObsTerms dpd_term(double y, const NormalParams& params, const DivergenceConfig& cfg) {
    require_kind(cfg, DivergenceKind::DPD);
    require_finite_y(y);
    validate(params);
    return dpd_terms(y, params, cfg.gamma);
}

PerObsTerms dpd_term(double y, const RegressionParams& params, const DivergenceConfig& cfg,
                     const CovariateRow& x) {
    validate(params);
    return dpd_term(y, conditional(params, x), cfg);
}

PerObsTerms gammadiv_term(double y, const NormalParams& params, const DivergenceConfig& cfg) {
    require_kind(cfg, DivergenceKind::GammaDiv);
    require_finite_y(y);
    validate(params);
    return gammadiv_terms(y, params, cfg.gamma);
}

PerObsTerms gammadiv_term(double y, const RegressionParams& params, const DivergenceConfig& cfg,
                          const CovariateRow& x) {
    validate(params);
    return gammadiv_term(y, conditional(params, x), cfg);
}

PerObsTerms loglik_limit_term(double y, const NormalParams& params) {
    require_finite_y(y);
    validate(params);
    return loglik_terms(y, params);
}

PerObsTerms loglik_limit_term(double y, const RegressionParams& params, const CovariateRow& x) {
    validate(params);
    return loglik_limit_term(y, conditional(params, x));
}

PerObsTerms divergence_term(double y, const NormalParams& params, DivergenceKind kind, double gamma) {
    if (gamma == 0.0) return loglik_limit_term(y, params);
    return kind == DivergenceKind::DPD ? dpd_term(y, params, {kind, gamma, 0.0})
                                       : gammadiv_term(y, params, {kind, gamma, 0.0});
}

double shifted_value(double y, double m, double s, DivergenceKind kind, double gamma) {
    const double lf = log_phi(y - m, s);
    if (gamma == 0.0) return lf;
    if (kind == DivergenceKind::DPD) {
        return std::expm1(gamma * lf) / gamma - std::exp(log_dpd_integral_term(s, gamma));
    }
    return std::expm1(gamma * lf - log_gamma_norm_constant(s, gamma)) / gamma;
}

ParamDerivatives param_derivatives(double y, double m, double s, DivergenceKind kind, double gamma) {
    const double r = y - m;
    const double lf = log_phi(r, s);
    const Eigen::Vector2d u(r / s, (r * r - s) / (2.0 * s * s));
    Eigen::Matrix2d hl;
    hl << -1.0 / s, -r / (s * s), -r / (s * s), 1.0 / (2.0 * s * s) - r * r / (s * s * s);

    ParamDerivatives out;
    if (gamma == 0.0) {
        out.value = lf;
        out.shifted = lf;
        out.grad = u;
        out.hess = hl;
    } else if (kind == DivergenceKind::DPD) {
        const double fg = std::exp(gamma * lf);
        const double q = std::exp(log_dpd_integral_term(s, gamma));
        out.value = fg / gamma - q;
        out.shifted = std::expm1(gamma * lf) / gamma - q;
        out.grad = fg * u;
        out.grad(1) += gamma * q / (2.0 * s);
        out.hess = fg * (gamma * u * u.transpose() + hl);
        out.hess(1, 1) -= gamma * (gamma + 2.0) * q / (4.0 * s * s);
    } else {
        const double log_c = log_gamma_norm_constant(s, gamma);
        const double kappa = gamma * gamma / (2.0 * (1.0 + gamma));
        const double d = std::exp(gamma * lf - log_c) / gamma;
        const Eigen::Vector2d a = gamma * u + Eigen::Vector2d(0.0, kappa / s);
        out.value = d;
        out.shifted = std::expm1(gamma * lf - log_c) / gamma;
        out.grad = d * a;
        out.hess = d * (a * a.transpose() + gamma * hl);
        out.hess(1, 1) -= d * kappa / (s * s);
    }
    // The term depends on y only through r = y - m, and the parts that do
    // not (integral, normalizer) are free of m, so d/dy = -d/dm.
    out.grad_dy = -out.hess.col(0);
    return out;
}

}  // namespace hsrobust
