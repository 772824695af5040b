#include "hsrobust/comparators.hpp"

#include "hsrobust/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace hsrobust {

std::string_view to_string(VarianceEstimator v) { return v == VarianceEstimator::Model ? "model" : "sandwich"; }

VarianceEstimator parse_variance_estimator(std::string_view name) {
    if (name == "model") return VarianceEstimator::Model;
    if (name == "sandwich") return VarianceEstimator::Sandwich;
    throw InvalidArgument("unknown variance estimator '" + std::string(name) + "' (expected model|sandwich)");
}

SandwichVariance sandwich(const ObservationSet& data, const FitResult& fit) {
    validate(data);
    if (fit.lambda > 0.0) throw InvalidArgument("sandwich variance needs a smooth (unpenalized) fit");
    const auto n = data.size();
    Eigen::MatrixXd bread, meat;
    if (!fit.is_regression()) {
        if (data.has_covariates()) throw InvalidArgument("normal-model fit with covariate data");
        const auto& p = fit.normal();
        bread = Eigen::MatrixXd::Zero(2, 2);
        meat = Eigen::MatrixXd::Zero(2, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto pd = param_derivatives(data.y(i), p.mu, p.sigma2, fit.kind, fit.gamma);
            bread += pd.hess;
            meat += pd.grad * pd.grad.transpose();
        }
    } else {
        if (!data.has_covariates()) throw InvalidArgument("regression fit needs covariates");
        const auto& p = fit.regression();
        const auto k = p.beta.size();
        const auto d = k + 2;
        bread = Eigen::MatrixXd::Zero(d, d);
        meat = Eigen::MatrixXd::Zero(d, d);
        Eigen::VectorXd z(d);
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto x = data.X->row(i);
            const double m = p.intercept + x.dot(p.beta.transpose());
            const auto pd = param_derivatives(data.y(i), m, p.sigma2, fit.kind, fit.gamma);
            // theta -> (m, s) is linear, so the chain rule has no curvature term.
            jac.setZero();
            jac(0, 0) = 1.0;
            jac.col(0).segment(1, k) = x.transpose();
            jac(d - 1, 1) = 1.0;
            z = jac * pd.grad;
            bread += jac * pd.hess * jac.transpose();
            meat += z * z.transpose();
        }
    }
    bread /= static_cast<double>(n);
    meat /= static_cast<double>(n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bread);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-12 * sv.maxCoeff())) throw SingularInformation("bread matrix is singular");
    const Eigen::MatrixXd inv = bread.inverse();
    SandwichVariance out;
    out.vcov = inv * meat * inv.transpose() / static_cast<double>(n);
    out.vcov = 0.5 * (out.vcov + out.vcov.transpose());
    out.bread = std::move(bread);
    out.meat = std::move(meat);
    return out;
}

Eigen::Matrix2d model_variance(const FitResult& fit, Eigen::Index n) {
    if (fit.is_regression() || (fit.kind != DivergenceKind::DPD && fit.gamma != 0.0)) {
        throw InvalidArgument("model-based variance is available for normal-model DPD fits");
    }
    if (n < 1) throw InvalidArgument("sample size must be positive");
    const double g = fit.gamma;
    const double s = fit.normal().sigma2;
    const double a = 1.0 + g;
    const double b = 1.0 + 2.0 * g;
    const double log2pis = std::log(2.0 * std::numbers::pi * s);
    // int u u' f^(1+gamma) and int u u' f^(1+2 gamma) with u the score of f.
    const double ca = std::exp(-0.5 * g * log2pis) / std::sqrt(a);
    const double cb = std::exp(-g * log2pis) / std::sqrt(b);
    const double xi = -ca * g / (2.0 * a * s);
    const double j_mu = ca / (a * s);
    const double j_s = ca * (2.0 + g * g) / (4.0 * a * a * s * s);
    const double k_mu = cb / (b * s);
    const double k_s = cb * (2.0 + 4.0 * g * g) / (4.0 * b * b * s * s) - xi * xi;
    Eigen::Matrix2d v = Eigen::Matrix2d::Zero();
    v(0, 0) = k_mu / (j_mu * j_mu);
    v(1, 1) = k_s / (j_s * j_s);
    return v / static_cast<double>(n);
}

Eigen::MatrixXd estimate_vcov(const ObservationSet& data, const FitResult& fit, VarianceEstimator which) {
    if (which == VarianceEstimator::Model) return model_variance(fit, data.size());
    return sandwich(data, fit).vcov;
}

double wald_multiplier(double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + level));
}

WaldInterval wald_interval(const FitResult& fit, const Eigen::MatrixXd& vcov, Eigen::Index coordinate,
                           double level) {
    Eigen::VectorXd theta;
    if (fit.is_regression()) {
        const auto& p = fit.regression();
        theta.resize(p.beta.size() + 2);
        theta << p.intercept, p.beta, p.sigma2;
    } else {
        theta = Eigen::Vector2d(fit.normal().mu, fit.normal().sigma2);
    }
    if (coordinate < 0 || coordinate >= theta.size() || vcov.rows() != theta.size() || vcov.cols() != theta.size()) {
        throw InvalidArgument("coordinate or covariance shape does not match the fit");
    }
    const double var = vcov(coordinate, coordinate);
    if (!(var >= 0.0) || !std::isfinite(var)) throw InvalidArgument("variance entry must be finite and non-negative");
    const double half = wald_multiplier(level) * std::sqrt(var);
    return {theta(coordinate) - half, theta(coordinate) + half, level};
}

WaldInterval wald_interval(const FitResult& fit, const SandwichVariance& var, Eigen::Index coordinate,
                           double level) {
    return wald_interval(fit, var.vcov, coordinate, level);
}

std::vector<double> mse_scores(const GridFits& fits, const ObservationSet& data, const NormalParams& pilot,
                               VarianceEstimator variance) {
    std::vector<double> scores(fits.fits.size(), std::numeric_limits<double>::quiet_NaN());
    const double log_sd_pilot = 0.5 * std::log(pilot.sigma2);
    for (std::size_t k = 0; k < fits.fits.size(); ++k) {
        if (!fits.fits[k]) continue;
        const auto& f = *fits.fits[k];
        const auto& p = f.normal();
        Eigen::MatrixXd v;
        try {
            v = estimate_vcov(data, f, variance);
        } catch (const SingularInformation&) {
            continue;
        }
        // Var(log sigma) = Var(sigma2) / (4 sigma2^2) by the delta method.
        const double trace = v(0, 0) + v(1, 1) / (4.0 * p.sigma2 * p.sigma2);
        const double dmu = p.mu - pilot.mu;
        const double dlog = 0.5 * std::log(p.sigma2) - log_sd_pilot;
        scores[k] = dmu * dmu + dlog * dlog + trace;
    }
    return scores;
}

namespace {

NormalParams pilot_fit(const GridFits& fits, const ObservationSet& data, const ComparatorOptions& options) {
    for (std::size_t k = 0; k < fits.grid.size(); ++k) {
        if (fits.grid.values[k] == options.pilot_gamma && fits.fits[k]) return fits.fits[k]->normal();
    }
    try {
        return fit_normal_at(data, DivergenceKind::DPD, options.pilot_gamma, std::nullopt, options.select.fit)
            .normal();
    } catch (const std::runtime_error& e) {
        throw SelectionFailure(std::string("pilot fit failed: ") + e.what());
    }
}

void require_dpd_grid(const GridFits& fits) {
    for (const auto& f : fits.fits) {
        if (f && (f->is_regression() || f->kind != DivergenceKind::DPD)) {
            throw InvalidArgument("OWJ/IWJ selection applies to normal-model DPD fits");
        }
    }
}

}  // namespace

SelectionResult select_gamma_owj(const GridFits& fits, const ObservationSet& data,
                                 const ComparatorOptions& options) {
    require_dpd_grid(fits);
    const auto pilot = pilot_fit(fits, data, options);
    auto res = select_from_scores(fits, mse_scores(fits, data, pilot, options.variance));
    res.rounds = 1;
    return res;
}

SelectionResult select_gamma_owj(const ObservationSet& data, const GammaGrid& grid,
                                 const ComparatorOptions& options) {
    return select_gamma_owj(fit_grid(data, DivergenceKind::DPD, grid, options.select), data, options);
}

SelectionResult select_gamma_iwj(const GridFits& fits, const ObservationSet& data,
                                 const ComparatorOptions& options) {
    if (options.max_rounds < 1) throw InvalidArgument("max_rounds must be at least one");
    auto res = select_gamma_owj(fits, data, options);
    while (res.rounds < options.max_rounds) {
        const auto previous = res.index_opt;
        auto next = select_from_scores(fits, mse_scores(fits, data, res.fit_opt().normal(), options.variance));
        next.rounds = res.rounds + 1;
        res = std::move(next);
        if (res.index_opt == previous) break;
    }
    return res;
}

SelectionResult select_gamma_iwj(const ObservationSet& data, const GammaGrid& grid,
                                 const ComparatorOptions& options) {
    return select_gamma_iwj(fit_grid(data, DivergenceKind::DPD, grid, options.select), data, options);
}

}  // namespace hsrobust
