#include "hsrobust/errors.hpp"
#include "hsrobust/hscore.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <vector>

namespace hsrobust {

namespace {

struct Refit {
    NormalParams params;
    double profile = 0.0;
    double laplace = 0.0;
};

// Laplace-approximate log marginal in (mu, tau = log sigma2), where the
// prior is flat: H_tau = s^2 H_ss and H_mu,tau = s H_mu,s at a stationary point.
Eigen::Matrix2d hessian_mu_tau(const Eigen::Matrix2d& h, double s) {
    Eigen::Matrix2d out;
    out << h(0, 0), s * h(0, 1), s * h(1, 0), s * s * h(1, 1);
    return out;
}

Refit refit(const ObservationSet& data, const DivergenceConfig& cfg, const NormalParams& init,
            const FitOptions& options) {
    FitResult fit;
    try {
        fit = fit_normal(data, cfg, init, options);
    } catch (const std::runtime_error& e) {
        throw VerificationFailure(std::string("refit failed: ") + e.what());
    }
    const auto obj = evaluate_normal(data, fit.normal(), cfg.kind, cfg.gamma);
    const Eigen::Matrix2d neg_h = -hessian_mu_tau(obj.hess, fit.normal().sigma2);
    const double det = neg_h.determinant();
    if (!(det > 0.0)) throw VerificationFailure("Hessian at the refit is not negative definite");
    // The shifted sum differs from sum_j D(y_j) by n / gamma, which is free of y.
    return {fit.normal(), obj.shifted, obj.shifted - 0.5 * std::log(det)};
}

// Composite Gauss-Legendre nodes and weights on [-r, r].
void composite_rule(double r, int panels, std::vector<double>& x, std::vector<double>& w) {
    using rule = boost::math::quadrature::gauss<double, 10>;
    const auto& a = rule::abscissa();
    const auto& b = rule::weights();
    const double width = 2.0 * r / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = -r + (p + 0.5) * width;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double half = 0.5 * width;
            x.push_back(mid + half * a[k]);
            w.push_back(half * b[k]);
            if (a[k] != 0.0) {
                x.push_back(mid - half * a[k]);
                w.push_back(half * b[k]);
            }
        }
    }
}

struct Marginal {
    double d1 = 0.0;
    double d2 = 0.0;
};

// Posterior moments of D'(y_i) and D''(y_i) on a box of +-10 Laplace standard
// deviations around theta_hat.
Marginal marginal_derivatives(const ObservationSet& data, const DivergenceConfig& cfg, Eigen::Index i,
                              const NormalParams& theta, const Eigen::Matrix2d& hess) {
    const Eigen::Matrix2d cov = (-hessian_mu_tau(hess, theta.sigma2)).inverse();
    const Eigen::LLT<Eigen::Matrix2d> llt(cov);
    if (llt.info() != Eigen::Success) throw VerificationFailure("Laplace covariance is not positive definite");
    const Eigen::Matrix2d L = llt.matrixL();
    std::vector<double> z, wz;
    composite_rule(10.0, 6, z, wz);

    const double tau_hat = std::log(theta.sigma2);
    auto log_post = [&](double mu, double s) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < data.size(); ++j) total += shifted_value(data.y(j), mu, s, cfg.kind, cfg.gamma);
        return total;
    };
    const double base = log_post(theta.mu, theta.sigma2);
    double mass = 0.0, m1 = 0.0, m2 = 0.0, m11 = 0.0, edge = 0.0;
    for (std::size_t a = 0; a < z.size(); ++a) {
        for (std::size_t b = 0; b < z.size(); ++b) {
            const Eigen::Vector2d u = L * Eigen::Vector2d(z[a], z[b]);
            const double mu = theta.mu + u(0);
            const double s = std::exp(tau_hat + u(1));
            const double w = wz[a] * wz[b] * std::exp(log_post(mu, s) - base);
            if (a == 0 || b == 0 || a + 1 == z.size() || b + 1 == z.size()) edge = std::max(edge, w);
            const auto t = divergence_term(data.y(i), NormalParams{mu, s}, cfg.kind, cfg.gamma);
            mass += w;
            m1 += w * t.d1;
            m2 += w * t.d2;
            m11 += w * t.d1 * t.d1;
        }
    }
    if (!(mass > 0.0) || !std::isfinite(mass)) throw VerificationFailure("posterior quadrature failed");
    if (edge > 1e-6 * mass) throw VerificationFailure("posterior mass reaches the quadrature box edge");
    Marginal out;
    out.d1 = m1 / mass;
    out.d2 = m2 / mass + m11 / mass - out.d1 * out.d1;
    return out;
}

}  // namespace

Proposition1Check verify_proposition1(const ObservationSet& data, const DivergenceConfig& cfg, Eigen::Index i,
                                      double h) {
    cfg.validate();
    if (data.has_covariates()) throw InvalidArgument("verification is implemented for the normal model");
    if (i < 0 || i >= data.size()) throw InvalidArgument("observation index out of range");
    const double yi = data.y(i);
    if (!(h > 0.0)) h = 1e-4 * (1.0 + std::abs(yi));

    const FitOptions tight{1e-12, 500};
    FitResult base;
    try {
        base = fit_normal(data, cfg, std::nullopt, tight);
    } catch (const std::runtime_error& e) {
        throw VerificationFailure(std::string("fit failed: ") + e.what());
    }
    const NormalParams theta = base.normal();

    ObservationSet moved = data;
    moved.y(i) = yi + h;
    const Refit up = refit(moved, cfg, theta, tight);
    moved.y(i) = yi - h;
    const Refit down = refit(moved, cfg, theta, tight);
    const Refit mid = refit(data, cfg, theta, tight);

    Proposition1Check out;
    out.h = h;
    out.profile_d1 = (up.profile - down.profile) / (2.0 * h);
    out.profile_d2 = (up.profile - 2.0 * mid.profile + down.profile) / (h * h);
    out.laplace_d1 = (up.laplace - down.laplace) / (2.0 * h);
    out.laplace_d2 = (up.laplace - 2.0 * mid.laplace + down.laplace) / (h * h);

    const auto terms = divergence_term(yi, theta, cfg.kind, cfg.gamma);
    out.rhs_d1 = terms.d1;
    out.rhs_d2 = terms.d2;
    out.gap = std::abs(out.profile_d1 - out.rhs_d1);
    out.gap2 = std::abs(out.profile_d2 - out.rhs_d2);
    out.laplace_gap = std::abs(out.laplace_d1 - out.rhs_d1);
    out.laplace_gap2 = std::abs(out.laplace_d2 - out.rhs_d2);

    const auto marginal = marginal_derivatives(data, cfg, i, theta, base.hessian);
    out.marginal_d1 = marginal.d1;
    out.marginal_d2 = marginal.d2;
    out.marginal_gap = std::abs(out.marginal_d1 - out.rhs_d1);
    out.marginal_gap2 = std::abs(out.marginal_d2 - out.rhs_d2);

    out.dtheta_fd = Eigen::Vector2d((up.params.mu - down.params.mu) / (2.0 * h),
                                    (up.params.sigma2 - down.params.sigma2) / (2.0 * h));
    // Differentiating sum_j S(y_j; theta_hat(y)) = 0 in y_i gives
    // H d theta_hat / d y_i + S'(y_i) = 0.
    const auto pd = param_derivatives(yi, theta.mu, theta.sigma2, cfg.kind, cfg.gamma);
    const Eigen::Matrix2d hess = base.hessian;
    out.dtheta_ift = -hess.ldlt().solve(pd.grad_dy);
    out.dtheta_rel_error = (out.dtheta_fd - out.dtheta_ift).norm() / out.dtheta_ift.norm();
    return out;
}

}  // namespace hsrobust
