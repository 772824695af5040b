#include "hsrobust/estimators.hpp"

#include "hsrobust/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace hsrobust {

namespace {

double median_of(std::vector<double> v) {
    const auto n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

void require_location_scale(const ObservationSet& data) {
    validate(data);
    if (data.has_covariates()) throw InvalidArgument("normal model does not take covariates");
    if (data.size() < 3) throw InvalidArgument("normal model fit needs at least three observations");
}

double shifted_sum(const Eigen::VectorXd& y, const NormalParams& p, DivergenceKind kind, double gamma) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) total += shifted_value(y(i), p.mu, p.sigma2, kind, gamma);
    return total;
}

// Classical reweighting update; used when the Newton step is unusable.
NormalParams fixed_point_step(const Eigen::VectorXd& y, const NormalParams& p, DivergenceKind kind,
                              double gamma) {
    const auto n = static_cast<double>(y.size());
    Eigen::ArrayXd w = (gamma * (-0.5 * (y.array() - p.mu).square() / p.sigma2)).exp();
    const double sw = w.sum();
    const double mu = (w * y.array()).sum() / sw;
    const double wr2 = (w * (y.array() - mu).square()).sum();
    double s = 0.0;
    if (kind == DivergenceKind::DPD) {
        // Weights above omit the (2 pi s)^(-gamma/2) factor; restore it for the
        // comparison with the integral term.
        const double scale = std::exp(-0.5 * gamma * std::log(2.0 * std::numbers::pi * p.sigma2));
        const double q = std::exp(log_power_integral(p.sigma2, gamma) - std::log1p(gamma));
        const double denom = sw * scale - n * gamma * q;
        s = denom > 0.0 ? wr2 * scale / denom : wr2 / sw;
    } else {
        s = (1.0 + gamma) * wr2 / sw;
    }
    return {mu, s};
}

Eigen::Vector2d to_log_scale_gradient(const NormalObjective& obj, double s) {
    return {obj.grad(0), s * obj.grad(1)};
}

Eigen::Matrix2d to_log_scale_hessian(const NormalObjective& obj, double s) {
    Eigen::Matrix2d h;
    h(0, 0) = obj.hess(0, 0);
    h(0, 1) = h(1, 0) = s * obj.hess(0, 1);
    h(1, 1) = s * s * obj.hess(1, 1) + s * obj.grad(1);
    return h;
}

}  // namespace

NormalObjective evaluate_normal(const ObservationSet& data, const NormalParams& params, DivergenceKind kind,
                                double gamma) {
    NormalObjective out;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        const auto pd = param_derivatives(data.y(i), params.mu, params.sigma2, kind, gamma);
        out.value += pd.value;
        out.shifted += pd.shifted;
        out.grad += pd.grad;
        out.hess += pd.hess;
    }
    return out;
}

NormalParams robust_start(const Eigen::VectorXd& y) {
    std::vector<double> v(y.data(), y.data() + y.size());
    const double med = median_of(v);
    for (auto& x : v) x = std::abs(x - med);
    const double mad = 1.4826 * median_of(v);
    double s = mad * mad;
    if (s <= kMinVariance) {
        const double mean = y.mean();
        s = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    }
    if (s <= kMinVariance) throw DegenerateFit("data have zero spread");
    return {med, s};
}

FitResult fit_normal_mle(const ObservationSet& data) {
    require_location_scale(data);
    const double mu = data.y.mean();
    const double s = (data.y.array() - mu).square().mean();
    if (s <= kMinVariance) throw DegenerateFit("maximum-likelihood variance collapsed");
    const NormalParams p{mu, s};
    const auto obj = evaluate_normal(data, p, DivergenceKind::DPD, 0.0);
    FitResult fit;
    fit.kind = DivergenceKind::DPD;
    fit.gamma = 0.0;
    fit.params = p;
    fit.objective = obj.value;
    fit.converged = true;
    fit.grad_norm = to_log_scale_gradient(obj, s).cwiseAbs().maxCoeff();
    fit.hessian = obj.hess;
    return fit;
}

FitResult fit_normal(const ObservationSet& data, const DivergenceConfig& cfg, std::optional<NormalParams> init,
                     const FitOptions& options) {
    cfg.validate();
    return fit_normal_at(data, cfg.kind, cfg.gamma, init, options);
}

FitResult fit_normal_at(const ObservationSet& data, DivergenceKind kind, double gamma,
                        std::optional<NormalParams> init, const FitOptions& options) {
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("gamma must be non-negative and finite");
    require_location_scale(data);
    if (gamma == 0.0) {
        auto fit = fit_normal_mle(data);
        fit.kind = kind;
        return fit;
    }

    NormalParams p = init ? *init : robust_start(data.y);
    validate(p);

    FitResult fit;
    fit.kind = kind;
    fit.gamma = gamma;
    int iter = 0;
    for (; iter < options.max_iter; ++iter) {
        const auto obj = evaluate_normal(data, p, kind, gamma);
        const Eigen::Vector2d g = to_log_scale_gradient(obj, p.sigma2);
        fit.grad_norm = g.cwiseAbs().maxCoeff();
        if (fit.grad_norm <= options.grad_tol) {
            fit.converged = true;
            break;
        }

        const Eigen::Matrix2d h = to_log_scale_hessian(obj, p.sigma2);
        bool stepped = false;
        if (h(0, 0) < 0.0 && h.determinant() > 0.0) {
            Eigen::Vector2d delta = -h.ldlt().solve(g);
            const double cap = 2.0;
            if (std::abs(delta(1)) > cap) delta *= cap / std::abs(delta(1));
            const double slope = g.dot(delta);
            const double slack = 1e-13 * (1.0 + std::abs(obj.shifted));
            double t = 1.0;
            for (int k = 0; k < 40 && !stepped; ++k, t *= 0.5) {
                const NormalParams trial{p.mu + t * delta(0), p.sigma2 * std::exp(t * delta(1))};
                if (!(trial.sigma2 > kMinVariance) || !std::isfinite(trial.mu)) continue;
                const double f = shifted_sum(data.y, trial, kind, gamma);
                if (f >= obj.shifted + 1e-4 * t * slope - slack) {
                    p = trial;
                    stepped = true;
                }
            }
        }
        if (!stepped) {
            p = fixed_point_step(data.y, p, kind, gamma);
            if (!std::isfinite(p.mu) || !std::isfinite(p.sigma2)) {
                throw FitFailure("reweighting step produced non-finite parameters", {p.mu, p.sigma2});
            }
        }
        if (p.sigma2 <= kMinVariance) throw DegenerateFit("variance collapsed during fitting");
    }
    fit.iterations = iter;
    if (!fit.converged) {
        throw FitFailure("normal-model fit did not converge within " + std::to_string(options.max_iter) +
                             " iterations",
                         {p.mu, p.sigma2});
    }
    const auto obj = evaluate_normal(data, p, kind, gamma);
    fit.params = p;
    fit.objective = obj.value;
    fit.hessian = obj.hess;
    return fit;
}

}  // namespace hsrobust
