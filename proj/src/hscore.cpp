#include "hsrobust/hscore.hpp"

#include "hsrobust/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hsrobust {

GammaGrid GammaGrid::range(double start, double step, double end) {
    if (!std::isfinite(start) || !std::isfinite(step) || !std::isfinite(end)) {
        throw InvalidArgument("grid bounds must be finite");
    }
    if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
    if (end < start) throw InvalidArgument("grid end must not precede its start");
    const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
    GammaGrid grid;
    grid.values.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double v = start + static_cast<double>(k) * step;
        grid.values.push_back(std::round(v * 1e12) / 1e12);
    }
    grid.validate();
    return grid;
}

GammaGrid GammaGrid::parse(const std::string& spec) {
    auto number = [&](const std::string& token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != token.size()) throw InvalidArgument("malformed grid '" + spec + "'");
        return v;
    };
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() == 3) return range(number(parts[0]), number(parts[1]), number(parts[2]));
    if (parts.size() == 1) {
        GammaGrid grid;
        std::stringstream list(spec);
        for (std::string tok; std::getline(list, tok, ',');) grid.values.push_back(number(tok));
        grid.validate();
        return grid;
    }
    throw InvalidArgument("grid must be 'start:step:end' or a comma-separated list");
}

void GammaGrid::validate() const {
    if (values.empty()) throw InvalidArgument("gamma grid is empty");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]) || values[k] < 0.0) {
            throw InvalidArgument("gamma grid values must be finite and non-negative");
        }
        if (k > 0 && !(values[k] > values[k - 1])) throw InvalidArgument("gamma grid must be strictly increasing");
    }
}

namespace {

void require_scoring_data(const ObservationSet& data, const FitResult& fit) {
    if (data.y.size() < 1 || !data.y.allFinite()) throw InvalidArgument("scoring needs finite observations");
    if (fit.is_regression()) {
        if (!data.X || data.X->rows() != data.y.size() || data.X->cols() != fit.regression().beta.size()) {
            throw InvalidArgument("regression fit needs a matching covariate matrix");
        }
    } else if (data.X) {
        throw InvalidArgument("normal-model fit scored against data with covariates");
    }
}

NormalParams conditional_at(const ObservationSet& data, const FitResult& fit, Eigen::Index i) {
    if (!fit.is_regression()) return fit.normal();
    return conditional(fit.regression(), data.X->row(i));
}

}  // namespace

double hscore(const ObservationSet& data, const FitResult& fit) {
    require_scoring_data(data, fit);
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        const auto t = divergence_term(data.y(i), conditional_at(data, fit, i), fit.kind, fit.gamma);
        total += 2.0 * t.d2 + t.d1 * t.d1;
    }
    return total / static_cast<double>(data.y.size());
}

double hscore_at(const ObservationSet& data, const FitResult& fit, const DivergenceConfig& cfg) {
    cfg.validate();
    if (cfg.kind != fit.kind || cfg.gamma != fit.gamma) {
        throw InvalidArgument("fit was not produced under the supplied divergence configuration");
    }
    return hscore(data, fit);
}

double hscore_normal_dpd_closed(const ObservationSet& data, const FitResult& fit) {
    require_scoring_data(data, fit);
    if (fit.is_regression() || fit.kind != DivergenceKind::DPD) {
        throw InvalidArgument("closed form applies to normal-model DPD fits");
    }
    const double g = fit.gamma;
    const auto& p = fit.normal();
    const double s = p.sigma2;
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        const double r2 = (data.y(i) - p.mu) * (data.y(i) - p.mu);
        const double phi_g = std::pow(density(data.y(i), p), g);
        total += 2.0 * (g * r2 - s) / (s * s) * phi_g + r2 / (s * s) * phi_g * phi_g;
    }
    return total / static_cast<double>(data.y.size());
}

double hscore_regression_gamma_closed(const ObservationSet& data, const FitResult& fit) {
    require_scoring_data(data, fit);
    if (!fit.is_regression() || fit.kind != DivergenceKind::GammaDiv) {
        throw InvalidArgument("closed form applies to gamma-divergence regression fits");
    }
    const double g = fit.gamma;
    const auto& p = fit.regression();
    const double s = p.sigma2;
    const double c = gamma_norm_constant(p, g);
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        const auto x = data.X->row(i);
        const double r = data.y(i) - p.intercept - x.dot(p.beta.transpose());
        const double phi_g = std::pow(density(data.y(i), p, x), g);
        total += 2.0 * (g * r * r - s) / (s * s * c) * phi_g + r * r / (s * s * c * c) * phi_g * phi_g;
    }
    return total / static_cast<double>(data.y.size());
}

GridFits fit_grid(const ObservationSet& data, DivergenceKind kind, const GammaGrid& grid,
                  const SelectOptions& options) {
    grid.validate();
    GridFits out;
    out.grid = grid;
    out.fits.resize(grid.size());
    out.failures.resize(grid.size());
    std::optional<NormalParams> warm;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        try {
            auto fit = fit_normal_at(data, kind, grid.values[k], options.warm_start ? warm : std::nullopt,
                                     options.fit);
            warm = fit.normal();
            out.fits[k] = std::move(fit);
        } catch (const FitFailure& e) {
            out.failures[k] = e.what();
        } catch (const DegenerateFit& e) {
            out.failures[k] = e.what();
        }
    }
    return out;
}

SelectionResult select_from_scores(const GridFits& fits, std::vector<double> scores) {
    SelectionResult res;
    res.grid = fits.grid;
    res.fits = fits.fits;
    res.failures = fits.failures;
    res.scores = std::move(scores);
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t k = 0; k < res.scores.size(); ++k) {
        if (!std::isnan(res.scores[k]) && (!found || res.scores[k] < best)) {
            best = res.scores[k];
            res.index_opt = k;
            found = true;
        }
    }
    if (!found) throw SelectionFailure("every grid point failed");
    res.gamma_opt = res.grid.values[res.index_opt];
    return res;
}

SelectionResult select_gamma(const GridFits& fits, const ObservationSet& data) {
    std::vector<double> scores(fits.fits.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < fits.fits.size(); ++k) {
        if (fits.fits[k]) scores[k] = hscore(data, *fits.fits[k]);
    }
    return select_from_scores(fits, std::move(scores));
}

SelectionResult select_gamma(const ObservationSet& data, DivergenceKind kind, const GammaGrid& grid,
                             const SelectOptions& options) {
    return select_gamma(fit_grid(data, kind, grid, options), data);
}

FitResult fit_regression_cv(const ObservationSet& data, double gamma, const RegressionSelectOptions& options,
                            double* lambda_out) {
    const auto cv = cv_select_lambda(data, gamma, options.cv, options.regression);
    std::vector<double> path;
    for (double l : cv.lambdas) {
        if (l < cv.lambda_opt) break;
        path.push_back(l);
    }
    auto fits = fit_regression_path(data, gamma, path, options.regression);
    if (lambda_out) *lambda_out = cv.lambda_opt;
    return std::move(fits.back());
}

SelectionResult select_gamma_regression(const ObservationSet& data, const GammaGrid& grid,
                                        const RegressionSelectOptions& options) {
    grid.validate();
    GridFits fits;
    fits.grid = grid;
    fits.fits.resize(grid.size());
    fits.failures.resize(grid.size());
    std::vector<double> scores(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> lambdas(grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        try {
            auto fit = fit_regression_cv(data, grid.values[k], options, &lambdas[k]);
            scores[k] = hscore(data, fit);
            fits.fits[k] = std::move(fit);
        } catch (const FitFailure& e) {
            fits.failures[k] = e.what();
        } catch (const DegenerateFit& e) {
            fits.failures[k] = e.what();
        } catch (const SelectionFailure& e) {
            fits.failures[k] = e.what();
        }
    }
    auto res = select_from_scores(fits, std::move(scores));
    res.lambdas = std::move(lambdas);
    return res;
}

}  // namespace hsrobust
