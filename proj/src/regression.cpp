#include "hsrobust/errors.hpp"
#include "hsrobust/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace hsrobust {

namespace {

struct Scaling {
    Eigen::RowVectorXd x_mean;
    Eigen::RowVectorXd x_sd;
    double y_mean = 0.0;
    double y_sd = 1.0;
};

// Regression data on the scale the solver works in.
struct Problem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Scaling scaling;
};

struct State {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    double s = 1.0;
};

double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

Problem make_problem(const ObservationSet& data, bool standardize) {
    validate(data);
    if (!data.has_covariates()) throw InvalidArgument("regression requires a covariate matrix");
    Problem pr;
    const auto p = data.X->cols();
    pr.scaling.x_mean = Eigen::RowVectorXd::Zero(p);
    pr.scaling.x_sd = Eigen::RowVectorXd::Ones(p);
    if (standardize) {
        pr.scaling.x_mean = data.X->colwise().mean();
        for (Eigen::Index k = 0; k < p; ++k) {
            pr.scaling.x_sd(k) = sample_sd(data.X->col(k));
            if (!(pr.scaling.x_sd(k) > 0.0)) {
                throw InvalidArgument("covariate column " + std::to_string(k) + " is constant");
            }
        }
        pr.scaling.y_mean = data.y.mean();
        pr.scaling.y_sd = sample_sd(data.y);
        if (!(pr.scaling.y_sd > 0.0)) throw InvalidArgument("response is constant");
    }
    pr.X = (data.X->rowwise() - pr.scaling.x_mean).array().rowwise() / pr.scaling.x_sd.array();
    pr.y = (data.y.array() - pr.scaling.y_mean) / pr.scaling.y_sd;
    return pr;
}

State to_internal(const RegressionParams& p, const Scaling& sc) {
    State st;
    st.beta = p.beta.array() * sc.x_sd.transpose().array() / sc.y_sd;
    st.intercept = (p.intercept + sc.x_mean.dot(p.beta.transpose()) - sc.y_mean) / sc.y_sd;
    st.s = p.sigma2 / (sc.y_sd * sc.y_sd);
    return st;
}

RegressionParams to_original(const State& st, const Scaling& sc) {
    RegressionParams p;
    p.beta = st.beta.array() * sc.y_sd / sc.x_sd.transpose().array();
    p.intercept = sc.y_mean + sc.y_sd * st.intercept - sc.x_mean.dot(p.beta.transpose());
    p.sigma2 = st.s * sc.y_sd * sc.y_sd;
    return p;
}

RegressionParams as_params(const State& st) { return {st.intercept, st.beta, st.s}; }

double penalty(double lambda, const Eigen::VectorXd& beta) {
    const double l1 = beta.lpNorm<1>();
    return l1 == 0.0 ? 0.0 : lambda * l1;
}

double log_phi_const(double s) { return -0.5 * std::log(2.0 * std::numbers::pi * s); }

double loss(const Problem& pr, const State& st, double gamma, double lambda) {
    const Eigen::ArrayXd r = (pr.y.array() - st.intercept) - (pr.X * st.beta).array();
    const Eigen::ArrayXd lf = log_phi_const(st.s) - 0.5 * r.square() / st.s;
    double smooth = 0.0;
    if (gamma == 0.0) {
        smooth = -lf.mean();
    } else {
        const Eigen::ArrayXd z = gamma * lf;
        const double zmax = z.maxCoeff();
        const double log_mean = zmax + std::log((z - zmax).exp().mean());
        smooth = -log_mean / gamma - gamma / (2.0 * (1.0 + gamma)) * std::log(st.s);
    }
    return smooth + penalty(lambda, st.beta);
}

// Normalized weights proportional to phi_i^gamma.
Eigen::ArrayXd mm_weights(const Eigen::ArrayXd& r, double s, double gamma) {
    const auto n = r.size();
    if (gamma == 0.0) return Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::ArrayXd z = -0.5 * gamma * r.square() / s;
    z = (z - z.maxCoeff()).exp();
    return z / z.sum();
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// Minimizes sum_i w_i r_i^2 / 2 + thresh |beta|_1 over (intercept, beta) with
// sum_i w_i = 1. The intercept is profiled out by weighted centering, so
// coordinate descent runs on the p x p weighted Gram matrix. r is returned
// as y - intercept - X beta.
void weighted_lasso(const Problem& pr, const Eigen::ArrayXd& w, double thresh, State& st, Eigen::ArrayXd& r,
                    const RegressionOptions& opt) {
    const auto p = pr.X.cols();
    const Eigen::VectorXd xbar = pr.X.transpose() * w.matrix();
    const double ybar = (w * pr.y.array()).sum();
    const Eigen::MatrixXd wx = pr.X.array().colwise() * w;
    const Eigen::MatrixXd gram = pr.X.transpose() * wx - xbar * xbar.transpose();
    const Eigen::VectorXd c = wx.transpose() * pr.y - xbar * ybar;
    Eigen::VectorXd gb = gram * st.beta;
    for (int sweep = 0; sweep < opt.cd_max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) {
            const double a = gram(k, k);
            if (a <= 0.0) continue;
            const double old = st.beta(k);
            const double z = c(k) - gb(k) + a * old;
            const double updated = soft_threshold(z, thresh) / a;
            if (updated != old) {
                gb += (updated - old) * gram.col(k);
                st.beta(k) = updated;
                max_change = std::max(max_change, std::abs(updated - old) * std::sqrt(a));
            }
        }
        if (max_change <= opt.cd_tol) break;
    }
    st.intercept = ybar - xbar.dot(st.beta);
    r = (pr.y.array() - st.intercept) - (pr.X * st.beta).array();
}

struct SolveOutcome {
    State state;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

SolveOutcome solve(const Problem& pr, double gamma, double lambda, State st, const RegressionOptions& opt) {
    Eigen::ArrayXd r = (pr.y.array() - st.intercept) - (pr.X * st.beta).array();
    double f_old = loss(pr, st, gamma, lambda);
    SolveOutcome out;
    for (int it = 1; it <= opt.mm_max_iter; ++it) {
        const Eigen::ArrayXd w = mm_weights(r, st.s, gamma);
        weighted_lasso(pr, w, std::isinf(lambda) ? lambda : lambda * st.s, st, r, opt);
        st.s = (1.0 + gamma) * (w * r.square()).sum();
        if (!(st.s > kMinVariance)) throw DegenerateFit("regression variance collapsed");
        const double f_new = loss(pr, st, gamma, lambda);
        out.iterations = it;
        if (std::abs(f_old - f_new) <= opt.mm_tol * (1.0 + std::abs(f_new))) {
            out.converged = true;
            f_old = f_new;
            break;
        }
        f_old = f_new;
    }
    out.state = std::move(st);
    out.objective = f_old;
    return out;
}

State null_start(const Problem& pr) {
    State st;
    st.beta = Eigen::VectorXd::Zero(pr.X.cols());
    std::vector<double> v(pr.y.data(), pr.y.data() + pr.y.size());
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    st.intercept = *mid;
    for (auto& x : v) x = std::abs(x - st.intercept);
    std::nth_element(v.begin(), mid, v.end());
    const double mad = 1.4826 * *mid;
    st.s = mad * mad > kMinVariance ? mad * mad : (pr.y.array() - pr.y.mean()).square().mean();
    if (!(st.s > kMinVariance)) throw DegenerateFit("response has zero spread");
    return st;
}

// Largest |d loss / d beta_k| at a fit with beta = 0.
double kkt_lambda_bound(const Problem& pr, const State& st, double gamma) {
    const Eigen::ArrayXd r = (pr.y.array() - st.intercept) - (pr.X * st.beta).array();
    const Eigen::ArrayXd w = mm_weights(r, st.s, gamma);
    return (pr.X.transpose() * (w * r).matrix()).cwiseAbs().maxCoeff() / st.s;
}

// Worst violation of the subgradient optimality conditions for beta.
double kkt_violation(const Problem& pr, const State& st, double gamma, double lambda) {
    const Eigen::ArrayXd r = (pr.y.array() - st.intercept) - (pr.X * st.beta).array();
    const Eigen::ArrayXd w = mm_weights(r, st.s, gamma);
    const Eigen::VectorXd g = -(pr.X.transpose() * (w * r).matrix()) / st.s;
    double worst = std::abs((w * r).sum()) / st.s;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double v = st.beta(k) == 0.0 ? std::max(0.0, std::abs(g(k)) - lambda)
                                           : std::abs(g(k) + lambda * (st.beta(k) > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

Eigen::MatrixXd regression_hessian(const ObservationSet& data, const RegressionParams& p, double gamma) {
    const auto k = p.beta.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k + 2, k + 2);
    Eigen::VectorXd z(k + 2);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double m = p.intercept + data.X->row(i).dot(p.beta.transpose());
        const auto pd = param_derivatives(data.y(i), m, p.sigma2, DivergenceKind::GammaDiv, gamma);
        z(0) = 1.0;
        z.segment(1, k) = data.X->row(i).transpose();
        z(k + 1) = 0.0;
        h.topLeftCorner(k + 1, k + 1) += pd.hess(0, 0) * z.head(k + 1) * z.head(k + 1).transpose();
        h.col(k + 1).head(k + 1) += pd.hess(0, 1) * z.head(k + 1);
        h(k + 1, k + 1) += pd.hess(1, 1);
    }
    h.row(k + 1).head(k + 1) = h.col(k + 1).head(k + 1).transpose();
    return h;
}

FitResult package(const ObservationSet& data, const Problem& pr, const SolveOutcome& sol, double gamma,
                  double lambda) {
    FitResult fit;
    fit.kind = DivergenceKind::GammaDiv;
    fit.gamma = gamma;
    fit.lambda = lambda;
    const RegressionParams original = to_original(sol.state, pr.scaling);
    fit.params = original;
    fit.standardized = as_params(sol.state);
    fit.objective = sol.objective;
    fit.iterations = sol.iterations;
    fit.converged = sol.converged;
    fit.grad_norm = kkt_violation(pr, sol.state, gamma, lambda);
    fit.hessian = regression_hessian(data, original, gamma);
    return fit;
}

void require_regression_inputs(double gamma, double lambda) {
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("gamma must be non-negative and finite");
    if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidArgument("lambda must be non-negative and finite");
}

double validation_loss(const ObservationSet& data, const std::vector<Eigen::Index>& rows,
                       const RegressionParams& p, double gamma) {
    double total = 0.0;
    for (auto i : rows) {
        const double m = p.intercept + data.X->row(i).dot(p.beta.transpose());
        total -= shifted_value(data.y(i), m, p.sigma2, DivergenceKind::GammaDiv, gamma);
    }
    return total / static_cast<double>(rows.size());
}

ObservationSet subset(const ObservationSet& data, const std::vector<Eigen::Index>& rows) {
    ObservationSet out;
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    out.X = Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), data.X->cols());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out.y(jj) = data.y(rows[j]);
        out.X->row(jj) = data.X->row(rows[j]);
    }
    return out;
}

}  // namespace

double regression_objective(const ObservationSet& data, const RegressionParams& params, double gamma,
                            double lambda) {
    require_regression_inputs(gamma, lambda);
    validate(params);
    const Problem pr = make_problem(data, false);
    if (params.beta.size() != pr.X.cols()) throw InvalidArgument("beta length does not match covariates");
    return loss(pr, State{params.intercept, params.beta, params.sigma2}, gamma, lambda);
}

FitResult fit_regression_gamma(const ObservationSet& data, const DivergenceConfig& cfg,
                               std::optional<RegressionParams> init, const RegressionOptions& options) {
    cfg.validate();
    if (cfg.kind != DivergenceKind::GammaDiv) {
        throw InvalidArgument("regularized regression is implemented for the gamma-divergence only");
    }
    return fit_regression_at(data, cfg.gamma, cfg.lambda, std::move(init), options);
}

FitResult fit_regression_at(const ObservationSet& data, double gamma, double lambda,
                            std::optional<RegressionParams> init, const RegressionOptions& options) {
    require_regression_inputs(gamma, lambda);
    const Problem pr = make_problem(data, options.standardize);
    State start;
    if (init) {
        validate(*init);
        if (init->beta.size() != pr.X.cols()) throw InvalidArgument("initial beta length does not match covariates");
        start = to_internal(*init, pr.scaling);
    } else {
        start = solve(pr, gamma, std::numeric_limits<double>::infinity(), null_start(pr), options).state;
    }
    const auto sol = solve(pr, gamma, lambda, start, options);
    if (!sol.converged) {
        const auto p = to_original(sol.state, pr.scaling);
        std::vector<double> last{p.intercept};
        last.insert(last.end(), p.beta.data(), p.beta.data() + p.beta.size());
        last.push_back(p.sigma2);
        throw FitFailure("MM iterations did not converge", std::move(last));
    }
    return package(data, pr, sol, gamma, lambda);
}

double lambda_max(const ObservationSet& data, double gamma, const RegressionOptions& options) {
    require_regression_inputs(gamma, 0.0);
    const Problem pr = make_problem(data, options.standardize);
    const auto sol = solve(pr, gamma, std::numeric_limits<double>::infinity(), null_start(pr), options);
    return kkt_lambda_bound(pr, sol.state, gamma);
}

std::vector<double> default_lambda_grid(const ObservationSet& data, double gamma, int count, double ratio,
                                        const RegressionOptions& options) {
    if (count < 1) throw InvalidArgument("lambda grid needs at least one point");
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("lambda ratio must lie in (0, 1)");
    const double top = lambda_max(data, gamma, options);
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(j) / (count - 1);
        grid[static_cast<std::size_t>(j)] = top * std::pow(ratio, frac);
    }
    return grid;
}

namespace {

// Fits along the path and stops at the first lambda that does not converge.
std::vector<FitResult> partial_path(const ObservationSet& data, double gamma, const std::vector<double>& lambdas,
                                    const RegressionOptions& options, double* failed_lambda) {
    require_regression_inputs(gamma, 0.0);
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        require_regression_inputs(gamma, lambdas[j]);
        if (j > 0 && lambdas[j] > lambdas[j - 1]) throw InvalidArgument("lambda path must be descending");
    }
    const Problem pr = make_problem(data, options.standardize);
    State st = solve(pr, gamma, std::numeric_limits<double>::infinity(), null_start(pr), options).state;
    std::vector<FitResult> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        const auto sol = solve(pr, gamma, lambda, st, options);
        if (!sol.converged) {
            if (failed_lambda) *failed_lambda = lambda;
            break;
        }
        st = sol.state;
        out.push_back(package(data, pr, sol, gamma, lambda));
    }
    return out;
}

}  // namespace

std::vector<FitResult> fit_regression_path(const ObservationSet& data, double gamma,
                                           const std::vector<double>& lambdas, const RegressionOptions& options) {
    double failed = 0.0;
    auto out = partial_path(data, gamma, lambdas, options, &failed);
    if (out.size() < lambdas.size()) throw FitFailure("MM iterations did not converge on the lambda path", {failed});
    return out;
}

void CvConfig::validate() const {
    if (folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
    if (nlambda < 1) throw InvalidArgument("lambda grid needs at least one point");
    if (!(lambda_ratio > 0.0 && lambda_ratio < 1.0)) throw InvalidArgument("lambda ratio must lie in (0, 1)");
    for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
        if (!(lambda_grid[j] > 0.0) || !std::isfinite(lambda_grid[j])) {
            throw InvalidArgument("lambda grid values must be positive and finite");
        }
        if (j > 0 && !(lambda_grid[j] < lambda_grid[j - 1])) {
            throw InvalidArgument("lambda grid must be strictly descending");
        }
    }
}

std::vector<int> assign_folds(Eigen::Index n, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
    if (n < 2L * folds) {
        throw InvalidConfiguration("every fold needs at least two observations (n = " + std::to_string(n) +
                                   ", folds = " + std::to_string(folds) + ")");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < order.size(); ++j) fold[static_cast<std::size_t>(order[j])] = static_cast<int>(j % folds);
    return fold;
}

CvResult cv_select_lambda(const ObservationSet& data, const DivergenceConfig& cfg, const CvConfig& cv,
                          const RegressionOptions& options) {
    cfg.validate();
    if (cfg.kind != DivergenceKind::GammaDiv) {
        throw InvalidArgument("regularized regression is implemented for the gamma-divergence only");
    }
    return cv_select_lambda(data, cfg.gamma, cv, options);
}

CvResult cv_select_lambda(const ObservationSet& data, double gamma, const CvConfig& cv,
                          const RegressionOptions& options) {
    require_regression_inputs(gamma, 0.0);
    cv.validate();
    validate(data);
    if (!data.has_covariates()) throw InvalidArgument("regression requires a covariate matrix");

    CvResult res;
    res.lambdas = cv.lambda_grid.empty()
                      ? default_lambda_grid(data, gamma, cv.nlambda, cv.lambda_ratio, options)
                      : cv.lambda_grid;
    const auto fold_of = assign_folds(data.size(), cv.folds, cv.seed);

    const auto nl = res.lambdas.size();
    std::vector<double> total(nl, 0.0);
    std::vector<int> counted(nl, 0);
    for (int f = 0; f < cv.folds; ++f) {
        std::vector<Eigen::Index> train, held;
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            (fold_of[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
        }
        const ObservationSet train_set = subset(data, train);
        std::vector<FitResult> path;
        try {
            path = partial_path(train_set, gamma, res.lambdas, options, nullptr);
        } catch (const DegenerateFit&) {
            continue;
        }
        for (std::size_t j = 0; j < path.size(); ++j) {
            total[j] += validation_loss(data, held, path[j].regression(), gamma);
            ++counted[j];
        }
    }
    res.cv_curve.resize(nl);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nl; ++j) {
        res.cv_curve[j] = counted[j] == cv.folds ? total[j] / cv.folds : std::numeric_limits<double>::infinity();
        if (res.cv_curve[j] < best) {
            best = res.cv_curve[j];
            res.lambda_opt = res.lambdas[j];
        }
    }
    if (!std::isfinite(best)) throw SelectionFailure("cross-validation failed at every lambda");
    return res;
}

}  // namespace hsrobust
