#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsrobust/divergences.hpp"
#include "hsrobust/errors.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace hsrobust;

namespace {

struct Point {
    double y, m, s, gamma;
};

std::vector<Point> random_points(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mu(-3.0, 3.0), logs(std::log(0.05), std::log(20.0)),
        z(-4.0, 4.0), g(0.01, 1.0);
    std::vector<Point> out;
    while (static_cast<int>(out.size()) < count) {
        const double m = mu(rng), s = std::exp(logs(rng)), zz = z(rng);
        if (std::abs(zz) < 0.05) continue;  // D' vanishes at the mode
        out.push_back({m + zz * std::sqrt(s), m, s, g(rng)});
    }
    return out;
}

}  // namespace

TEST_CASE("y-derivatives of every term agree with finite differences") {
    for (const auto& pt : random_points(100, 11)) {
        NormalParams p{pt.m, pt.s};
        const double h = 1e-3 * std::sqrt(pt.s);
        auto check = [&](auto term) {
            auto d0 = [&](double t) { return term(t).d; };
            auto d1 = [&](double t) { return term(t).d1; };
            const PerObsTerms at = term(pt.y);
            CHECK(testing::rel_error(testing::derivative_fine(d0, pt.y, h), at.d1) < 1e-7);
            CHECK(testing::rel_error(testing::derivative_fine(d1, pt.y, h), at.d2) < 1e-7);
        };
        check([&](double t) { return dpd_term(t, p, {DivergenceKind::DPD, pt.gamma, 0.0}); });
        check([&](double t) { return gammadiv_term(t, p, {DivergenceKind::GammaDiv, pt.gamma, 0.0}); });
        check([&](double t) { return loglik_limit_term(t, p); });
    }
}

TEST_CASE("regression terms equal the normal terms at the conditional mean") {
    RegressionParams p{0.2, Eigen::Vector3d(1.0, 0.0, -0.5), 1.7};
    Eigen::RowVector3d x(0.4, 9.0, -1.0);
    const NormalParams c = conditional(p, x);
    for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
        DivergenceConfig cfg{kind, 0.3, 0.0};
        const auto a = kind == DivergenceKind::DPD ? dpd_term(1.1, p, cfg, x) : gammadiv_term(1.1, p, cfg, x);
        const auto b = divergence_term(1.1, c, kind, 0.3);
        CHECK(a.d == doctest::Approx(b.d));
        CHECK(a.d1 == doctest::Approx(b.d1));
        CHECK(a.d2 == doctest::Approx(b.d2));
    }
    const auto l = loglik_limit_term(1.1, p, x);
    CHECK(l.d == doctest::Approx(divergence_term(1.1, c, DivergenceKind::DPD, 0.0).d));
}

TEST_CASE("closed forms of the DPD and gamma terms") {
    const double y = 0.4, mu = -0.2, s = 1.3, g = 0.25;
    const double f = std::exp(-(y - mu) * (y - mu) / (2 * s)) / std::sqrt(2 * std::numbers::pi * s);
    const double dpd = std::pow(f, g) / g - std::pow(2 * std::numbers::pi * s, -g / 2) * std::pow(1 + g, -1.5);
    CHECK(dpd_term(y, {mu, s}, {DivergenceKind::DPD, g, 0.0}).d == doctest::Approx(dpd).epsilon(1e-13));
    const double c = std::pow(std::pow(2 * std::numbers::pi * s, -g / 2) / std::sqrt(1 + g), g / (1 + g));
    CHECK(gammadiv_term(y, {mu, s}, {DivergenceKind::GammaDiv, g, 0.0}).d ==
          doctest::Approx(std::pow(f, g) / (g * c)).epsilon(1e-13));
}

TEST_CASE("parameter derivatives agree with finite differences") {
    for (const auto& pt : random_points(60, 12)) {
        for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
            for (double g : {0.0, pt.gamma}) {
                const auto pd = param_derivatives(pt.y, pt.m, pt.s, kind, g);
                const double hm = 1e-3 * std::sqrt(pt.s), hs = 1e-3 * pt.s;
                auto v_m = [&](double m) { return param_derivatives(pt.y, m, pt.s, kind, g).value; };
                auto v_s = [&](double s) { return param_derivatives(pt.y, pt.m, s, kind, g).value; };
                auto g_m = [&](double m) { return param_derivatives(pt.y, m, pt.s, kind, g).grad; };
                auto g_s = [&](double s) { return param_derivatives(pt.y, pt.m, s, kind, g).grad; };
                auto g_y = [&](double y) { return param_derivatives(y, pt.m, pt.s, kind, g).grad; };
                const double scale = pd.grad.cwiseAbs().maxCoeff();
                CHECK(std::abs(testing::derivative_fine(v_m, pt.m, hm) - pd.grad(0)) < 1e-7 * scale);
                CHECK(std::abs(testing::derivative_fine(v_s, pt.s, hs) - pd.grad(1)) < 1e-7 * scale);
                const double hscale = pd.hess.cwiseAbs().maxCoeff();
                for (int k = 0; k < 2; ++k) {
                    auto gm = [&](double m) { return g_m(m)(k); };
                    auto gs = [&](double s) { return g_s(s)(k); };
                    auto gy = [&](double y) { return g_y(y)(k); };
                    CHECK(std::abs(testing::derivative_fine(gm, pt.m, hm) - pd.hess(k, 0)) < 1e-7 * hscale);
                    CHECK(std::abs(testing::derivative_fine(gs, pt.s, hs) - pd.hess(k, 1)) < 1e-7 * hscale);
                    CHECK(std::abs(testing::derivative_fine(gy, pt.y, hm) - pd.grad_dy(k)) < 1e-7 * hscale);
                }
                CHECK(pd.hess(0, 1) == doctest::Approx(pd.hess(1, 0)));
                CHECK(pd.shifted == doctest::Approx(shifted_value(pt.y, pt.m, pt.s, kind, g)).epsilon(1e-14));
                if (g > 0) CHECK(pd.value - pd.shifted == doctest::Approx(1.0 / g).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("shifted value tends to the log-likelihood as gamma -> 0") {
    const double lf = divergence_term(0.7, {0.1, 2.0}, DivergenceKind::DPD, 0.0).d;
    for (auto kind : {DivergenceKind::DPD, DivergenceKind::GammaDiv}) {
        const double limit = kind == DivergenceKind::DPD ? lf - 1.0 : lf;
        double prev = std::abs(shifted_value(0.7, 0.1, 2.0, kind, 1e-2) - limit);
        for (double g : {1e-3, 1e-4, 1e-6}) {
            const double gap = std::abs(shifted_value(0.7, 0.1, 2.0, kind, g) - limit);
            CHECK(gap < prev);
            prev = gap;
        }
        CHECK(prev < 1e-5);
    }
}

TEST_CASE("configuration errors") {
    NormalParams p{0.0, 1.0};
    CHECK_THROWS_AS(dpd_term(0.0, p, {DivergenceKind::DPD, 0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(dpd_term(0.0, p, {DivergenceKind::DPD, -0.1, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(dpd_term(0.0, p, {DivergenceKind::GammaDiv, 0.1, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(gammadiv_term(0.0, p, {DivergenceKind::DPD, 0.1, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(dpd_term(0.0, p, {DivergenceKind::DPD, 0.1, -1.0}), InvalidArgument);
    CHECK_THROWS_AS(dpd_term(std::nan(""), p, {DivergenceKind::DPD, 0.1, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(dpd_term(0.0, NormalParams{0.0, 0.0}, {DivergenceKind::DPD, 0.1, 0.0}), InvalidArgument);
    CHECK(parse_divergence_kind("dpd") == DivergenceKind::DPD);
    CHECK(parse_divergence_kind("gamma") == DivergenceKind::GammaDiv);
    CHECK_THROWS_AS(parse_divergence_kind("kl"), InvalidArgument);
}
