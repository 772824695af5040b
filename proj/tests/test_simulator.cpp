#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsrobust/errors.hpp"
#include "hsrobust/simulator.hpp"

#include <cmath>
#include <sstream>

using namespace hsrobust;

namespace {

SimDesign small_design(int reps) {
    SimDesign d;
    d.replications = reps;
    d.grid = GammaGrid::range(0.0, 0.05, 0.7);
    d.methods = {Method::hs(), Method::owj(), Method::iwj(), Method::fixed(0.1), Method::fixed(0.5)};
    return d;
}

}  // namespace

TEST_CASE("contamination counts") {
    CHECK(contamination_count(10, 0.5, ContaminationRule::Floor) == 5);
    CHECK(contamination_count(100, 0.15, ContaminationRule::Floor) == 15);
    CHECK(contamination_count(100, 0.05, ContaminationRule::Floor) == 5);
    CHECK(contamination_count(100, 0.0, ContaminationRule::Floor) == 0);
    CHECK(contamination_count(100, 0.0, ContaminationRule::AtLeastOne) == 1);
    CHECK(contamination_count(100, 0.1, ContaminationRule::AtLeastOne) == 10);
    CHECK(contamination_count(7, 0.1, ContaminationRule::Floor) == 0);
    CHECK(parse_contamination_rule("floor") == ContaminationRule::Floor);
    CHECK(parse_contamination_rule("at-least-one") == ContaminationRule::AtLeastOne);
    CHECK(to_string(ContaminationRule::AtLeastOne) == "at-least-one");
    CHECK_THROWS_AS(parse_contamination_rule("ceil"), InvalidArgument);
}

TEST_CASE("replication draws are shifted and reproducible") {
    SimDesign d;
    d.n = 10;
    const auto clean = draw_replication(d, 0.0, 3);
    const auto dirty = draw_replication(d, 0.5, 3);
    CHECK(clean == draw_replication(d, 0.0, 3));
    CHECK(clean != draw_replication(d, 0.0, 4));
    for (int i = 0; i < 10; ++i) CHECK(dirty(i) - clean(i) == doctest::Approx(i < 5 ? 7.0 : 0.0));
    d.seed = 2;
    CHECK(clean != draw_replication(d, 0.0, 3));
}

TEST_CASE("method labels and parsing") {
    CHECK(method_label(Method::hs()) == "HS");
    CHECK(method_label(Method::fixed(0.1)) == "gamma=0.1");
    CHECK(parse_method("iwj").kind == MethodKind::IWJ);
    CHECK(parse_method("OWJ").kind == MethodKind::OWJ);
    CHECK(parse_method("fixed:0.3").gamma == 0.3);
    CHECK(parse_method("0.5").gamma == 0.5);
    CHECK_THROWS_AS(parse_method("best"), InvalidArgument);
    CHECK_THROWS_AS(parse_method("fixed:-1"), InvalidArgument);
}

TEST_CASE("design validation") {
    SimDesign d;
    d.n = 2;
    CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
    d = {};
    d.omegas = {1.0};
    CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
    d = {};
    d.replications = 0;
    CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
    d = {};
    d.methods.clear();
    CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
    d = {};
    d.level = 1.0;
    CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
}

TEST_CASE("results do not depend on the thread count") {
    auto d = small_design(40);
    d.threads = 1;
    const auto one = run_design(d);
    d.threads = 3;
    const auto three = run_design(d);
    CHECK(table1_csv(one) == table1_csv(three));
    CHECK(summary_csv(one) == summary_csv(three));
    CHECK(summary_csv(run_design(d)) == summary_csv(three));
    d.seed = 9;
    CHECK(summary_csv(run_design(d)) != summary_csv(three));
}

TEST_CASE("clean-data summaries agree with asymptotics") {
    auto d = small_design(400);
    d.omegas = {0.0};
    d.methods = {Method::fixed(0.1), Method::fixed(0.5)};
    const auto rep = run_design(d);
    for (double g : {0.1, 0.5}) {
        const auto& row = rep.at(0.0, Method::fixed(g));
        CHECK(row.successes == 400);
        // sd of mu_hat = sqrt((1+g)^3/(1+2g)^(3/2) / n)
        const double sd = std::sqrt(std::pow(1 + g, 3) / std::pow(1 + 2 * g, 1.5) / 100.0);
        CHECK(std::abs(row.rmse_x100.value - 100 * sd) < 4 * row.rmse_x100.se);
        CHECK(std::abs(row.cp_percent.value - 95.0) < 4 * row.cp_percent.se);
        CHECK(row.al_x100.value == doctest::Approx(2 * 1.96 * 100 * sd).epsilon(0.05));
        CHECK(row.mean_gamma.value == doctest::Approx(g));
    }
}

TEST_CASE("contamination hurts the small fixed gamma most") {
    auto d = small_design(100);
    d.omegas = {0.1};
    const auto rep = run_design(d);
    CHECK(rep.at(0.1, Method::fixed(0.1)).rmse_x100.value > rep.at(0.1, Method::hs()).rmse_x100.value);
    CHECK(rep.at(0.1, Method::fixed(0.1)).cp_percent.value < 80.0);
    CHECK(rep.at(0.1, Method::hs()).mean_gamma.value > 0.1);
    CHECK_THROWS(rep.at(0.2, Method::hs()));
}

TEST_CASE("table layouts") {
    auto d = small_design(5);
    d.omegas = {0.0, 0.1};
    const auto rep = run_design(d);
    std::istringstream t1(table1_csv(rep));
    std::string line;
    std::getline(t1, line);
    CHECK(line == "block,omega,HS,OWJ,IWJ,gamma=0.1,gamma=0.5");
    int rows = 0;
    while (std::getline(t1, line)) ++rows;
    CHECK(rows == 6);
    std::istringstream t2(table2_csv(run_table2(d)));
    std::getline(t2, line);
    CHECK(line == "omega,HS,OWJ,IWJ");
}

TEST_CASE("excess failures raise a harness error") {
    auto d = small_design(10);
    d.omegas = {0.1};
    d.methods = {Method::fixed(0.375)};
    d.comparator.select.fit.max_iter = 1;
    CHECK_THROWS_AS(run_design(d), HarnessError);
    d.max_failure_rate = 1.0;
    const auto rep = run_design(d);
    CHECK(rep.rows[0].failures == 10);
    CHECK(rep.failure_log.size() == 10);
}
