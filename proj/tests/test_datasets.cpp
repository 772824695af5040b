#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsrobust/datasets.hpp"
#include "hsrobust/errors.hpp"
#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <string>

using namespace hsrobust;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& body) {
    const auto path = fs::temp_directory_path() / ("hsrobust_test_" + name);
    std::ofstream(path) << body;
    return path;
}

std::string boston_path() { return testing::env_or("BOSTON_CSV", ""); }

std::string message_of(auto&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("newcomb data") {
    const auto d = load_newcomb();
    REQUIRE(d.y.size() == 66);
    CHECK(d.y.minCoeff() == -44.0);
    CHECK(!d.X);
    CHECK((d.y.array() < 0).count() == 2);
    CHECK(d.y.mean() == doctest::Approx(26.2121).epsilon(1e-4));
}

TEST_CASE("column standardization round-trips") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 10, 2, 20, 3, 40, 4, 80;
    const Eigen::MatrixXd original = X;
    const auto st = standardize_columns(X, {"a", "b"});
    CHECK(X.colwise().mean().cwiseAbs().maxCoeff() < 1e-14);
    for (int k = 0; k < 2; ++k) CHECK(std::sqrt(X.col(k).squaredNorm() / 3.0) == doctest::Approx(1.0));
    CHECK(st.invert(X).isApprox(original, 1e-14));
    CHECK(st.apply(original).isApprox(X, 1e-14));
    Eigen::MatrixXd flat(3, 2);
    flat << 1, 5, 2, 5, 3, 5;
    CHECK(message_of([&] { standardize_columns(flat, {"a", "tax"}); }).find("tax") != std::string::npos);
}

TEST_CASE("generic csv ingestion") {
    const auto path = write_temp("ok.csv", "\xEF\xBB\xBF\"x1\",X2,y\r\n1,2,3\r\n4,5,6.5\r\n7,8.25,9\r\n");
    const auto t = read_numeric_csv(path.string());
    CHECK(t.header == std::vector<std::string>{"x1", "X2", "y"});
    CHECK(t.values.rows() == 3);
    CHECK(t.values(1, 2) == 6.5);
    CHECK(t.column("x2") == 1);
    CHECK_THROWS_AS(t.column("z"), IngestionError);

    const auto sample = load_csv_sample(path.string(), "X2");
    CHECK(sample.y == Eigen::Vector3d(2, 5, 8.25));
    const auto reg = load_csv_regression(path.string());
    CHECK(reg.X->cols() == 2);
    CHECK(reg.y == Eigen::Vector3d(3, 6.5, 9));
    CHECK(reg.feature_names == std::vector<std::string>{"x1", "X2"});
    fs::remove(path);
}

TEST_CASE("ingestion errors name the offending column") {
    const auto bad = write_temp("bad.csv", "a,b\n1,2\n3,oops\n");
    const auto msg = message_of([&] { read_numeric_csv(bad.string()); });
    CHECK(msg.find("'b'") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
    CHECK_THROWS_AS(read_numeric_csv(bad.string()), IngestionError);
    const auto ragged = write_temp("ragged.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(read_numeric_csv(ragged.string()), IngestionError);
    CHECK_THROWS_AS(read_numeric_csv("/nonexistent/file.csv"), IngestionError);
    const auto empty = write_temp("empty.csv", "");
    CHECK_THROWS_AS(read_numeric_csv(empty.string()), IngestionError);
    for (const auto& p : {bad, ragged, empty}) fs::remove(p);
}

TEST_CASE("boston layout on a synthetic file") {
    std::string body = "Crim,zn,indus,chas,nox,rm,age,dis,rad,tax,ptratio,b,lstat,PRICE\n";
    for (int i = 0; i < 12; ++i) {
        for (int k = 0; k < 13; ++k) body += std::to_string(k == 3 ? i % 2 : (i + 1) * (k + 1) + (i * i) % 7) + ",";
        body += std::to_string(20 + i) + "\n";
    }
    const auto path = write_temp("mini_boston.csv", body);
    BostonOptions opt;
    opt.column_map["medv"] = "PRICE";
    std::string warned;
    opt.warn = [&](const std::string& m) { warned = m; };
    const auto d = load_boston(path.string(), opt);
    CHECK(warned.find("12") != std::string::npos);
    REQUIRE(d.X->cols() == 25);
    CHECK(d.feature_names[0] == "crim");
    CHECK(d.feature_names[13] == "crim^2");
    CHECK(d.feature_names[24] == "lstat^2");
    CHECK(d.y(0) == 20.0);
    opt.column_map.clear();
    CHECK(message_of([&] { load_boston(path.string(), opt); }).find("medv") != std::string::npos);
    fs::remove(path);
}

TEST_CASE("boston data") {
    const auto path = boston_path();
    if (path.empty() || !fs::exists(path)) {
        MESSAGE("BOSTON_CSV not set; skipping");
        return;
    }
    BostonOptions opt;
    opt.warn = [](const std::string& m) { FAIL(m); };
    const auto d = load_boston(path, opt);
    REQUIRE(d.y.size() == 506);
    REQUIRE(d.X->cols() == 25);
    CHECK(boston_covariates().size() == 13);
    for (Eigen::Index k = 0; k < 25; ++k) {
        const auto col = d.X->col(k);
        CHECK(std::abs(col.mean()) < 1e-10);
        CHECK(std::abs(std::sqrt((col.array() - col.mean()).square().sum() / 505.0) - 1.0) < 1e-10);
    }
    const auto raw = d.standardization->invert(*d.X);
    const auto table = read_numeric_csv(path);
    CHECK(std::abs(raw(0, 0) - table.values(0, 0)) < 1e-10);
    CHECK(std::abs(raw(0, 13) - table.values(0, 0) * table.values(0, 0)) < 1e-10);
    CHECK(d.y.maxCoeff() == 50.0);
    opt.standardize_response = true;
    const auto s = load_boston(path, opt);
    CHECK(std::abs(s.y.mean()) < 1e-10);
    CHECK(s.standardization->y_sd.has_value());
}
