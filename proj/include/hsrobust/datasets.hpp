#pragma once

#include "hsrobust/models.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hsrobust {

/// Per-column (mean, sd) used to standardize; sd is the sample sd (n - 1).
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::optional<double> y_mean;
    std::optional<double> y_sd;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& Z) const;
};

struct Dataset {
    std::string name;
    Eigen::VectorXd y;
    std::optional<Eigen::MatrixXd> X;
    std::vector<std::string> feature_names;
    std::optional<Standardization> standardization;

    ObservationSet observations() const;
};

/// Standardizes columns in place and returns the record. A column with
/// zero sd throws InvalidArgument naming it.
Standardization standardize_columns(Eigen::MatrixXd& X, const std::vector<std::string>& names);

/// Simon Newcomb's 66 passage-time measurements (coded as deviations from
/// 24800 ns, two gross outliers at -44 and -2).
Dataset load_newcomb();

struct BostonOptions {
    /// The H-score is not invariant to the scale of y once gamma > 0; medv
    /// is kept in its original units by default.
    bool standardize_response = false;
    /// Maps canonical lower-case names (crim, zn, ..., lstat, medv) to the
    /// header names used in the file. Unmapped names are matched
    /// case-insensitively.
    std::map<std::string, std::string> column_map;
    std::size_t expected_rows = 506;
    /// Receives non-fatal messages (row count mismatch). Defaults to stderr.
    std::function<void(const std::string&)> warn;
};

/// The 13 original covariates followed by squares of the 12 non-binary ones
/// (chas excluded), all standardized; response medv.
Dataset load_boston(const std::string& path, const BostonOptions& options = {});

/// Header plus an all-numeric body. Quoted fields and a UTF-8 BOM are
/// accepted; a non-numeric cell throws IngestionError naming its column.
struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;

    /// Case-insensitive; throws IngestionError when absent.
    Eigen::Index column(const std::string& name) const;
};

CsvTable read_numeric_csv(const std::string& path);

/// Location-scale data from one column (empty name: the first column).
Dataset load_csv_sample(const std::string& path, const std::string& column = {});

/// Regression data: `response` (empty: the last column) against every other
/// column, covariates unstandardized.
Dataset load_csv_regression(const std::string& path, const std::string& response = {});

/// Canonical covariate order used by load_boston.
const std::vector<std::string>& boston_covariates();

}  // namespace hsrobust
