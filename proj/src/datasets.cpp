#include "hsrobust/datasets.hpp"

#include "hsrobust/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hsrobust {

namespace {

constexpr std::array<double, 66> kNewcomb = {
    28, 26, 33, 24, 34, -44, 27, 16, 40, -2,  29, 22, 24, 21, 25, 30, 23, 29, 31, 19, 24, 20,
    36, 32, 36, 28, 25, 21,  28, 29, 37, 25, 28, 26, 30, 32, 36, 26, 30, 22, 36, 23, 27, 27,
    28, 27, 31, 27, 26, 33,  26, 32, 32, 24, 39, 28, 24, 25, 32, 25, 29, 27, 28, 29, 16, 23};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim_field(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
            out.push_back(trim_field(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(trim_field(field));
    return out;
}

double parse_cell(const std::string& cell, const std::string& column, std::size_t row) {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw IngestionError("column '" + column + "': cannot parse '" + cell + "' at data row " +
                             std::to_string(row + 1));
    }
    return v;
}

// Opens `path` and returns its header fields.
std::vector<std::string> open_csv(const std::string& path, std::ifstream& in) {
    in.open(path);
    if (!in) throw IngestionError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("'" + path + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split_row(line);
}

}  // namespace

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw InvalidArgument("column count does not match the standardization");
    return (X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Eigen::MatrixXd Standardization::invert(const Eigen::MatrixXd& Z) const {
    if (Z.cols() != mean.size()) throw InvalidArgument("column count does not match the standardization");
    return (Z.array().rowwise() * sd.transpose().array()).matrix().rowwise() + mean.transpose();
}

ObservationSet Dataset::observations() const { return {y, X}; }

Standardization standardize_columns(Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    if (X.rows() < 2) throw InvalidArgument("standardization needs at least two rows");
    Standardization st;
    st.mean = X.colwise().mean().transpose();
    st.sd.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double ss = (X.col(j).array() - st.mean(j)).square().sum();
        st.sd(j) = std::sqrt(ss / static_cast<double>(X.rows() - 1));
        if (!(st.sd(j) > 0.0)) {
            const auto label = j < static_cast<Eigen::Index>(names.size()) ? names[j] : std::to_string(j);
            throw InvalidArgument("column '" + label + "' is constant");
        }
    }
    X = st.apply(X);
    return st;
}

Dataset load_newcomb() {
    Dataset d;
    d.name = "newcomb";
    d.y = Eigen::Map<const Eigen::VectorXd>(kNewcomb.data(), kNewcomb.size());
    return d;
}

Eigen::Index CsvTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (lower(header[j]) == lower(name)) return static_cast<Eigen::Index>(j);
    }
    throw IngestionError("column '" + name + "' not found in header");
}

CsvTable read_numeric_csv(const std::string& path) {
    std::ifstream in;
    CsvTable t;
    t.header = open_csv(path, in);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = split_row(line);
        if (cells.size() != t.header.size()) {
            throw IngestionError("data row " + std::to_string(rows.size() + 1) + " has " +
                                 std::to_string(cells.size()) + " fields, header has " +
                                 std::to_string(t.header.size()));
        }
        std::vector<double> row;
        for (std::size_t j = 0; j < cells.size(); ++j) row.push_back(parse_cell(cells[j], t.header[j], rows.size()));
        rows.push_back(std::move(row));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return t;
}

Dataset load_csv_sample(const std::string& path, const std::string& column) {
    const auto t = read_numeric_csv(path);
    if (t.header.empty()) throw IngestionError("'" + path + "' has no columns");
    const auto j = column.empty() ? Eigen::Index{0} : t.column(column);
    Dataset d;
    d.name = path;
    d.y = t.values.col(j);
    return d;
}

Dataset load_csv_regression(const std::string& path, const std::string& response) {
    const auto t = read_numeric_csv(path);
    if (t.header.size() < 2) throw IngestionError("'" + path + "' needs a response and at least one covariate");
    const auto r = response.empty() ? static_cast<Eigen::Index>(t.header.size()) - 1 : t.column(response);
    Dataset d;
    d.name = path;
    d.y = t.values.col(r);
    Eigen::MatrixXd X(t.values.rows(), t.values.cols() - 1);
    for (Eigen::Index j = 0, c = 0; j < t.values.cols(); ++j) {
        if (j == r) continue;
        X.col(c++) = t.values.col(j);
        d.feature_names.push_back(t.header[static_cast<std::size_t>(j)]);
    }
    d.X = std::move(X);
    return d;
}

const std::vector<std::string>& boston_covariates() {
    static const std::vector<std::string> names = {"crim", "zn",  "indus", "chas",    "nox", "rm",   "age",
                                                    "dis",  "rad", "tax",   "ptratio", "b",   "lstat"};
    return names;
}

Dataset load_boston(const std::string& path, const BostonOptions& options) {
    std::ifstream in;
    const auto header = open_csv(path, in);
    std::string line;

    auto wanted = boston_covariates();
    wanted.push_back("medv");
    std::vector<std::size_t> index;
    for (const auto& name : wanted) {
        const auto mapped = options.column_map.count(name) ? options.column_map.at(name) : name;
        const auto it = std::find_if(header.begin(), header.end(),
                                     [&](const std::string& h) { return lower(h) == lower(mapped); });
        if (it == header.end()) throw IngestionError("column '" + mapped + "' not found in header");
        index.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = split_row(line);
        std::vector<double> row;
        for (std::size_t k = 0; k < wanted.size(); ++k) {
            if (index[k] >= cells.size()) {
                throw IngestionError("column '" + header[index[k]] + "': missing at data row " +
                                     std::to_string(rows.size() + 1));
            }
            row.push_back(parse_cell(cells[index[k]], header[index[k]], rows.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 3) throw IngestionError("'" + path + "' has too few data rows");
    if (options.expected_rows && rows.size() != options.expected_rows) {
        const auto msg = "boston: expected " + std::to_string(options.expected_rows) + " rows, read " +
                         std::to_string(rows.size());
        if (options.warn) {
            options.warn(msg);
        } else {
            std::cerr << "warning: " << msg << '\n';
        }
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto& base = boston_covariates();
    const auto p = static_cast<Eigen::Index>(base.size());
    Dataset d;
    d.name = "boston";
    d.feature_names = base;
    for (const auto& name : base) {
        if (name != "chas") d.feature_names.push_back(name + "^2");
    }
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(d.feature_names.size()));
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index col = p;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double v = rows[i][j];
            X(i, j) = v;
            if (base[j] != "chas") X(i, col++) = v * v;
        }
        d.y(i) = rows[i][p];
    }
    auto st = standardize_columns(X, d.feature_names);
    if (options.standardize_response) {
        Eigen::MatrixXd ym = d.y;
        const auto yst = standardize_columns(ym, {"medv"});
        d.y = ym.col(0);
        st.y_mean = yst.mean(0);
        st.y_sd = yst.sd(0);
    }
    d.X = std::move(X);
    d.standardization = std::move(st);
    return d;
}

}  // namespace hsrobust
