#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsrobust {

/// Raised for invalid parameters or inputs (non-finite values, negative
/// gamma, degenerate variance, mismatched shapes).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration that is individually valid but unusable together, e.g. a CV
/// split that leaves a fold with fewer than two observations.
class InvalidConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Optimizer did not reach its tolerance. `last_iterate` holds the final
/// parameter vector, (mu, sigma2) for the normal model.
class FitFailure : public std::runtime_error {
public:
    FitFailure(const std::string& what, std::vector<double> last_iterate)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

/// Variance collapsed below the admissible floor during fitting.
class DegenerateFit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SelectionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularInformation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VerificationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hsrobust
