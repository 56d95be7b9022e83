#pragma once

#include <stdexcept>
#include <string>

namespace arxcv {

// Raised when a factorization or integral cannot be trusted.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what, double estimate = 0.0)
        : std::runtime_error(what), estimate_(estimate) {}
    double estimate() const { return estimate_; }

private:
    double estimate_;
};

class InfeasibleScheme : public std::runtime_error {
public:
    InfeasibleScheme(const std::string& what, int fold)
        : std::runtime_error(what), fold_(fold) {}
    int fold() const { return fold_; }

private:
    int fold_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace arxcv
