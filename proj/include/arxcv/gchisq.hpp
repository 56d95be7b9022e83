#pragma once

#include "arxcv/arx.hpp"
#include "arxcv/sarx.hpp"

#include <cstdint>
#include <iosfwd>

namespace arxcv {

// omega ~ N(mu, sigma^2) + sum_j lambda_j chi2(r_j, delta2_j), all independent
struct GChi2 {
    VectorXd lambda;
    VectorXd r;
    VectorXd delta2;
    double mu = 0.0;
    double sigma = 0.0;

    Index k() const { return lambda.size(); }
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double sd() const;
};

GChi2 params_from_quadform(const QuadForm& q, const GaussianLaw& law);

Moments moments(const QuadForm& q, const GaussianLaw& law);
Moments moments(const GChi2& d);

struct CdfOptions {
    double abs_tol = 1e-6;
    double fallback_tol = 1e-5;     // above this the simulation fallback kicks in
    Index fallback_draws = 1000000;
    std::uint64_t fallback_seed = 20240607;
    long max_evals = 3000000;
};

struct CdfValue {
    double p = 0.0;
    double error = 0.0;     // estimate, already on the probability scale
    bool simulated = false;
};

CdfValue cdf_detail(const GChi2& d, double w, const CdfOptions& opt = {});
double cdf(const GChi2& d, double w);
double quantile(const GChi2& d, double prob);

VectorXd sample(const GChi2& d, Index n, std::uint64_t seed);

// columns: j, lambda, r, delta2 then a final row with mu and sigma
void write_gchi2_csv(std::ostream& os, const GChi2& d);

} // namespace arxcv
