#pragma once

#include "arxcv/arx.hpp"
#include "arxcv/sarx.hpp"

#include <functional>

namespace arxcv {

struct OracleResult {
    VectorXd phi_hat;
    double sigma2_hat = 1.0;
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct NelderMeadOptions {
    double scale = 0.1;   // initial simplex edge
    double ftol = 1e-9;   // spread of objective values
    double xtol = 1e-8;   // spread of vertices, sup norm
    int max_iter = 2000;
};

struct NelderMeadResult {
    VectorXd x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& x0,
                             const NelderMeadOptions& opt = {});

// partial autocorrelations in (-1,1)^p <-> stationary phi
VectorXd pacf_to_phi(const VectorXd& pacf);
VectorXd phi_to_pacf(const VectorXd& phi);
VectorXd unconstrained_to_phi(const VectorXd& u);
VectorXd phi_to_unconstrained(const VectorXd& phi);

// E_y KL(p_true(y~) || p(y~ | y)), full training set; O(T) per call
double expected_kl(const SarxModel& model, const ArxSpec& dgp);

// E_y eljpd(y), from the eljpd polynomial and its exact mean
double expected_eljpd(const SarxModel& model, const ArxSpec& dgp);

// family.arx.phi sets p_l (values ignored), family.arx.sigma2 ignored
OracleResult fit_oracle(const SarxModel& family, const ArxSpec& dgp, const NelderMeadOptions& opt = {});

// same search maximising expected_eljpd instead
OracleResult fit_oracle_eljpd(const SarxModel& family, const ArxSpec& dgp, const NelderMeadOptions& opt = {});

SarxModel with_oracle(const SarxModel& family, const OracleResult& r);

} // namespace arxcv
