#pragma once

#include "arxcv/arx.hpp"
#include "arxcv/cv_schemes.hpp"

#include <iosfwd>
#include <vector>

namespace arxcv {

// Candidate with phi and sigma2 held fixed. Prior beta | sigma2 ~ N(mu0, sigma2 Sigma0),
// so the posterior is N(mu_beta, sigma2 Sigma_beta). arx.beta is unused.
struct SarxModel {
    ArxSpec arx;
    VectorXd prior_mean;
    MatrixXd prior_cov;

    Index T() const { return arx.T(); }
    int q() const { return static_cast<int>(arx.Z.cols()); }
    void validate() const;
};

struct Posterior {
    MatrixXd Sigma_beta;
    MatrixXd gain;   // q x T, zero outside the training columns
    VectorXd offset;
    VectorXd mean(const VectorXd& y) const { return gain * y + offset; }
};

// predictive mean D y + e, covariance sigma2 V (before test selection)
struct PredictiveParams {
    MatrixXd D;
    VectorXd e;
    MatrixXd V;
    double sigma2 = 1.0;
};

// omega(y) = y'Ay + y'b + c
struct QuadForm {
    MatrixXd A;
    VectorXd b;
    double c = 0.0;

    QuadForm() = default;
    QuadForm(MatrixXd A_, VectorXd b_, double c_);
    Index T() const { return b.size(); }
    double eval(const VectorXd& y) const;
};

// Fold predictive in factored form, X = L^{-1} Z and B = P_train X:
//   D = X Sigma_beta B',  e = X Sigma_beta Sigma0^{-1} mu0,  V = W + X Sigma_beta X'.
struct FoldPredictive {
    MatrixXd X;
    MatrixXd B;
    MatrixXd Sigma_beta;
    VectorXd e;
};

FoldPredictive fold_predictive(const SarxModel& model, const std::vector<int>& train);

Posterior posterior_params(const SarxModel& model, const std::vector<int>& train);
PredictiveParams predictive_params(const SarxModel& model, const std::vector<int>& train);

QuadForm eljpd_quadform(const SarxModel& model, const ArxSpec& dgp, const std::vector<int>& test,
                        const std::vector<int>& train);
QuadForm elppd_quadform(const SarxModel& model, const ArxSpec& dgp, const std::vector<int>& test,
                        const std::vector<int>& train);
// full train, full test
QuadForm elpd_quadform(const SarxModel& model, const ArxSpec& dgp, Mode mode);

QuadForm cv_quadform(const SarxModel& model, const FoldPlan& plan);

QuadForm diff(const QuadForm& a, const QuadForm& b);
double eval(const QuadForm& q, const VectorXd& y);

// long format: term,i,j,value (1-based)
void write_quadform_csv(std::ostream& os, const QuadForm& q);

std::vector<int> all_indices(int T);

} // namespace arxcv
