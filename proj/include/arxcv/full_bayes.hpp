#pragma once

#include "arxcv/arx.hpp"
#include "arxcv/cv_schemes.hpp"
#include "arxcv/sarx.hpp"

#include <cstdint>
#include <vector>

namespace arxcv {

// ARX(1,q) with unknown beta, sigma2, phi:
//   beta | sigma2 ~ N(mu0, sigma2 Sigma0), sigma2 ~ IG(a0, b0), phi ~ Beta(c0, d0) scaled to (-1, 1)
struct FullPrior {
    VectorXd mu0;
    MatrixXd Sigma0;
    double a0 = 1.0, b0 = 1.0, c0 = 1.0, d0 = 1.0;

    static FullPrior centered(const VectorXd& beta); // Sigma0 = I, a0 = b0 = c0 = d0 = 1
    void validate(Index q) const;
};

// log of the density of x after integrating sigma2 ~ IG(a, b) out of N(x | mu, sigma2 Sigma),
// a multivariate t with 2a degrees of freedom
double nig_logpdf(const VectorXd& x, const VectorXd& mu, const MatrixXd& Sigma, double a, double b);

double scaled_beta_logpdf(double phi, double c, double d);

struct PhiGrid {
    std::vector<double> nodes;        // strictly increasing inside (-1, 1)
    std::vector<double> log_weights;  // log(quadrature weight x unnormalised posterior density)
    double mode = 0.0;                // Laplace mode of the log joint in phi
    double hessian = 0.0;             // its second derivative there
};

struct MarginalResult {
    double value = 0.0;    // quadrature
    double laplace = 0.0;  // Laplace-only estimate, NaN when the mode sits on the boundary
    PhiGrid grid;
};

// Replicate: the test block is a fresh copy of the series, tied to the training data only
// through (beta, sigma2, phi). Conditional: the test values belong to the same realisation,
// so log p(train) + log p(test | train) = log p(train u test).
enum class PredictiveForm { Replicate, Conditional };

struct PosteriorDraw {
    double phi = 0.0;
    double sigma2 = 1.0;
    VectorXd beta;
};

struct McEstimate {
    double estimate = 0.0;
    double se = 0.0;
};

namespace detail {

// everything p(y_S | phi) needs once beta and sigma2 are integrated out:
// d = y_S - X_S mu0, P = W_SS^{-1}, quad0 = d'Pd, s = X_S'Pd, M = X_S'PX_S
struct BlockStats {
    Index n = 0;
    double quad0 = 0.0;
    double logdetW = 0.0;
    VectorXd s;
    MatrixXd M;
};

struct PhiNode {
    double phi = 0.0;
    MatrixXd X;        // L^{-1} Z
    VectorXd Xmu;      // X mu0
    BlockStats train;
    double g = 0.0;    // log p(y_train | phi) + log prior(phi)
};

} // namespace detail

// Posterior over phi on a Clenshaw-Curtis grid given y_train, with per-node
// sufficient statistics cached so many test blocks can share it.
class FoldPosterior {
public:
    // train: 1-based sorted indices, may be empty
    FoldPosterior(const VectorXd& y, const std::vector<int>& train, const FullPrior& prior, const MatrixXd& Z);

    const MarginalResult& marginal() const { return marginal_; }
    int level() const { return level_; }

    // Replicate scores test_values as a fresh block; Conditional reads the test values
    // from test_values too but treats them as continuing the training realisation
    double log_predictive(const VectorXd& test_values, const std::vector<int>& test, Mode mode,
                          PredictiveForm form = PredictiveForm::Replicate);

    std::vector<PosteriorDraw> draws(int n, std::uint64_t seed) const;

    // log p(y_train | phi) + log prior(phi), outside any grid
    double log_joint(double phi) const;

private:
    struct Query {
        std::vector<Index> idx;  // 0-based
        VectorXd values;
        bool conditional = false;
    };

    detail::PhiNode node_at(double phi) const;
    void add_block(detail::BlockStats& st, const detail::PhiNode& nd, const std::vector<Index>& idx,
                   const VectorXd& values) const;
    double nig(const detail::BlockStats& st) const;
    double log_prior(double phi) const;
    double query_log(const detail::PhiNode& nd, const Query& q) const;
    void build(int level);
    void laplace();
    std::vector<double> integrate(const std::vector<Query>& qs);

    VectorXd y_;
    std::vector<Index> train_;
    FullPrior prior_;
    MatrixXd Z_;
    MatrixXd S0inv_;
    double logdetS0_ = 0.0;
    int level_ = 0;
    std::vector<detail::PhiNode> nodes_;
    MarginalResult marginal_;
};

MarginalResult log_marginal(const VectorXd& y, const std::vector<int>& train, const FullPrior& prior,
                            const MatrixXd& Z);

double log_predictive(const VectorXd& test_values, const std::vector<int>& test, const VectorXd& y,
                      const std::vector<int>& train, const FullPrior& prior, const MatrixXd& Z, Mode mode,
                      PredictiveForm form = PredictiveForm::Replicate);

std::vector<PosteriorDraw> posterior_draws(int n, const VectorXd& y, const std::vector<int>& train,
                                           const FullPrior& prior, const MatrixXd& Z, std::uint64_t seed);

// Average of log p(y~^s | theta^s) over fresh DGP draws paired with posterior draws.
// Z is the candidate's design. This plug-in average sits below the elpd by a Jensen gap.
McEstimate elpd_mc(const std::vector<PosteriorDraw>& draws, const MatrixXd& Z, const ArxSpec& dgp, int S,
                   Mode mode, std::uint64_t seed);

// Average of the exact log p(y~^s | y_train) over fresh DGP draws: unbiased for the elpd.
McEstimate elpd_mc_exact(const VectorXd& y, const std::vector<int>& train, const FullPrior& prior,
                         const MatrixXd& Z, const ArxSpec& dgp, int S, Mode mode, std::uint64_t seed);

struct CvPair {
    double joint = 0.0;
    double pointwise = 0.0;
};

// sum scale weights T / (K |test_k|); the plan's mode picks the score
double cv_statistic(const VectorXd& y, const FoldPlan& plan, const FullPrior& prior, const MatrixXd& Z);
// both scores from the same per-fold posteriors
CvPair cv_statistics(const VectorXd& y, const FoldPlan& plan, const FullPrior& prior, const MatrixXd& Z);

} // namespace arxcv
