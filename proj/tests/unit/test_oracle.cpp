#include "doctest.h"
#include "support/dense.hpp"

#include "arxcv/oracle.hpp"

#include <random>

using namespace arxcv;

namespace {

// sigma2 minimising expected KL for fixed phi; KL is a + C / (2 s2) + T/2 log s2 in s2
double profile_kl(SarxModel m, const ArxSpec& dgp, double* s2_out = nullptr) {
    m.arx.sigma2 = 1.0;
    const double k1 = expected_kl(m, dgp);
    m.arx.sigma2 = 2.0;
    const double k2 = expected_kl(m, dgp);
    const double T = static_cast<double>(m.T());
    // k(s) = a + C/(2s) + T/2 log s
    const double C = 4.0 * ((k1 - k2) + 0.5 * T * std::log(2.0));
    const double s2 = C / T;
    m.arx.sigma2 = s2;
    if (s2_out) *s2_out = s2;
    return expected_kl(m, dgp);
}

} // namespace

TEST_CASE("fast expected KL equals the dense formula") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 8; ++rep) {
        auto in = dense::random_instance(12, 1 + rep % 2, 1 + rep % 3, rng);
        CHECK(expected_kl(in.model, in.dgp) == doctest::Approx(dense::expected_kl(in.model, in.dgp)).epsilon(1e-9));
    }
    // candidate with fewer lags and columns than the DGP
    auto in = dense::random_instance(12, 2, 3, rng);
    SarxModel m;
    m.arx.Z = in.dgp.Z.leftCols(2);
    m.arx.beta = VectorXd::Zero(2);
    m.arx.phi = VectorXd::Constant(1, 0.3);
    m.arx.sigma2 = 1.4;
    m.prior_mean = in.dgp.beta.head(2);
    m.prior_cov = MatrixXd::Identity(2, 2);
    CHECK(expected_kl(m, in.dgp) == doctest::Approx(dense::expected_kl(m, in.dgp)).epsilon(1e-9));
    m.arx.phi.resize(0);
    CHECK(expected_kl(m, in.dgp) == doctest::Approx(dense::expected_kl(m, in.dgp)).epsilon(1e-9));
}

TEST_CASE("expected KL against nested Monte Carlo") {
    std::mt19937_64 rng(40);
    auto in = dense::random_instance(6, 1, 2, rng);
    const GaussianLaw law = joint_law(in.dgp);
    const MatrixXd Cs = law.covariance();
    const auto all = all_indices(6);
    const MatrixXd y = simulate(in.dgp, 41, 10000);
    double s = 0.0, s2 = 0.0;
    for (Index n = 0; n < y.rows(); ++n) {
        const dense::Pred p = dense::predictive(in.model, y.row(n).transpose(), all);
        const double k = dense::gauss_kl(law.mean, Cs, p.mean, p.cov);
        s += k;
        s2 += k * k;
    }
    const double n = static_cast<double>(y.rows());
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(expected_kl(in.model, in.dgp) - mean) < 3.0 * se);
}

TEST_CASE("expected KL vanishes for a matched predictive and is positive otherwise") {
    ArxSpec dgp;
    dgp.Z = make_covariates(20, 2, 3);
    dgp.beta = VectorXd::Ones(2);
    dgp.phi = VectorXd::Constant(1, 0.4);
    dgp.sigma2 = 0.7;
    SarxModel m;
    m.arx = dgp;
    m.prior_mean = dgp.beta;
    m.prior_cov = 1e-13 * MatrixXd::Identity(2, 2);
    CHECK(std::abs(expected_kl(m, dgp)) < 1e-9);

    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 30; ++rep) {
        auto in = dense::random_instance(25, 1 + rep % 2, 1 + rep % 3, rng);
        CHECK(expected_kl(in.model, in.dgp) >= -1e-10);
    }
}

TEST_CASE("PACF reparameterisation round-trips") {
    std::mt19937_64 rng(8);
    for (int p = 1; p <= 3; ++p)
        for (int rep = 0; rep < 20; ++rep) {
            const VectorXd phi = dense::random_phi(p, rng);
            CHECK((unconstrained_to_phi(phi_to_unconstrained(phi)) - phi).cwiseAbs().maxCoeff() < 1e-12);
        }
    VectorXd u(2);
    u << 3.0, -2.5;
    CHECK(is_stationary(unconstrained_to_phi(u)));
    CHECK(unconstrained_to_phi(VectorXd()).size() == 0);
}

TEST_CASE("Nelder-Mead finds a quadratic bowl") {
    auto f = [](const VectorXd& x) { return (x(0) - 1.0) * (x(0) - 1.0) + 3.0 * (x(1) + 2.0) * (x(1) + 2.0); };
    const NelderMeadResult r = nelder_mead(f, VectorXd::Zero(2));
    CHECK(r.converged);
    CHECK(std::abs(r.x(0) - 1.0) < 1e-7);
    CHECK(std::abs(r.x(1) + 2.0) < 1e-7);
    NelderMeadOptions o;
    o.max_iter = 3;
    CHECK_FALSE(nelder_mead(f, VectorXd::Zero(2), o).converged);
}

TEST_CASE("oracle under an independent DGP sits at phi = 0") {
    ArxSpec dgp;
    dgp.Z = make_covariates(60, 3, 10);
    dgp.beta = (VectorXd(3) << 1.0, 2.0, 1.0).finished();
    dgp.phi = VectorXd::Zero(1);
    dgp.sigma2 = 1.0;
    SarxModel fam;
    fam.arx = dgp;
    fam.prior_mean = dgp.beta;
    fam.prior_cov = MatrixXd::Identity(3, 3);
    const OracleResult r = fit_oracle(fam, dgp);
    CHECK(r.converged);
    // grid oracle over phi with sigma2 profiled exactly
    double best = 1e300, arg = 0.0;
    for (int i = -300; i <= 300; ++i) {
        SarxModel m = fam;
        m.arx.phi(0) = i * 1e-3;
        const double k = profile_kl(m, dgp);
        if (k < best) {
            best = k;
            arg = m.arx.phi(0);
        }
    }
    CHECK(std::abs(r.phi_hat(0) - arg) <= 1e-3);
    CHECK(std::abs(r.phi_hat(0)) <= 1e-3);
    CHECK(r.objective <= best + 1e-9);
}

TEST_CASE("white-noise candidate inflates the variance") {
    VectorXd base(2);
    base << 0.75, 0.2;
    const MatrixXd Z = make_covariates(50, 3, 4);
    const ArxSpec dgp = dgp_from_alpha(0.5, base, (VectorXd(3) << 1.0, 0.5, 1.0).finished(), 1.0, Z);
    SarxModel fam;
    fam.arx.Z = Z.leftCols(2);
    fam.arx.beta = VectorXd::Zero(2);
    fam.arx.phi.resize(0);
    fam.prior_mean = dgp.beta.head(2);
    fam.prior_cov = MatrixXd::Identity(2, 2);
    const OracleResult r = fit_oracle(fam, dgp);
    CHECK(r.converged);
    double s2 = 0.0;
    profile_kl(fam, dgp, &s2);
    CHECK(r.sigma2_hat == doctest::Approx(s2).epsilon(1e-6));
    CHECK(r.sigma2_hat >= dgp.sigma2);
}

TEST_CASE("oracle beats random feasible points and the truncated truth") {
    VectorXd base(2);
    base << 0.75, 0.2;
    const MatrixXd Z = make_covariates(40, 3, 6);
    const ArxSpec dgp = dgp_from_alpha(1.0, base, (VectorXd(3) << 1.0, 0.5, 1.0).finished(), 1.0, Z);
    SarxModel fam;
    fam.arx.Z = Z.leftCols(2);
    fam.arx.beta = VectorXd::Zero(2);
    fam.arx.phi = VectorXd::Zero(1);
    fam.prior_mean = dgp.beta.head(2);
    fam.prior_cov = MatrixXd::Identity(2, 2);
    const OracleResult r = fit_oracle(fam, dgp);
    CHECK(is_stationary(r.phi_hat));
    CHECK(r.sigma2_hat > 0.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.99, 0.99), ls(-1.0, 1.5);
    for (int i = 0; i < 50; ++i) {
        SarxModel m = fam;
        m.arx.phi(0) = u(rng);
        m.arx.sigma2 = std::exp(ls(rng));
        CHECK(r.objective <= expected_kl(m, dgp) + 1e-12);
    }
    SarxModel t = fam;
    t.arx.phi(0) = dgp.phi(0);
    t.arx.sigma2 = dgp.sigma2;
    CHECK(r.objective <= expected_kl(t, dgp));
}

TEST_CASE("Dawid equivalence on a small setup") {
    const MatrixXd Z = make_covariates(30, 3, 2);
    VectorXd base(1);
    base << 0.95;
    const ArxSpec dgp = dgp_from_alpha(0.8, base, (VectorXd(3) << 1.0, 0.5, 1.0).finished(), 1.0, Z);
    SarxModel fam;
    fam.arx.Z = Z.leftCols(2);
    fam.arx.beta = VectorXd::Zero(2);
    fam.arx.phi = VectorXd::Zero(1);
    fam.prior_mean = dgp.beta.head(2);
    fam.prior_cov = MatrixXd::Identity(2, 2);
    const OracleResult a = fit_oracle(fam, dgp);
    const OracleResult b = fit_oracle_eljpd(fam, dgp);
    CHECK(std::abs(a.phi_hat(0) - b.phi_hat(0)) < 1e-6);
    CHECK(std::abs(a.sigma2_hat - b.sigma2_hat) < 1e-6);
}
