#include "doctest.h"
#include "support/dense.hpp"

#include "arxcv/arx.hpp"
#include "arxcv/errors.hpp"

#include <random>
#include <sstream>

using namespace arxcv;

TEST_CASE("banded helpers agree with the dense coefficient matrix") {
    std::mt19937_64 rng(11);
    for (int p = 0; p <= 3; ++p) {
        const VectorXd phi = dense::random_phi(p, rng);
        const Index T = 9;
        const MatrixXd L = build_coeff_matrix(phi, T);
        const MatrixXd X = MatrixXd::Random(T, 3);
        CHECK((ar_filter(phi, X) - L * X).norm() < 1e-12);
        CHECK((ar_filter_t(phi, X) - L.transpose() * X).norm() < 1e-12);
        CHECK((ar_solve(phi, X) - L.inverse() * X).norm() < 1e-10);
        CHECK((ar_solve_t(phi, X) - L.transpose().inverse() * X).norm() < 1e-10);
        CHECK((ar_covariance(phi, T) - dense::noise_cov(phi, T)).norm() < 1e-10);
        const VectorXd psi = impulse_response(phi, T);
        CHECK((psi - L.inverse().col(0)).norm() < 1e-12);
    }
}

TEST_CASE("coefficient matrix shape and declared p") {
    VectorXd phi(2);
    phi << 0.5, -0.25;
    const MatrixXd L = build_coeff_matrix(phi, 4);
    CHECK(L(0, 0) == 1.0);
    CHECK(L(1, 0) == -0.5);
    CHECK(L(2, 0) == 0.25);
    CHECK(L(3, 0) == 0.0);
    CHECK(L(0, 1) == 0.0);
    CHECK_THROWS_AS(build_coeff_matrix(phi, 4, 1), std::invalid_argument);
    CHECK(build_coeff_matrix(VectorXd(), 3).isIdentity());
}

TEST_CASE("subset precision matches the inverse of the kept covariance block") {
    std::mt19937_64 rng(5);
    const Index T = 12;
    for (int p = 1; p <= 2; ++p) {
        const VectorXd phi = dense::random_phi(p, rng);
        const std::vector<Index> keep{0, 1, 2, 6, 7, 11};
        SubsetPrecision sp(phi, T, keep);
        const MatrixXd W = dense::noise_cov(phi, T);
        MatrixXd Wss(keep.size(), keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i)
            for (std::size_t j = 0; j < keep.size(); ++j) Wss(i, j) = W(keep[i], keep[j]);
        const MatrixXd Pi = Wss.inverse();
        const MatrixXd X = MatrixXd::Random(T, 2);
        const MatrixXd PX = sp.apply(X);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            Eigen::RowVectorXd want = Eigen::RowVectorXd::Zero(2);
            for (std::size_t j = 0; j < keep.size(); ++j) want += Pi(i, j) * X.row(keep[j]);
            CHECK((PX.row(keep[i]) - want).norm() < 1e-9);
        }
        CHECK(PX.row(3).norm() == 0.0);
        CHECK(sp.logdet_cov() == doctest::Approx(std::log(Wss.determinant())).epsilon(1e-10));
    }
}

TEST_CASE("joint law density equals the recursion density") {
    std::mt19937_64 rng(3);
    auto in = dense::random_instance(15, 2, 3, rng);
    const GaussianLaw law = joint_law(in.dgp);
    const MatrixXd y = simulate(in.dgp, 9, 3);
    for (Index n = 0; n < 3; ++n) {
        const VectorXd yn = y.row(n).transpose();
        CHECK(law.logpdf(yn) == doctest::Approx(recursion_logpdf(in.dgp, yn)).epsilon(1e-12));
        CHECK(law.logpdf(yn) == doctest::Approx(dense::mvn_logpdf(yn, law.mean, law.covariance())).epsilon(1e-9));
    }
}

TEST_CASE("simulated paths have the joint law's moments") {
    ArxSpec s;
    s.phi = VectorXd::Constant(1, 0.8);
    s.beta = VectorXd::Constant(1, 0.5);
    s.sigma2 = 2.0;
    s.Z = MatrixXd::Ones(4, 1);
    const Index n = 40000;
    const MatrixXd y = simulate(s, 123, n);
    const GaussianLaw law = joint_law(s);
    const MatrixXd C = law.covariance();
    const VectorXd mean = y.colwise().mean();
    for (Index t = 0; t < 4; ++t) CHECK(std::abs(mean(t) - law.mean(t)) < 4.0 * std::sqrt(C(t, t) / n));
    const MatrixXd yc = y.rowwise() - mean.transpose();
    const MatrixXd S = yc.transpose() * yc / double(n - 1);
    CHECK((S - C).cwiseAbs().maxCoeff() < 0.1);
    // same seed, same paths
    CHECK(simulate(s, 123, 2) == y.topRows(2));
}

TEST_CASE("alpha scaling and stationarity") {
    VectorXd base(2);
    base << 0.75, 0.2;
    CHECK(is_stationary(base));
    const ArxSpec d = dgp_from_alpha(0.5, base, VectorXd::Ones(1), 1.0, MatrixXd::Ones(5, 1));
    CHECK(d.phi(0) == 0.375);
    CHECK(d.phi(1) == 0.1);
    CHECK_FALSE(is_stationary(VectorXd::Constant(1, 1.0)));
    CHECK_FALSE(is_stationary(VectorXd::Constant(1, -1.2)));
    CHECK(is_stationary(VectorXd()));
    CHECK_THROWS_AS(dgp_from_alpha(1.5, base, VectorXd::Ones(1), 1.0, MatrixXd::Ones(5, 1)), std::invalid_argument);
}

TEST_CASE("spec validation") {
    ArxSpec s;
    s.phi = VectorXd::Constant(1, 0.5);
    s.beta = VectorXd::Ones(2);
    s.Z = MatrixXd::Ones(5, 2);
    CHECK_NOTHROW(s.validate());
    s.sigma2 = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.sigma2 = 1.0;
    s.Z(2, 0) = 3.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.Z(2, 0) = 1.0;
    s.phi(0) = 1.01;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.stationary = false;
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("covariates are prefixes across T and round-trip through CSV") {
    const MatrixXd a = make_covariates(20, 3, 77);
    const MatrixXd b = make_covariates(50, 3, 77);
    CHECK(a == b.topRows(20));
    CHECK(a.col(0).isOnes());
    std::stringstream ss;
    write_matrix_csv(ss, a, {"z1", "z2", "z3"});
    CHECK(ss.str().rfind("z1,z2,z3\n", 0) == 0);
    const MatrixXd back = read_matrix_csv(ss);
    CHECK(back == a);
}

TEST_CASE("noise covariance blocks") {
    const std::vector<Index> idx{0, 3, 4, 9};
    for (int p = 0; p <= 2; ++p) {
        std::mt19937_64 rng(p);
        VectorXd phi = dense::random_phi(p, rng);
        const MatrixXd W = dense::noise_cov(phi, 10);
        const MatrixXd B = noise_cov_block(phi, 10, idx);
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = 0; b < idx.size(); ++b) CHECK(std::abs(B(a, b) - W(idx[a], idx[b])) < 1e-12);
    }
    const MatrixXd Z = noise_cov_block(VectorXd::Zero(1), 10, idx);
    CHECK(Z.isIdentity());
}
