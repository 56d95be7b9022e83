#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace arxcv {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// y_t = phi' (y_{t-1},...,y_{t-p}) + z_t' beta + sigma eps_t, with y_t = 0 for t <= 0.
struct ArxSpec {
    VectorXd phi;
    VectorXd beta;
    double sigma2 = 1.0;
    MatrixXd Z;
    bool stationary = true; // validate() also checks phi when set

    int p() const { return static_cast<int>(phi.size()); }
    int q() const { return static_cast<int>(beta.size()); }
    Index T() const { return Z.rows(); }
    void validate() const;
};

// covariance = sigma2 * (L' L)^{-1}, L unit lower triangular
struct GaussianLaw {
    VectorXd mean;
    MatrixXd cov_factor;
    double sigma2 = 1.0;

    Index T() const { return mean.size(); }
    MatrixXd covariance() const;
    double logpdf(const VectorXd& y) const;
};

MatrixXd build_coeff_matrix(const VectorXd& phi, Index T);
MatrixXd build_coeff_matrix(const VectorXd& phi, Index T, int p_declared);

GaussianLaw joint_law(const ArxSpec& spec);

// n_paths x T, one path per row
MatrixXd simulate(const ArxSpec& spec, std::uint64_t seed, Index n_paths);

ArxSpec dgp_from_alpha(double alpha, const VectorXd& base_phi, const VectorXd& beta,
                       double sigma2, const MatrixXd& Z);

bool is_stationary(const VectorXd& phi);

// First column ones, the rest iid N(0,1) filled row by row, so a shorter
// matrix from the same seed is a prefix of a longer one.
MatrixXd make_covariates(Index T, Index q, std::uint64_t seed);

// sum of the one-step conditional log densities of the recursion
double recursion_logpdf(const ArxSpec& spec, const VectorXd& y);

// Banded helpers. L is the coefficient matrix of phi, never formed.
VectorXd ar_filter(const VectorXd& phi, const VectorXd& x);    // L x
VectorXd ar_filter_t(const VectorXd& phi, const VectorXd& x);  // L' x
VectorXd ar_solve(const VectorXd& phi, const VectorXd& x);     // L^{-1} x
VectorXd ar_solve_t(const VectorXd& phi, const VectorXd& x);   // L^{-T} x
MatrixXd ar_filter(const VectorXd& phi, const MatrixXd& X);
MatrixXd ar_filter_t(const VectorXd& phi, const MatrixXd& X);
MatrixXd ar_solve(const VectorXd& phi, const MatrixXd& X);
MatrixXd ar_solve_t(const VectorXd& phi, const MatrixXd& X);

VectorXd impulse_response(const VectorXd& phi, Index n);
// W = (L'L)^{-1}, by the Yule-Walker style recursion
MatrixXd ar_covariance(const VectorXd& phi, Index T);

// Precision of the sub-vector x_S of zero-initialised unit-variance AR noise.
// With r the complement of S and Lambda = L'L:
//   (W_SS)^{-1} = Lambda_SS - Lambda_Sr Lambda_rr^{-1} Lambda_rS,  |W_SS| = |Lambda_rr|.
class SubsetPrecision {
public:
    // keep: 0-based sorted indices
    SubsetPrecision(const VectorXd& phi, Index T, const std::vector<Index>& keep);

    // P x where P is (W_SS)^{-1} embedded in T x T with zero rows/cols off S
    VectorXd apply(const VectorXd& x) const;
    MatrixXd apply(const MatrixXd& X) const;
    double logdet_cov() const { return logdet_; }
    const std::vector<Index>& keep() const { return keep_; }
    const std::vector<Index>& removed() const { return removed_; }

private:
    VectorXd phi_;
    Index T_;
    std::vector<Index> keep_, removed_;
    Eigen::LLT<MatrixXd> rr_;
    double logdet_ = 0.0;
};

// W_SS for 0-based sorted idx without forming W; closed form when p = 1
MatrixXd noise_cov_block(const VectorXd& phi, Index T, const std::vector<Index>& idx);

MatrixXd precision_band(const VectorXd& phi, Index T, const std::vector<Index>& rows,
                        const std::vector<Index>& cols);

// CSV: header row, one column per series component
void write_matrix_csv(std::ostream& os, const MatrixXd& M, const std::vector<std::string>& header = {});
MatrixXd read_matrix_csv(std::istream& is);

std::string format_double(double x);

} // namespace arxcv
