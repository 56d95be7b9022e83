#include "arxcv/arx.hpp"
#include "arxcv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace arxcv {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// coefficient of L on sub-diagonal k
inline double lcoef(const VectorXd& phi, Index k) {
    if (k == 0) return 1.0;
    if (k >= 1 && k <= phi.size()) return -phi(k - 1);
    return 0.0;
}

} // namespace

void ArxSpec::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw std::invalid_argument("sigma2 must be positive");
    if (Z.cols() != beta.size())
        throw std::invalid_argument("Z must have q = length(beta) columns");
    if (beta.size() < 1)
        throw std::invalid_argument("q must be at least 1");
    if (Z.rows() < 1)
        throw std::invalid_argument("Z must have at least one row");
    for (Index t = 0; t < Z.rows(); ++t)
        if (Z(t, 0) != 1.0)
            throw std::invalid_argument("first column of Z must be ones");
    if (stationary && !is_stationary(phi))
        throw std::invalid_argument("phi is outside the stationarity region");
}

MatrixXd GaussianLaw::covariance() const {
    const Index T = mean.size();
    MatrixXd Linv = cov_factor.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(T, T));
    return sigma2 * Linv * Linv.transpose();
}

double GaussianLaw::logpdf(const VectorXd& y) const {
    const Index T = mean.size();
    VectorXd r = cov_factor.triangularView<Eigen::Lower>() * (y - mean);
    // |L'L| = 1 since L has unit diagonal
    return -0.5 * T * (kLog2Pi + std::log(sigma2)) - 0.5 * r.squaredNorm() / sigma2;
}

MatrixXd build_coeff_matrix(const VectorXd& phi, Index T) {
    if (T < 1) throw std::invalid_argument("T must be at least 1");
    MatrixXd L = MatrixXd::Identity(T, T);
    for (Index k = 1; k <= phi.size(); ++k)
        for (Index t = 0; t + k < T; ++t)
            L(t + k, t) = -phi(k - 1);
    return L;
}

MatrixXd build_coeff_matrix(const VectorXd& phi, Index T, int p_declared) {
    if (p_declared < 0 || phi.size() != p_declared)
        throw std::invalid_argument("length(phi) does not match declared p");
    return build_coeff_matrix(phi, T);
}

GaussianLaw joint_law(const ArxSpec& spec) {
    spec.validate();
    GaussianLaw law;
    law.mean = ar_solve(spec.phi, VectorXd(spec.Z * spec.beta));
    law.cov_factor = build_coeff_matrix(spec.phi, spec.T());
    law.sigma2 = spec.sigma2;
    return law;
}

MatrixXd simulate(const ArxSpec& spec, std::uint64_t seed, Index n_paths) {
    spec.validate();
    const Index T = spec.T();
    const Index p = spec.phi.size();
    const double sd = std::sqrt(spec.sigma2);
    const VectorXd mu = spec.Z * spec.beta;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    MatrixXd out(n_paths, T);
    for (Index n = 0; n < n_paths; ++n) {
        for (Index t = 0; t < T; ++t) {
            double v = mu(t) + sd * nd(rng);
            for (Index i = 1; i <= p && i <= t; ++i) v += spec.phi(i - 1) * out(n, t - i);
            out(n, t) = v;
        }
    }
    return out;
}

ArxSpec dgp_from_alpha(double alpha, const VectorXd& base_phi, const VectorXd& beta,
                       double sigma2, const MatrixXd& Z) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
    if (!is_stationary(base_phi)) throw std::invalid_argument("base phi is not stationary");
    ArxSpec s;
    s.phi = alpha * base_phi;
    s.beta = beta;
    s.sigma2 = sigma2;
    s.Z = Z;
    return s;
}

bool is_stationary(const VectorXd& phi) {
    const Index p = phi.size();
    if (p == 0) return true;
    if (!phi.allFinite()) return false;
    MatrixXd C = MatrixXd::Zero(p, p);
    C.row(0) = phi.transpose();
    for (Index i = 1; i < p; ++i) C(i, i - 1) = 1.0;
    Eigen::EigenSolver<MatrixXd> es(C, false);
    return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0 - 1e-10;
}

MatrixXd make_covariates(Index T, Index q, std::uint64_t seed) {
    if (q < 1) throw std::invalid_argument("q must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    MatrixXd Z(T, q);
    for (Index t = 0; t < T; ++t) {
        Z(t, 0) = 1.0;
        for (Index j = 1; j < q; ++j) Z(t, j) = nd(rng);
    }
    return Z;
}

double recursion_logpdf(const ArxSpec& spec, const VectorXd& y) {
    const Index T = spec.T();
    double lp = 0.0;
    for (Index t = 0; t < T; ++t) {
        double m = spec.Z.row(t).dot(spec.beta);
        for (Index i = 1; i <= spec.phi.size() && i <= t; ++i) m += spec.phi(i - 1) * y(t - i);
        const double r = y(t) - m;
        lp += -0.5 * (kLog2Pi + std::log(spec.sigma2)) - 0.5 * r * r / spec.sigma2;
    }
    return lp;
}

MatrixXd ar_filter(const VectorXd& phi, const MatrixXd& X) {
    const Index T = X.rows(), p = phi.size();
    MatrixXd out = X;
    for (Index i = 1; i <= p; ++i)
        if (i < T) out.bottomRows(T - i).noalias() -= phi(i - 1) * X.topRows(T - i);
    return out;
}

MatrixXd ar_filter_t(const VectorXd& phi, const MatrixXd& X) {
    const Index T = X.rows(), p = phi.size();
    MatrixXd out = X;
    for (Index i = 1; i <= p; ++i)
        if (i < T) out.topRows(T - i).noalias() -= phi(i - 1) * X.bottomRows(T - i);
    return out;
}

MatrixXd ar_solve(const VectorXd& phi, const MatrixXd& X) {
    const Index T = X.rows(), p = phi.size();
    MatrixXd out = X;
    for (Index t = 1; t < T; ++t)
        for (Index i = 1; i <= p && i <= t; ++i) out.row(t) += phi(i - 1) * out.row(t - i);
    return out;
}

MatrixXd ar_solve_t(const VectorXd& phi, const MatrixXd& X) {
    const Index T = X.rows(), p = phi.size();
    MatrixXd out = X;
    for (Index t = T - 2; t >= 0; --t)
        for (Index i = 1; i <= p && t + i < T; ++i) out.row(t) += phi(i - 1) * out.row(t + i);
    return out;
}

VectorXd ar_filter(const VectorXd& phi, const VectorXd& x) { return ar_filter(phi, MatrixXd(x)).col(0); }
VectorXd ar_filter_t(const VectorXd& phi, const VectorXd& x) { return ar_filter_t(phi, MatrixXd(x)).col(0); }
VectorXd ar_solve(const VectorXd& phi, const VectorXd& x) { return ar_solve(phi, MatrixXd(x)).col(0); }
VectorXd ar_solve_t(const VectorXd& phi, const VectorXd& x) { return ar_solve_t(phi, MatrixXd(x)).col(0); }

VectorXd impulse_response(const VectorXd& phi, Index n) {
    VectorXd psi = VectorXd::Zero(n);
    if (n == 0) return psi;
    psi(0) = 1.0;
    for (Index k = 1; k < n; ++k)
        for (Index i = 1; i <= phi.size() && i <= k; ++i) psi(k) += phi(i - 1) * psi(k - i);
    return psi;
}

MatrixXd ar_covariance(const VectorXd& phi, Index T) {
    const Index p = phi.size();
    MatrixXd W = MatrixXd::Zero(T, T);
    // lower triangle only during the sweep
    auto get = [&W](Index a, Index b) { return a >= b ? W(a, b) : W(b, a); };
    for (Index s = 0; s < T; ++s) {
        for (Index t = 0; t <= s; ++t) {
            double v = (s == t) ? 1.0 : 0.0;
            for (Index i = 1; i <= p && i <= s; ++i) v += phi(i - 1) * get(s - i, t);
            W(s, t) = v;
        }
    }
    W.triangularView<Eigen::StrictlyUpper>() = W.transpose();
    return W;
}

MatrixXd noise_cov_block(const VectorXd& phi, Index T, const std::vector<Index>& idx) {
    const Index n = static_cast<Index>(idx.size());
    MatrixXd W(n, n);
    if (phi.size() == 0) return MatrixXd::Identity(n, n);
    for (Index k : idx)
        if (k < 0 || k >= T) throw std::invalid_argument("block index out of range");
    if (phi.size() == 1) {
        // W(i,j) = f^|i-j| (1 - f^(2(min+1))) / (1 - f^2)
        const double f = phi(0), f2 = f * f;
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b <= a; ++b) {
                const Index i = idx[a], j = idx[b], m = std::min(i, j);
                const double geo = (f2 == 0.0) ? 1.0 : -std::expm1((m + 1) * std::log(f2)) / (1.0 - f2);
                W(a, b) = W(b, a) = std::pow(f, static_cast<double>(std::abs(i - j))) * geo;
            }
        return W;
    }
    const Index top = *std::max_element(idx.begin(), idx.end());
    const VectorXd psi = impulse_response(phi, top + 1);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b <= a; ++b) {
            const Index i = idx[a], j = idx[b], m = std::min(i, j);
            double v = 0.0;
            for (Index k = 0; k <= m; ++k) v += psi(i - k) * psi(j - k);
            W(a, b) = W(b, a) = v;
        }
    return W;
}

MatrixXd precision_band(const VectorXd& phi, Index T, const std::vector<Index>& rows,
                        const std::vector<Index>& cols) {
    const Index p = phi.size();
    MatrixXd out = MatrixXd::Zero(rows.size(), cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
            const Index s = rows[a], t = cols[b];
            if (std::abs(s - t) > p) continue;
            const Index lo = std::max(s, t), hi = std::min(std::min(s, t) + p, T - 1);
            double v = 0.0;
            for (Index i = lo; i <= hi; ++i) v += lcoef(phi, i - s) * lcoef(phi, i - t);
            out(a, b) = v;
        }
    }
    return out;
}

SubsetPrecision::SubsetPrecision(const VectorXd& phi, Index T, const std::vector<Index>& keep)
    : phi_(phi), T_(T), keep_(keep) {
    std::vector<char> in(T, 0);
    for (Index k : keep_) {
        if (k < 0 || k >= T) throw std::invalid_argument("subset index out of range");
        in[k] = 1;
    }
    for (Index t = 0; t < T; ++t)
        if (!in[t]) removed_.push_back(t);
    if (!removed_.empty()) {
        rr_.compute(precision_band(phi_, T_, removed_, removed_));
        if (rr_.info() != Eigen::Success)
            throw NumericalFailure("Cholesky of removed-block precision failed");
        logdet_ = 2.0 * rr_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
}

MatrixXd SubsetPrecision::apply(const MatrixXd& X) const {
    MatrixXd x = X;
    for (Index r : removed_) x.row(r).setZero();
    MatrixXd u = ar_filter_t(phi_, ar_filter(phi_, x));
    if (removed_.empty()) return u;
    MatrixXd ur(removed_.size(), X.cols());
    for (std::size_t i = 0; i < removed_.size(); ++i) ur.row(i) = u.row(removed_[i]);
    MatrixXd z = rr_.solve(ur);
    MatrixXd sc = MatrixXd::Zero(T_, X.cols());
    for (std::size_t i = 0; i < removed_.size(); ++i) sc.row(removed_[i]) = z.row(i);
    u -= ar_filter_t(phi_, ar_filter(phi_, sc));
    for (Index r : removed_) u.row(r).setZero();
    return u;
}

VectorXd SubsetPrecision::apply(const VectorXd& x) const { return apply(MatrixXd(x)).col(0); }

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_matrix_csv(std::ostream& os, const MatrixXd& M, const std::vector<std::string>& header) {
    for (Index j = 0; j < M.cols(); ++j) {
        if (j) os << ',';
        if (static_cast<std::size_t>(j) < header.size()) os << header[j];
        else os << 'x' << (j + 1);
    }
    os << '\n';
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) os << ',';
            os << format_double(M(i, j));
        }
        os << '\n';
    }
}

MatrixXd read_matrix_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) return MatrixXd();
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument("ragged CSV");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return MatrixXd();
    MatrixXd M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    return M;
}

} // namespace arxcv
