#include "arxcv/full_bayes.hpp"
#include "arxcv/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>

namespace arxcv {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kEdge = 1e-6;        // nodes live in [-1 + kEdge, 1 - kEdge]
constexpr int kFirstLevel = 256;
constexpr int kMaxLevel = 8192;
constexpr double kTol = 1e-9;         // full vs half level, in log
constexpr double kLooseTol = 1e-6;    // accepted at the finest level
constexpr double kTopShare = 0.2;
constexpr double kFdStep = 1e-4;

struct Rule {
    std::vector<double> x, w;
};

// Clenshaw-Curtis on N intervals, nodes increasing, squeezed by (1 - kEdge)
Rule make_rule(int N) {
    Rule r;
    r.x.resize(N + 1);
    r.w.resize(N + 1);
    std::vector<double> c(N);
    for (int m = 0; m < N; ++m) c[m] = std::cos(2.0 * M_PI * m / N);
    const double squeeze = 1.0 - kEdge;
    for (int k = 0; k <= N; ++k) {
        r.x[k] = -squeeze * std::cos(M_PI * k / N);
        double s = 0.0;
        for (int j = 1; j <= N / 2; ++j) {
            const double b = (2 * j == N) ? 1.0 : 2.0;
            s += b * c[(static_cast<long>(j) * k) % N] / (4.0 * j * j - 1.0);
        }
        const double ck = (k == 0 || k == N) ? 1.0 : 2.0;
        r.w[k] = squeeze * ck / N * (1.0 - s);
    }
    // exact symmetry, so the order nodes are visited in cannot matter
    for (int k = 0; k < N / 2; ++k) {
        r.x[N - k] = -r.x[k];
        r.w[N - k] = r.w[k];
    }
    if (N % 2 == 0) r.x[N / 2] = 0.0;
    return r;
}

const Rule& rule(int N) {
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(N);
    if (it == cache.end()) it = cache.emplace(N, make_rule(N)).first;
    return it->second;
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

std::vector<Index> to_zero_based(const std::vector<int>& idx, Index T, const char* what) {
    std::vector<Index> out;
    out.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 1 || idx[i] > T) throw std::invalid_argument(std::string(what) + " index out of range");
        if (i && idx[i] <= idx[i - 1]) throw std::invalid_argument(std::string(what) + " indices must be sorted and unique");
        out.push_back(idx[i] - 1);
    }
    return out;
}

} // namespace

FullPrior FullPrior::centered(const VectorXd& beta) {
    FullPrior p;
    p.mu0 = beta;
    p.Sigma0 = MatrixXd::Identity(beta.size(), beta.size());
    return p;
}

void FullPrior::validate(Index q) const {
    if (mu0.size() != q) throw std::invalid_argument("prior mean has the wrong length");
    if (Sigma0.rows() != q || Sigma0.cols() != q) throw std::invalid_argument("prior covariance has the wrong shape");
    if (q > 0) {
        Eigen::LLT<MatrixXd> llt(Sigma0);
        if (llt.info() != Eigen::Success) throw std::invalid_argument("prior covariance is not SPD");
    }
    for (double v : {a0, b0, c0, d0})
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("prior hyperparameters must be positive");
}

double nig_logpdf(const VectorXd& x, const VectorXd& mu, const MatrixXd& Sigma, double a, double b) {
    const double n = static_cast<double>(x.size());
    if (mu.size() != x.size() || Sigma.rows() != x.size() || Sigma.cols() != x.size())
        throw std::invalid_argument("dimension mismatch");
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("a and b must be positive");
    Eigen::LLT<MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("Sigma is not SPD");
    const VectorXd r = llt.matrixL().solve(x - mu);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return std::lgamma(a + 0.5 * n) + a * std::log(b) - std::lgamma(a) - 0.5 * n * kLog2Pi - 0.5 * logdet
           - (a + 0.5 * n) * std::log(b + 0.5 * r.squaredNorm());
}

double scaled_beta_logpdf(double phi, double c, double d) {
    if (!(phi > -1.0 && phi < 1.0)) return -std::numeric_limits<double>::infinity();
    const double u = 0.5 * (phi + 1.0);
    return (c - 1.0) * std::log(u) + (d - 1.0) * std::log1p(-u) + std::lgamma(c + d) - std::lgamma(c)
           - std::lgamma(d) - std::log(2.0);
}

FoldPosterior::FoldPosterior(const VectorXd& y, const std::vector<int>& train, const FullPrior& prior,
                             const MatrixXd& Z)
    : y_(y), prior_(prior), Z_(Z) {
    const Index T = Z_.rows(), q = Z_.cols();
    if (y_.size() != T) throw std::invalid_argument("y and Z differ in length");
    prior_.validate(q);
    train_ = to_zero_based(train, T, "train");
    Eigen::LLT<MatrixXd> llt(prior_.Sigma0);
    S0inv_ = llt.solve(MatrixXd::Identity(q, q));
    logdetS0_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

    build(kFirstLevel);
    laplace();
    const std::vector<double> r = integrate({});
    marginal_.value = r[0];
    marginal_.grid.nodes.clear();
    marginal_.grid.log_weights.clear();
    const Rule& ru = rule(level_);
    for (int k = 0; k <= level_; ++k) {
        marginal_.grid.nodes.push_back(nodes_[k].phi);
        marginal_.grid.log_weights.push_back(std::log(ru.w[k]) + nodes_[k].g);
    }
}

double FoldPosterior::log_prior(double phi) const { return scaled_beta_logpdf(phi, prior_.c0, prior_.d0); }

double FoldPosterior::nig(const detail::BlockStats& st) const {
    const MatrixXd Mt = S0inv_ + st.M;
    Eigen::LLT<MatrixXd> llt(Mt);
    if (llt.info() != Eigen::Success) throw NumericalFailure("posterior precision is not SPD");
    const double quad = std::max(st.quad0 - st.s.dot(llt.solve(st.s)), 0.0);
    const double logdet = st.logdetW + logdetS0_ + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double n = static_cast<double>(st.n);
    const double a = prior_.a0 + 0.5 * n, b = prior_.b0 + 0.5 * quad;
    return std::lgamma(a) - std::lgamma(prior_.a0) + prior_.a0 * std::log(prior_.b0) - 0.5 * n * kLog2Pi
           - 0.5 * logdet - a * std::log(b);
}

void FoldPosterior::add_block(detail::BlockStats& st, const detail::PhiNode& nd, const std::vector<Index>& idx,
                              const VectorXd& values) const {
    const Index m = static_cast<Index>(idx.size()), T = Z_.rows(), q = Z_.cols();
    if (m == 0) return;
    VectorXd phi(1);
    phi(0) = nd.phi;
    VectorXd d(m);
    MatrixXd Xb(m, q);
    for (Index i = 0; i < m; ++i) {
        d(i) = values(i) - nd.Xmu(idx[i]);
        Xb.row(i) = nd.X.row(idx[i]);
    }
    if (m * m * m <= 64 * T) {
        Eigen::LLT<MatrixXd> llt(noise_cov_block(phi, T, idx));
        if (llt.info() != Eigen::Success) throw NumericalFailure("noise covariance block is not SPD");
        const VectorXd Pd = llt.solve(d);
        st.quad0 += d.dot(Pd);
        st.s += Xb.transpose() * Pd;
        st.M += Xb.transpose() * llt.solve(Xb);
        st.logdetW += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    } else {
        const SubsetPrecision sp(phi, T, idx);
        MatrixXd E = MatrixXd::Zero(T, 1 + q);
        for (Index i = 0; i < m; ++i) {
            E(idx[i], 0) = d(i);
            E.row(idx[i]).tail(q) = Xb.row(i);
        }
        const MatrixXd U = sp.apply(E);
        const auto Xe = E.rightCols(q);
        st.quad0 += E.col(0).dot(U.col(0));
        st.s += Xe.transpose() * U.col(0);
        st.M += Xe.transpose() * U.rightCols(q);
        st.logdetW += sp.logdet_cov();
    }
    st.n += m;
}

detail::PhiNode FoldPosterior::node_at(double phi) const {
    const Index q = Z_.cols();
    detail::PhiNode nd;
    nd.phi = phi;
    VectorXd pv(1);
    pv(0) = phi;
    nd.X = ar_solve(pv, Z_);
    nd.Xmu = nd.X * prior_.mu0;
    nd.train.s = VectorXd::Zero(q);
    nd.train.M = MatrixXd::Zero(q, q);
    VectorXd vals(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) vals(i) = y_(train_[i]);
    add_block(nd.train, nd, train_, vals);
    nd.g = nig(nd.train) + log_prior(phi);
    return nd;
}

double FoldPosterior::log_joint(double phi) const {
    if (!(phi > -1.0 && phi < 1.0)) return -std::numeric_limits<double>::infinity();
    return node_at(phi).g;
}

void FoldPosterior::build(int level) {
    const Rule& r = rule(level);
    std::vector<detail::PhiNode> nn(level + 1);
    std::vector<char> have(level + 1, 0);
    if (!nodes_.empty() && level_ * 2 == level) {
        for (int k = 0; k <= level_; ++k) {
            nn[2 * k] = std::move(nodes_[k]);
            have[2 * k] = 1;
        }
    }
    for (int k = 0; k <= level; ++k)
        if (!have[k]) nn[k] = node_at(r.x[k]);
    nodes_ = std::move(nn);
    level_ = level;
}

void FoldPosterior::laplace() {
    std::size_t best = 0;
    for (std::size_t k = 1; k < nodes_.size(); ++k)
        if (nodes_[k].g > nodes_[best].g) best = k;
    const double lo = nodes_[best == 0 ? 0 : best - 1].phi;
    const double hi = nodes_[std::min(best + 1, nodes_.size() - 1)].phi;
    std::uintmax_t iters = 200;
    const auto res = boost::math::tools::brent_find_minima(
        [&](double x) { return -log_joint(x); }, lo, hi, std::numeric_limits<double>::digits / 2, iters);
    double mode = res.first, gmode = -res.second;
    if (nodes_[best].g > gmode) {
        mode = nodes_[best].phi;
        gmode = nodes_[best].g;
    }
    marginal_.grid.mode = mode;
    marginal_.laplace = std::numeric_limits<double>::quiet_NaN();
    marginal_.grid.hessian = std::numeric_limits<double>::quiet_NaN();
    if (mode - kFdStep > -1.0 + kEdge && mode + kFdStep < 1.0 - kEdge) {
        const double H = (log_joint(mode + kFdStep) - 2.0 * gmode + log_joint(mode - kFdStep)) / (kFdStep * kFdStep);
        marginal_.grid.hessian = H;
        if (H < 0.0) marginal_.laplace = gmode + 0.5 * kLog2Pi - 0.5 * std::log(-H);
    }
}

double FoldPosterior::query_log(const detail::PhiNode& nd, const Query& q) const {
    if (q.idx.empty()) return nd.g;
    detail::BlockStats st;
    if (q.conditional) {
        st.s = VectorXd::Zero(Z_.cols());
        st.M = MatrixXd::Zero(Z_.cols(), Z_.cols());
    } else {
        st = nd.train;
    }
    add_block(st, nd, q.idx, q.values);
    return nig(st) + log_prior(nd.phi);
}

// log of the integral over phi for the marginal (slot 0) and each query, refining
// the grid until every one agrees with its half-level estimate
std::vector<double> FoldPosterior::integrate(const std::vector<Query>& qs) {
    const std::size_t nq = qs.size() + 1;
    for (;;) {
        const int N = level_;
        const Rule& full = rule(N);
        const Rule& half = rule(N / 2);
        const double shift = std::isfinite(marginal_.laplace) ? marginal_.laplace : 0.0;
        std::vector<double> out(nq);
        double worst = 0.0, top = 0.0;
        for (std::size_t j = 0; j < nq; ++j) {
            std::vector<double> lf(N + 1), lh(N / 2 + 1);
            for (int k = 0; k <= N; ++k) {
                const double v = j == 0 ? nodes_[k].g : query_log(nodes_[k], qs[j - 1]);
                lf[k] = std::log(full.w[k]) + v - shift;
                if (k % 2 == 0) lh[k / 2] = std::log(half.w[k / 2]) + v - shift;
            }
            const double F = log_sum_exp(lf), Hh = log_sum_exp(lh);
            if (!std::isfinite(F)) throw NumericalFailure("phi integral vanished", F);
            out[j] = F + shift;
            worst = std::max(worst, std::abs(F - Hh));
            if (j == 0)
                for (double v : lf) top = std::max(top, std::exp(v - F));
        }
        if (worst < kTol && top < kTopShare) return out;
        if (N >= kMaxLevel) {
            if (worst < kLooseTol) return out;
            throw NumericalFailure("phi quadrature did not converge", out[0]);
        }
        build(2 * N);
    }
}

double FoldPosterior::log_predictive(const VectorXd& test_values, const std::vector<int>& test, Mode mode,
                                     PredictiveForm form) {
    const Index T = Z_.rows();
    const std::vector<Index> t0 = to_zero_based(test, T, "test");
    if (test_values.size() != static_cast<Index>(t0.size()))
        throw std::invalid_argument("test values and indices differ in length");
    // a replicate block is a fresh copy, so it may reuse training positions
    if (form == PredictiveForm::Conditional)
        for (Index t : t0)
            if (std::binary_search(train_.begin(), train_.end(), t))
            throw std::invalid_argument("test and train indices overlap");
    if (t0.empty()) return 0.0;

    auto make = [&](const std::vector<std::size_t>& which) {
        Query q;
        q.conditional = form == PredictiveForm::Conditional;
        std::vector<std::pair<Index, double>> iv;
        for (std::size_t i : which) iv.emplace_back(t0[i], test_values(i));
        if (q.conditional)
            for (Index t : train_) iv.emplace_back(t, y_(t));
        std::sort(iv.begin(), iv.end());
        q.values.resize(iv.size());
        for (std::size_t i = 0; i < iv.size(); ++i) {
            q.idx.push_back(iv[i].first);
            q.values(i) = iv[i].second;
        }
        return q;
    };
    std::vector<Query> qs;
    if (mode == Mode::Joint) {
        std::vector<std::size_t> all(t0.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        qs.push_back(make(all));
    } else {
        for (std::size_t i = 0; i < t0.size(); ++i) qs.push_back(make({i}));
    }
    const std::vector<double> r = integrate(qs);
    double s = 0.0;
    for (std::size_t j = 1; j < r.size(); ++j) s += r[j] - r[0];
    return s;
}

std::vector<PosteriorDraw> FoldPosterior::draws(int n, std::uint64_t seed) const {
    if (n < 0) throw std::invalid_argument("n must be non-negative");
    const std::size_t K = nodes_.size();
    double gmax = -std::numeric_limits<double>::infinity();
    for (const auto& nd : nodes_) gmax = std::max(gmax, nd.g);
    std::vector<double> cum(K, 0.0);
    for (std::size_t k = 1; k < K; ++k)
        cum[k] = cum[k - 1] + 0.5 * (std::exp(nodes_[k - 1].g - gmax) + std::exp(nodes_[k].g - gmax))
                                  * (nodes_[k].phi - nodes_[k - 1].phi);
    const double total = cum.back();
    if (!(total > 0.0)) throw NumericalFailure("phi posterior has no mass on the grid");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> nd01;
    const Index q = Z_.cols();
    std::vector<PosteriorDraw> out(n);
    for (int i = 0; i < n; ++i) {
        const double t = unif(rng) * total;
        std::size_t j = std::upper_bound(cum.begin(), cum.end(), t) - cum.begin();
        j = std::clamp<std::size_t>(j, 1, K - 1);
        const double span = cum[j] - cum[j - 1];
        const double frac = span > 0.0 ? (t - cum[j - 1]) / span : 0.5;
        const double phi = nodes_[j - 1].phi + frac * (nodes_[j].phi - nodes_[j - 1].phi);

        const detail::PhiNode node = node_at(phi);
        const detail::BlockStats& st = node.train;
        const MatrixXd Mt = S0inv_ + st.M;
        Eigen::LLT<MatrixXd> llt(Mt);
        const VectorXd shift = llt.solve(st.s);
        const double quad = std::max(st.quad0 - st.s.dot(shift), 0.0);
        std::gamma_distribution<double> ga(prior_.a0 + 0.5 * static_cast<double>(st.n),
                                           1.0 / (prior_.b0 + 0.5 * quad));
        const double sigma2 = 1.0 / ga(rng);
        VectorXd e(q);
        for (Index k = 0; k < q; ++k) e(k) = nd01(rng);
        // Mt = U'U with U = L', so beta noise is U^{-1} e
        const VectorXd noise = llt.matrixU().solve(e);
        out[i].phi = phi;
        out[i].sigma2 = sigma2;
        out[i].beta = prior_.mu0 + shift + std::sqrt(sigma2) * noise;
    }
    return out;
}

MarginalResult log_marginal(const VectorXd& y, const std::vector<int>& train, const FullPrior& prior,
                            const MatrixXd& Z) {
    return FoldPosterior(y, train, prior, Z).marginal();
}

double log_predictive(const VectorXd& test_values, const std::vector<int>& test, const VectorXd& y,
                      const std::vector<int>& train, const FullPrior& prior, const MatrixXd& Z, Mode mode,
                      PredictiveForm form) {
    FoldPosterior fp(y, train, prior, Z);
    return fp.log_predictive(test_values, test, mode, form);
}

std::vector<PosteriorDraw> posterior_draws(int n, const VectorXd& y, const std::vector<int>& train,
                                           const FullPrior& prior, const MatrixXd& Z, std::uint64_t seed) {
    return FoldPosterior(y, train, prior, Z).draws(n, seed);
}

namespace {

McEstimate mean_se(const std::vector<double>& v) {
    McEstimate r;
    const double n = static_cast<double>(v.size());
    if (v.empty()) return r;
    for (double x : v) r.estimate += x;
    r.estimate /= n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.estimate) * (x - r.estimate);
        r.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

} // namespace

McEstimate elpd_mc(const std::vector<PosteriorDraw>& draws, const MatrixXd& Z, const ArxSpec& dgp, int S,
                   Mode mode, std::uint64_t seed) {
    if (draws.empty()) throw std::invalid_argument("no posterior draws");
    if (S < 1) throw std::invalid_argument("S must be positive");
    if (dgp.T() != Z.rows()) throw std::invalid_argument("DGP and design differ in length");
    const Index T = Z.rows();
    const MatrixXd yt = simulate(dgp, seed, S);
    std::vector<double> vals(S);
    for (int s = 0; s < S; ++s) {
        const PosteriorDraw& th = draws[s % draws.size()];
        const VectorXd ys = yt.row(s).transpose();
        VectorXd phi(1);
        phi(0) = th.phi;
        if (mode == Mode::Joint) {
            ArxSpec a;
            a.phi = phi;
            a.beta = th.beta;
            a.sigma2 = th.sigma2;
            a.Z = Z;
            a.stationary = false;
            vals[s] = recursion_logpdf(a, ys);
        } else {
            const VectorXd m = ar_solve(phi, VectorXd(Z * th.beta));
            const VectorXd psi = impulse_response(phi, T);
            double w = 0.0, acc = 0.0;
            for (Index t = 0; t < T; ++t) {
                w += psi(t) * psi(t);
                const double v = th.sigma2 * w, r = ys(t) - m(t);
                acc += -0.5 * (kLog2Pi + std::log(v)) - 0.5 * r * r / v;
            }
            vals[s] = acc;
        }
    }
    return mean_se(vals);
}

McEstimate elpd_mc_exact(const VectorXd& y, const std::vector<int>& train, const FullPrior& prior,
                         const MatrixXd& Z, const ArxSpec& dgp, int S, Mode mode, std::uint64_t seed) {
    if (S < 1) throw std::invalid_argument("S must be positive");
    if (dgp.T() != Z.rows()) throw std::invalid_argument("DGP and design differ in length");
    FoldPosterior fp(y, train, prior, Z);
    const MatrixXd yt = simulate(dgp, seed, S);
    const std::vector<int> all = all_indices(static_cast<int>(Z.rows()));
    std::vector<double> vals(S);
    for (int s = 0; s < S; ++s) vals[s] = fp.log_predictive(yt.row(s).transpose(), all, mode);
    return mean_se(vals);
}

CvPair cv_statistics(const VectorXd& y, const FoldPlan& plan, const FullPrior& prior, const MatrixXd& Z) {
    if (plan.T != y.size()) throw std::invalid_argument("plan and data differ in length");
    const double T = static_cast<double>(plan.T), K = static_cast<double>(plan.K());
    CvPair out;
    for (const Fold& f : plan.folds) {
        FoldPosterior fp(y, f.train, prior, Z);
        VectorXd yt(f.test.size());
        for (std::size_t i = 0; i < f.test.size(); ++i) yt(i) = y(f.test[i] - 1);
        const double w = T / (K * static_cast<double>(f.test.size()));
        out.joint += w * fp.log_predictive(yt, f.test, Mode::Joint);
        out.pointwise += w * fp.log_predictive(yt, f.test, Mode::Pointwise);
    }
    return out;
}

double cv_statistic(const VectorXd& y, const FoldPlan& plan, const FullPrior& prior, const MatrixXd& Z) {
    const CvPair p = cv_statistics(y, plan, prior, Z);
    return plan.mode == Mode::Joint ? p.joint : p.pointwise;
}

} // namespace arxcv
