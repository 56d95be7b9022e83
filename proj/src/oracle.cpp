#include "arxcv/oracle.hpp"
#include "arxcv/errors.hpp"
#include "arxcv/gchisq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace arxcv {

NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& x0,
                             const NelderMeadOptions& opt) {
    const Index n = x0.size();
    auto eval = [&](const VectorXd& x) {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::vector<VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (Index i = 0; i < n; ++i) xs[i + 1](i) += opt.scale;
    for (Index i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

    NelderMeadResult res;
    std::vector<Index> order(n + 1);
    for (int it = 0; it < opt.max_iter; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return fs[a] < fs[b]; });
        std::vector<VectorXd> xs2;
        std::vector<double> fs2;
        for (Index i : order) {
            xs2.push_back(xs[i]);
            fs2.push_back(fs[i]);
        }
        xs.swap(xs2);
        fs.swap(fs2);
        res.iterations = it;

        double xspread = 0.0;
        for (Index i = 1; i <= n; ++i) xspread = std::max(xspread, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
        if (fs[n] - fs[0] <= opt.ftol && xspread <= opt.xtol) {
            res.converged = true;
            break;
        }

        VectorXd c = VectorXd::Zero(n);
        for (Index i = 0; i < n; ++i) c += xs[i];
        c /= static_cast<double>(n);
        const VectorXd xr = c + (c - xs[n]);
        const double fr = eval(xr);
        if (fr < fs[0]) {
            const VectorXd xe = c + 2.0 * (c - xs[n]);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
            continue;
        }
        bool shrink = false;
        if (fr < fs[n]) {
            const VectorXd xc = c + 0.5 * (xr - c);
            const double fc = eval(xc);
            if (fc <= fr) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            const VectorXd xc = c + 0.5 * (xs[n] - c);
            const double fc = eval(xc);
            if (fc < fs[n]) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (Index i = 1; i <= n; ++i) {
                xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                fs[i] = eval(xs[i]);
            }
        }
    }
    const auto best = std::min_element(fs.begin(), fs.end()) - fs.begin();
    res.x = xs[best];
    res.f = fs[best];
    if (!res.converged) res.iterations = opt.max_iter;
    return res;
}

VectorXd pacf_to_phi(const VectorXd& pacf) {
    const Index p = pacf.size();
    VectorXd phi = VectorXd::Zero(p);
    for (Index k = 0; k < p; ++k) {
        VectorXd prev = phi.head(k);
        for (Index j = 0; j < k; ++j) phi(j) = prev(j) - pacf(k) * prev(k - 1 - j);
        phi(k) = pacf(k);
    }
    return phi;
}

VectorXd phi_to_pacf(const VectorXd& phi) {
    const Index p = phi.size();
    VectorXd cur = phi, pacf(p);
    for (Index k = p - 1; k >= 0; --k) {
        const double r = cur(k);
        pacf(k) = r;
        if (std::abs(r) >= 1.0) throw std::invalid_argument("phi outside the stationarity region");
        VectorXd prev(k);
        for (Index j = 0; j < k; ++j) prev(j) = (cur(j) + r * cur(k - 1 - j)) / (1.0 - r * r);
        cur = prev;
    }
    return pacf;
}

VectorXd unconstrained_to_phi(const VectorXd& u) { return pacf_to_phi(u.array().tanh().matrix()); }

VectorXd phi_to_unconstrained(const VectorXd& phi) { return phi_to_pacf(phi).array().atanh().matrix(); }

double expected_kl(const SarxModel& model, const ArxSpec& dgp) {
    const Index T = model.T();
    if (dgp.T() != T) throw std::invalid_argument("model and DGP lengths differ");
    const VectorXd& phi = model.arx.phi;
    const MatrixXd& Z = model.arx.Z;
    const double s2 = model.arx.sigma2, ss2 = dgp.sigma2;

    const MatrixXd ZtZ = Z.transpose() * Z;
    Eigen::LLT<MatrixXd> s0(model.prior_cov);
    if (s0.info() != Eigen::Success) throw NumericalFailure("prior covariance is not SPD");
    const MatrixXd S0inv = s0.solve(MatrixXd::Identity(Z.cols(), Z.cols()));
    const MatrixXd Sb_inv = ZtZ + S0inv;
    Eigen::LLT<MatrixXd> sb(Sb_inv);
    const MatrixXd H = Sb_inv + ZtZ;
    Eigen::LLT<MatrixXd> hl(H);
    if (sb.info() != Eigen::Success || hl.info() != Eigen::Success)
        throw NumericalFailure("posterior precision is not SPD");
    const MatrixXd Sb = sb.solve(MatrixXd::Identity(Z.cols(), Z.cols()));
    // log|V| = log|I + Sb Z'Z| = log|H| - log|Sb^{-1}|
    const double logdetV = 2.0 * (hl.matrixLLT().diagonal().array().log().sum()
                                  - sb.matrixLLT().diagonal().array().log().sum());

    // tr(Lambda V*) = ||L L*^{-1}||_F^2, a Toeplitz matrix with first column g
    const VectorXd g = ar_filter(phi, impulse_response(dgp.phi, T));
    double trLV = 0.0;
    for (Index n = 0; n < T; ++n) trLV += static_cast<double>(T - n) * g(n) * g(n);

    const MatrixXd Y = ar_solve_t(dgp.phi, ar_filter_t(phi, Z)); // L*^{-T} L' Z
    const MatrixXd YtY = Y.transpose() * Y;
    const double tr1 = trLV - hl.solve(YtY).trace();
    const MatrixXd Gq = ZtZ - ZtZ * hl.solve(ZtZ);
    const double tr2 = (Gq * Sb * YtY * Sb).trace();

    const VectorXd mstar = ar_solve(dgp.phi, VectorXd(dgp.Z * dgp.beta));
    const VectorXd nvec = ar_filter(phi, mstar);
    const VectorXd kappa = Sb * (Z.transpose() * nvec + S0inv * model.prior_mean);
    const VectorXd r = Z * kappa - nvec;
    const VectorXd Ztr = Z.transpose() * r;
    const double quad = r.squaredNorm() - Ztr.dot(hl.solve(Ztr));

    return 0.5 * (T * std::log(s2) + logdetV - T * std::log(ss2) - static_cast<double>(T))
           + ss2 / (2.0 * s2) * (tr1 + tr2) + quad / (2.0 * s2);
}

double expected_eljpd(const SarxModel& model, const ArxSpec& dgp) {
    const QuadForm q = elpd_quadform(model, dgp, Mode::Joint);
    return moments(q, joint_law(dgp)).mean;
}

SarxModel with_oracle(const SarxModel& family, const OracleResult& r) {
    SarxModel m = family;
    m.arx.phi = r.phi_hat;
    m.arx.sigma2 = r.sigma2_hat;
    return m;
}

namespace {

OracleResult fit_with(const SarxModel& family, const ArxSpec& dgp, const NelderMeadOptions& opt,
                      const std::function<double(const SarxModel&)>& objective) {
    const Index p = family.arx.phi.size();
    if (p > 2) throw std::invalid_argument("oracle search supports p <= 2");
    if (dgp.T() != family.T()) throw std::invalid_argument("model and DGP lengths differ");
    SarxModel m = family;
    auto f = [&](const VectorXd& x) {
        m.arx.phi = unconstrained_to_phi(x.head(p));
        m.arx.sigma2 = std::exp(x(p));
        if (!is_stationary(m.arx.phi) || !(m.arx.sigma2 > 0.0) || !std::isfinite(m.arx.sigma2))
            return std::numeric_limits<double>::infinity();
        try {
            return objective(m);
        } catch (const NumericalFailure&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const double starts[3] = {0.0, 0.5, -0.5};
    NelderMeadResult best;
    best.f = std::numeric_limits<double>::infinity();
    int iters = 0;
    for (double s : starts) {
        VectorXd x0(p + 1);
        x0.head(p).setConstant(s);
        x0(p) = std::log(dgp.sigma2) + s;
        NelderMeadResult r = nelder_mead(f, x0, opt);
        iters += r.iterations;
        if (r.f < best.f) best = r;
    }
    // restart from the winner until it stops moving
    for (int k = 0; k < 5; ++k) {
        NelderMeadResult r = nelder_mead(f, best.x, opt);
        iters += r.iterations;
        const bool moved = r.f < best.f - opt.ftol;
        if (r.f <= best.f) best = r;
        if (!moved) break;
    }
    OracleResult out;
    out.phi_hat = unconstrained_to_phi(best.x.head(p));
    out.sigma2_hat = std::exp(best.x(p));
    out.objective = best.f;
    out.converged = best.converged && std::isfinite(best.f);
    out.iterations = iters;
    return out;
}

} // namespace

OracleResult fit_oracle(const SarxModel& family, const ArxSpec& dgp, const NelderMeadOptions& opt) {
    return fit_with(family, dgp, opt, [&](const SarxModel& m) { return expected_kl(m, dgp); });
}

OracleResult fit_oracle_eljpd(const SarxModel& family, const ArxSpec& dgp, const NelderMeadOptions& opt) {
    OracleResult r = fit_with(family, dgp, opt, [&](const SarxModel& m) { return -expected_eljpd(m, dgp); });
    return r;
}

} // namespace arxcv
