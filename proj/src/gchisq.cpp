#include "arxcv/gchisq.hpp"
#include "arxcv/errors.hpp"
#include "arxcv/linalg.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace arxcv {

namespace {

constexpr double kPi = 3.14159265358979323846;

// N = L^{-T} A L^{-1} and g = L^{-T} v
struct Whitened {
    MatrixXd N;
    Index band;
};

Whitened whiten(const MatrixXd& A, const MatrixXd& L) {
    Whitened w;
    w.band = lower_bandwidth(L);
    MatrixXd Y = lower_solve_t(L, w.band, A);               // L^{-T} A
    w.N = lower_solve_t(L, w.band, MatrixXd(Y.transpose())); // L^{-T} A L^{-1}
    w.N = 0.5 * (w.N + w.N.transpose()).eval();
    return w;
}

void check_symmetric(const MatrixXd& A) {
    const double scale = A.cwiseAbs().maxCoeff();
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
        throw std::invalid_argument("QuadForm matrix is not symmetric");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// log of the moment generating function; +inf outside its domain
double cumulant(const GChi2& d, double s) {
    double k = d.mu * s + 0.5 * d.sigma * d.sigma * s * s;
    for (Index j = 0; j < d.k(); ++j) {
        const double a = 1.0 - 2.0 * d.lambda(j) * s;
        if (a <= 0.0) return std::numeric_limits<double>::infinity();
        k += -0.5 * d.r(j) * std::log(a) + d.delta2(j) * d.lambda(j) * s / a;
    }
    return k;
}

// Chernoff bound on P(omega <= w) (lower=true) or P(omega >= w)
double chernoff(const GChi2& d, double w, bool lower) {
    double scale = d.sigma;
    for (Index j = 0; j < d.k(); ++j) scale = std::max(scale, std::abs(d.lambda(j)));
    double lim = 1e6 / std::max(scale, 1e-300);
    for (Index j = 0; j < d.k(); ++j) {
        const double l = d.lambda(j);
        if (lower && l < 0) lim = std::min(lim, -1.0 / (2.0 * l));
        if (!lower && l > 0) lim = std::min(lim, 1.0 / (2.0 * l));
    }
    lim *= 1.0 - 1e-9;
    auto f = [&](double t) {
        const double s = lower ? -t : t;
        return cumulant(d, s) - s * w;
    };
    auto res = boost::math::tools::brent_find_minima(f, 0.0, lim, 40);
    return std::exp(std::min(0.0, res.second));
}

struct Imhof {
    const GChi2& d;
    double w;
    mutable long evals = 0;

    double operator()(double u) const {
        ++evals;
        double theta = -0.5 * (w - d.mu) * u;
        double logrho = d.sigma * d.sigma * u * u / 8.0;
        for (Index j = 0; j < d.k(); ++j) {
            const double lu = d.lambda(j) * u;
            const double den = 1.0 + lu * lu;
            theta += 0.5 * (d.r(j) * std::atan(lu) + d.delta2(j) * lu / den);
            logrho += 0.25 * d.r(j) * std::log1p(lu * lu) + 0.5 * d.delta2(j) * lu * lu / den;
        }
        if (logrho > 700.0) return 0.0;
        return std::sin(theta) / (u * std::exp(logrho));
    }

    // bound on |d theta / du| for all arguments >= u
    double frequency(double u) const {
        double f = 0.5 * std::abs(w - d.mu);
        for (Index j = 0; j < d.k(); ++j) {
            const double l = std::abs(d.lambda(j));
            f += 0.5 * (d.r(j) + d.delta2(j)) * l / (1.0 + l * l * u * u);
        }
        return f;
    }

    // bound on the integral of |integrand| over [U, inf)
    double tail(double U) const {
        double e = d.sigma * d.sigma * U * U / 8.0;
        double kj = 0.0, lp = 0.0;
        for (Index j = 0; j < d.k(); ++j) {
            const double lu = std::abs(d.lambda(j)) * U;
            e += 0.5 * d.delta2(j) * lu * lu / (1.0 + lu * lu);
            if (lu >= 1.0) {
                kj += d.r(j);
                lp += 0.5 * d.r(j) * std::log(lu);
            }
        }
        double b = std::numeric_limits<double>::infinity();
        if (kj > 0) b = 2.0 / kj * std::exp(-lp - e);
        if (d.sigma > 0) {
            const double a = d.sigma * d.sigma / 8.0;
            double e0 = e - a * U * U; // delta part only
            b = std::min(b, std::exp(-e0) / U * 0.5 * std::sqrt(kPi / a) * std::erfc(std::sqrt(a) * U));
        }
        return b;
    }

    // Once the phase speed stays above m the tail oscillates with a slowly
    // shrinking envelope g; second mean value theorem gives about 2 g(U) / m.
    // Doubled for safety since g / theta' is only nearly monotone.
    double osc_tail(double U) const {
        double m = 0.5 * std::abs(w - d.mu), logrho = d.sigma * d.sigma * U * U / 8.0;
        const double slope = m;
        for (Index j = 0; j < d.k(); ++j) {
            const double l = std::abs(d.lambda(j)), lu = l * U;
            m -= 0.5 * (d.r(j) + d.delta2(j)) * l / (1.0 + lu * lu);
            logrho += 0.25 * d.r(j) * std::log1p(lu * lu) + 0.5 * d.delta2(j) * lu * lu / (1.0 + lu * lu);
        }
        if (!(m > 0.5 * slope)) return std::numeric_limits<double>::infinity();
        return 4.0 * std::exp(-logrho) / (U * m);
    }

    double tail_bound(double U) const { return std::min(tail(U), osc_tail(U)); }
};

CdfValue simulate_cdf(const GChi2& d, double w, const CdfOptions& opt) {
    const VectorXd draws = sample(d, opt.fallback_draws, opt.fallback_seed);
    const double n = static_cast<double>(draws.size());
    const double p = (draws.array() <= w).cast<double>().sum() / n;
    CdfValue v;
    v.p = p;
    v.error = std::max(std::sqrt(p * (1.0 - p) / n), 1.0 / n);
    v.simulated = true;
    return v;
}

} // namespace

double Moments::sd() const { return std::sqrt(std::max(variance, 0.0)); }

GChi2 params_from_quadform(const QuadForm& q, const GaussianLaw& law) {
    const Index T = law.T();
    if (q.T() != T) throw std::invalid_argument("QuadForm and law differ in length");
    check_symmetric(q.A);
    const double s2 = law.sigma2, s = std::sqrt(s2);
    const VectorXd& m = law.mean;
    const Index band = lower_bandwidth(law.cov_factor);
    const VectorXd Am = q.A * m;
    const VectorXd g = s * lower_solve_t(law.cov_factor, band, MatrixXd(2.0 * Am + q.b)).col(0);

    GChi2 d;
    d.mu = m.dot(Am) + q.b.dot(m) + q.c;
    const double amax = q.A.cwiseAbs().maxCoeff();
    if (amax == 0.0) {
        d.sigma = g.norm();
        d.lambda.resize(0);
        d.r.resize(0);
        d.delta2.resize(0);
        return d;
    }
    Whitened wh = whiten(q.A, law.cov_factor);
    const SymEigen es = sym_eigen(s2 * wh.N);
    const VectorXd bt = es.vectors.transpose() * g;
    const double lmax = es.values.cwiseAbs().maxCoeff();
    const double thr = 1e-10 * lmax;
    std::vector<double> lam, dl;
    double sig2 = 0.0;
    for (Index j = 0; j < T; ++j) {
        const double l = es.values(j);
        if (std::abs(l) < thr || lmax == 0.0) {
            sig2 += bt(j) * bt(j);
        } else {
            lam.push_back(l);
            const double delta = bt(j) / (2.0 * l);
            dl.push_back(delta * delta);
            d.mu -= bt(j) * bt(j) / (4.0 * l);
        }
    }
    d.sigma = std::sqrt(sig2);
    d.lambda = Eigen::Map<VectorXd>(lam.data(), lam.size());
    d.delta2 = Eigen::Map<VectorXd>(dl.data(), dl.size());
    d.r = VectorXd::Ones(lam.size());
    return d;
}

Moments moments(const QuadForm& q, const GaussianLaw& law) {
    if (q.T() != law.T()) throw std::invalid_argument("QuadForm and law differ in length");
    const double s2 = law.sigma2;
    const VectorXd& m = law.mean;
    const VectorXd Am = q.A * m;
    const Index band = lower_bandwidth(law.cov_factor);
    const VectorXd g = lower_solve_t(law.cov_factor, band, MatrixXd(q.b + 2.0 * Am)).col(0);
    Moments out;
    out.mean = m.dot(Am) + q.b.dot(m) + q.c;
    out.variance = s2 * g.squaredNorm();
    if (q.A.cwiseAbs().maxCoeff() > 0.0) {
        const Whitened wh = whiten(q.A, law.cov_factor);
        // tr(A V) = tr(N), tr(A V A V) = ||N||_F^2
        out.mean += s2 * wh.N.trace();
        out.variance += 2.0 * s2 * s2 * wh.N.squaredNorm();
    }
    return out;
}

Moments moments(const GChi2& d) {
    Moments out;
    out.mean = d.mu;
    out.variance = d.sigma * d.sigma;
    for (Index j = 0; j < d.k(); ++j) {
        out.mean += d.lambda(j) * (d.r(j) + d.delta2(j));
        out.variance += 2.0 * d.lambda(j) * d.lambda(j) * (d.r(j) + 2.0 * d.delta2(j));
    }
    return out;
}

CdfValue cdf_detail(const GChi2& d, double w, const CdfOptions& opt) {
    CdfValue out;
    if (std::isnan(w)) throw std::invalid_argument("cdf at NaN");
    if (d.k() == 0) {
        if (d.sigma == 0.0) out.p = (w >= d.mu) ? 1.0 : 0.0;
        else out.p = normal_cdf((w - d.mu) / d.sigma);
        return out;
    }
    const Moments mo = moments(d);
    if (w < mo.mean) {
        const double b = chernoff(d, w, true);
        if (b < 0.01 * opt.abs_tol) {
            out.p = 0.0;
            out.error = b;
            return out;
        }
    } else {
        const double b = chernoff(d, w, false);
        if (b < 0.01 * opt.abs_tol) {
            out.p = 1.0;
            out.error = b;
            return out;
        }
    }

    Imhof f{d, w};
    double scale = 0.0;
    for (Index j = 0; j < d.k(); ++j) scale = std::max(scale, std::abs(d.lambda(j)));
    const double tail_tol = 0.1 * opt.abs_tol * kPi;
    const double slope = 0.5 * std::abs(w - d.mu);
    const long panel_budget = 20000;

    double U = 1.0 / scale;
    double ucap = 1e12 / scale;
    if (slope > 0) ucap = std::min(ucap, std::max(U, panel_budget * kPi / slope));
    while (f.tail_bound(U) > tail_tol && U < ucap) U *= 2.0;

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto fr = [&f](double x) { return f(x); }; // keep the eval counter shared
    double total = 0.0, errsum = 0.0;
    double u = 0.0;
    long panels = 0;
    bool budget_hit = false;
    while (u < U) {
        const double hw = std::min(kPi / f.frequency(u), U - u);
        double err = 0.0;
        total += GK::integrate(fr, u, u + hw, 8, 1e-9, &err);
        errsum += err;
        u += hw;
        if (++panels > 10 * panel_budget || f.evals > opt.max_evals) {
            budget_hit = true;
            break;
        }
    }
    double tail_err = budget_hit ? std::numeric_limits<double>::infinity() : f.tail_bound(U);
    if (!budget_hit && tail_err > tail_tol && slope > 0) {
        // the phase is asymptotically linear; continue by half periods and use the
        // alternating-series bound on what is left
        const double hw = kPi / slope;
        double last = std::numeric_limits<double>::infinity(), prev = last;
        for (long n = 0; n < 10 * panel_budget && f.evals <= opt.max_evals; ++n) {
            double err = 0.0;
            const double t = GK::integrate(fr, u, u + hw, 8, 1e-9, &err);
            total += t;
            errsum += err;
            u += hw;
            prev = last;
            last = std::abs(t);
            if (last < tail_tol && last <= prev) break;
            if (f.tail_bound(u) < tail_tol) {
                last = f.tail_bound(u);
                break;
            }
        }
        tail_err = std::min(tail_err, last);
    }

    out.p = std::clamp(0.5 - total / kPi, 0.0, 1.0);
    out.error = (errsum + tail_err) / kPi;
    if (!(out.error <= opt.fallback_tol)) return simulate_cdf(d, w, opt);
    return out;
}

double cdf(const GChi2& d, double w) { return cdf_detail(d, w).p; }

double quantile(const GChi2& d, double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    if (d.k() == 0 && d.sigma == 0.0) return d.mu;
    const Moments mo = moments(d);
    const double sd = std::max(mo.sd(), 1e-300);
    auto g = [&](double w) { return cdf(d, w) - prob; };
    double lo = mo.mean - 8.0 * sd, hi = mo.mean + 8.0 * sd;
    for (int i = 0; i < 60 && g(lo) > 0; ++i) lo -= 8.0 * sd * (i + 1);
    for (int i = 0; i < 60 && g(hi) < 0; ++i) hi += 8.0 * sd * (i + 1);
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(40), iters);
    return 0.5 * (r.first + r.second);
}

VectorXd sample(const GChi2& d, Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    VectorXd dl = d.delta2.cwiseSqrt();
    VectorXd out(n);
    for (Index i = 0; i < n; ++i) {
        double v = d.mu + d.sigma * nd(rng);
        for (Index j = 0; j < d.k(); ++j) {
            const double z = nd(rng) + dl(j);
            double x = z * z;
            for (int extra = 1; extra < static_cast<int>(std::lround(d.r(j))); ++extra) {
                const double e = nd(rng);
                x += e * e;
            }
            v += d.lambda(j) * x;
        }
        out(i) = v;
    }
    return out;
}

void write_gchi2_csv(std::ostream& os, const GChi2& d) {
    os << "j,lambda,r,delta2,mu,sigma\n";
    for (Index j = 0; j < d.k(); ++j)
        os << (j + 1) << ',' << format_double(d.lambda(j)) << ',' << format_double(d.r(j)) << ','
           << format_double(d.delta2(j)) << ",,\n";
    os << "0,,,," << format_double(d.mu) << ',' << format_double(d.sigma) << '\n';
}

} // namespace arxcv
