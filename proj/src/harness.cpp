#include "arxcv/harness.hpp"
#include "arxcv/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace arxcv {

namespace {

// stream tags for derive_seed
constexpr std::uint64_t kCovariateStream = 1;
constexpr std::uint64_t kReplicateStream = 2;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

VectorXd phi_vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

double quantile7(const std::vector<double>& sorted, double p) {
    const double h = (sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

SarxModel family(const ExperimentSpec& spec, const MatrixXd& Z, int p, int q) {
    SarxModel m;
    m.arx.Z = Z.leftCols(q);
    m.arx.phi = VectorXd::Zero(p);
    m.arx.beta = VectorXd::Zero(q);
    m.arx.sigma2 = spec.sigma2;
    m.prior_mean = spec.beta_star().head(q);
    m.prior_cov = MatrixXd::Identity(q, q);
    return m;
}

ResultRow base_row(const ExperimentSpec& spec, Engine e, double alpha, const SchemeSpec& sc, int T) {
    ResultRow r;
    r.experiment = spec.id;
    r.variant = spec.variant;
    r.engine = e;
    r.alpha = alpha;
    r.scheme = sc.name();
    r.mode = mode_name(sc.mode);
    r.T = T;
    return r;
}

std::vector<ResultRow> run_analytic(const ExperimentSpec& spec, int threads) {
    const int na = static_cast<int>(spec.alpha_grid.size());
    const int ns = static_cast<int>(spec.schemes.size());
    std::vector<std::optional<CandidatePair>> fits(na);
    std::vector<std::string> fit_err(na);
    parallel_for(na, threads, [&](int i) {
        try {
            fits[i] = fit_candidates(spec, spec.alpha_grid[i], spec.T);
        } catch (const std::exception& e) {
            fit_err[i] = e.what();
        }
    });

    std::vector<ResultRow> rows(static_cast<std::size_t>(na) * ns);
    parallel_for(na * ns, threads, [&](int k) {
        const int i = k / ns, j = k % ns;
        const SchemeSpec& sc = spec.schemes[j];
        ResultRow r = base_row(spec, Engine::Analytic, spec.alpha_grid[i], sc, spec.T);
        if (!fits[i]) {
            r.error = "oracle: " + fit_err[i];
        } else {
            try {
                r.stat = summarize(make_setup(*fits[i], sc, Objective::CV, spec.gamma));
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
        rows[k] = r;
    });
    return rows;
}

ExperimentResult run_full_bayes(const ExperimentSpec& spec, int threads) {
    const int na = static_cast<int>(spec.alpha_grid.size());
    const int ns = static_cast<int>(spec.schemes.size());
    const int R = spec.replicates;
    const int T = spec.T;
    const MatrixXd Z = experiment_covariates(spec, T);
    const VectorXd bstar = spec.beta_star();

    ExperimentResult out;
    std::vector<std::string> scheme_err(ns);
    if (spec.p_a != 1 || spec.p_b != 1)
        std::fill(scheme_err.begin(), scheme_err.end(), "full-Bayes engine needs lag-1 candidates");

    // schemes that differ only in mode share one fold plan and one pass
    std::vector<std::string> keys;
    std::vector<int> group(ns, -1);
    std::vector<FoldPlan> plans;
    for (int j = 0; j < ns; ++j) {
        if (!scheme_err[j].empty()) continue;
        const std::string key = spec.schemes[j].name();
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it != keys.end()) {
            group[j] = static_cast<int>(it - keys.begin());
            continue;
        }
        try {
            plans.push_back(make_plan(spec.schemes[j], T));
            keys.push_back(key);
            group[j] = static_cast<int>(keys.size()) - 1;
        } catch (const std::exception& e) {
            scheme_err[j] = e.what();
        }
    }
    const int ng = static_cast<int>(plans.size());

    const FullPrior prior_a = FullPrior::centered(bstar.head(spec.q_a));
    const FullPrior prior_b = FullPrior::centered(bstar.head(spec.q_b));
    const MatrixXd Za = Z.leftCols(spec.q_a), Zb = Z.leftCols(spec.q_b);

    std::vector<ArxSpec> dgps;
    for (double a : spec.alpha_grid) dgps.push_back(experiment_dgp(spec, a, T));

    // slot (i, r) holds one CvPair difference per group
    std::vector<std::vector<CvPair>> omega(static_cast<std::size_t>(na) * R);
    std::vector<std::string> err(omega.size());
    if (ng > 0) {
        parallel_for(na * R, threads, [&](int k) {
            const int i = k / R, r = k % R;
            const VectorXd y = simulate(dgps[i], derive_seed(spec.seed, kReplicateStream, r), 1).row(0).transpose();
            try {
                std::vector<CvPair> w(ng);
                for (int g = 0; g < ng; ++g) {
                    const CvPair a = cv_statistics(y, plans[g], prior_a, Za);
                    const CvPair b = cv_statistics(y, plans[g], prior_b, Zb);
                    w[g] = {a.joint - b.joint, a.pointwise - b.pointwise};
                }
                omega[k] = std::move(w);
            } catch (const std::exception& e) {
                err[k] = e.what();
            }
        });
    }

    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < ns; ++j) {
            const SchemeSpec& sc = spec.schemes[j];
            ResultRow row = base_row(spec, Engine::FullBayes, spec.alpha_grid[i], sc, T);
            if (!scheme_err[j].empty()) {
                row.error = scheme_err[j];
                out.rows.push_back(row);
                continue;
            }
            std::vector<double> w;
            int failed = 0;
            std::string first;
            for (int r = 0; r < R; ++r) {
                const std::size_t k = static_cast<std::size_t>(i) * R + r;
                if (!err[k].empty()) {
                    if (failed++ == 0) first = err[k];
                    continue;
                }
                const CvPair& c = omega[k][group[j]];
                const double v = sc.mode == Mode::Joint ? c.joint : c.pointwise;
                w.push_back(v);
                out.replicates.push_back({spec.alpha_grid[i], r, sc.name(), mode_name(sc.mode), v});
            }
            row.replicates = static_cast<int>(w.size());
            if (w.empty()) {
                row.error = "all replicates failed: " + first;
            } else {
                row.stat = empirical_summary(w);
                if (failed > 0) row.error = std::to_string(failed) + " replicates failed: " + first;
            }
            out.rows.push_back(row);
        }
    }
    return out;
}

} // namespace

std::string variant_name(Variant v) { return v == Variant::Easy ? "easy" : "hard"; }

Variant parse_variant(const std::string& s) {
    if (s == "easy") return Variant::Easy;
    if (s == "hard") return Variant::Hard;
    throw ConfigError("unknown variant: " + s);
}

std::string engine_name(Engine e) { return e == Engine::Analytic ? "analytic" : "full-bayes"; }

Engine parse_engine(const std::string& s) {
    if (s == "analytic") return Engine::Analytic;
    if (s == "full-bayes" || s == "fullbayes" || s == "full_bayes") return Engine::FullBayes;
    throw ConfigError("unknown engine: " + s);
}

VectorXd ExperimentSpec::beta_star() const {
    return variant == Variant::Easy ? phi_vec({1.0, 2.0, 1.0}) : phi_vec({1.0, 0.5, 1.0});
}

void ExperimentSpec::validate() const {
    if (id < 1) throw ConfigError("experiment id must be positive");
    if (base_phi.size() > 2) throw ConfigError("base_phi has more than two lags");
    for (int p : {p_a, p_b})
        if (p < 0 || p > 2) throw ConfigError("candidate lag order must be 0, 1 or 2");
    for (int q : {q_a, q_b})
        if (q < 1 || q > 3) throw ConfigError("candidate covariate count must be 1, 2 or 3");
    if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
    for (double a : alpha_grid) {
        if (!std::isfinite(a)) throw ConfigError("alpha must be finite");
        if (base_phi.size() > 0 && !is_stationary(a * base_phi))
            throw ConfigError("alpha " + format_double(a) + " gives a nonstationary DGP");
    }
    if (T < 5) throw ConfigError("T must be at least 5");
    if (replicates < 1) throw ConfigError("replicates must be positive");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2 must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (schemes.empty()) throw ConfigError("no CV schemes given");
    for (const SchemeSpec& s : schemes) {
        try {
            s.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("scheme: ") + e.what());
        }
    }
}

ExperimentSpec table1_experiment(int id, Variant v) {
    ExperimentSpec s;
    s.id = id;
    s.variant = v;
    switch (id) {
    case 1: s.base_phi = phi_vec({0.75, 0.2}); s.p_a = 1; s.q_a = 2; s.p_b = 1; s.q_b = 1; break;
    case 2: s.base_phi = phi_vec({0.95}); s.p_a = 1; s.q_a = 3; s.p_b = 1; s.q_b = 2; break;
    case 3: s.base_phi = phi_vec({0.95}); s.p_a = 1; s.q_a = 2; s.p_b = 1; s.q_b = 1; break;
    case 4: s.base_phi = phi_vec({0.95}); s.p_a = 0; s.q_a = 2; s.p_b = 0; s.q_b = 1; break;
    case 5: s.base_phi = phi_vec({0.75, 0.2}); s.p_a = 1; s.q_a = 3; s.p_b = 1; s.q_b = 1; break;
    default: throw ConfigError("no table experiment with id " + std::to_string(id));
    }
    s.schemes = {SchemeSpec::loo(), SchemeSpec::hvblock(3, 3, Mode::Joint)};
    return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix(splitmix(splitmix(splitmix(base) ^ a) ^ b) ^ c);
}

MatrixXd experiment_covariates(const ExperimentSpec& spec, int T) {
    return make_covariates(T, 3, derive_seed(spec.seed, kCovariateStream, static_cast<std::uint64_t>(spec.id)));
}

ArxSpec experiment_dgp(const ExperimentSpec& spec, double alpha, int T) {
    return dgp_from_alpha(alpha, spec.base_phi, spec.beta_star(), spec.sigma2, experiment_covariates(spec, T));
}

CandidatePair fit_candidates(const ExperimentSpec& spec, double alpha, int T) {
    CandidatePair c;
    c.dgp = experiment_dgp(spec, alpha, T);
    const SarxModel fa = family(spec, c.dgp.Z, spec.p_a, spec.q_a);
    const SarxModel fb = family(spec, c.dgp.Z, spec.p_b, spec.q_b);
    c.fit_a = fit_oracle(fa, c.dgp);
    c.fit_b = fit_oracle(fb, c.dgp);
    c.a = with_oracle(fa, c.fit_a);
    c.b = with_oracle(fb, c.fit_b);
    return c;
}

ComparisonSetup make_setup(const CandidatePair& c, const SchemeSpec& scheme, Objective objective, double gamma) {
    ComparisonSetup s;
    s.dgp = c.dgp;
    s.model_a = c.a;
    s.model_b = c.b;
    s.scheme = scheme;
    s.objective = objective;
    s.gamma = gamma;
    return s;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, Engine engine, int threads) {
    spec.validate();
    if (engine == Engine::Analytic) return {run_analytic(spec, threads), {}};
    return run_full_bayes(spec, threads);
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "experiment,variant,engine,alpha,scheme,mode,T,adverse_prob,mean,sd,q01,q99,replicates,error\n";
    for (const ResultRow& r : rows) {
        os << r.experiment << ',' << variant_name(r.variant) << ',' << engine_name(r.engine) << ','
           << format_double(r.alpha) << ',' << r.scheme << ',' << r.mode << ',' << r.T << ',';
        // a row with a partial failure still carries its statistics
        const bool has_stat = r.error.empty() || (r.engine == Engine::FullBayes && r.replicates > 0);
        if (has_stat)
            os << format_double(r.stat.adverse) << ',' << format_double(r.stat.mean) << ','
               << format_double(r.stat.sd) << ',' << format_double(r.stat.q01) << ','
               << format_double(r.stat.q99) << ',';
        else
            os << ",,,,,";
        os << r.replicates << ',' << csv_safe(r.error) << '\n';
    }
}

void write_replicates_csv(std::ostream& os, const std::vector<ReplicateRow>& rows) {
    os << "alpha,replicate,scheme,mode,omega\n";
    for (const ReplicateRow& r : rows)
        os << format_double(r.alpha) << ',' << r.replicate << ',' << r.scheme << ',' << r.mode << ','
           << format_double(r.omega) << '\n';
}

std::string axis_name(SweepAxis a) {
    switch (a) {
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::T: return "T";
    case SweepAxis::H: return "h";
    case SweepAxis::V: return "v";
    }
    return "?";
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "alpha") return SweepAxis::Alpha;
    if (s == "T" || s == "t") return SweepAxis::T;
    if (s == "h") return SweepAxis::H;
    if (s == "v") return SweepAxis::V;
    throw ConfigError("unknown sweep axis: " + s);
}

std::vector<SweepRow> sweep(const ExperimentSpec& spec, const SweepSpec& sw, int threads) {
    if (sw.values.empty()) throw ConfigError("sweep has no values");
    const int n = static_cast<int>(sw.values.size());
    for (double x : sw.values) {
        if (sw.axis != SweepAxis::Alpha && (x < 0.0 || x != std::floor(x)))
            throw ConfigError("sweep value " + format_double(x) + " is not a nonnegative integer");
        if (sw.axis == SweepAxis::T && x < 5.0) throw ConfigError("sweep T below 5");
    }

    // the oracle depends on (alpha, T) only, so h and v sweeps fit once
    std::optional<CandidatePair> shared;
    std::string shared_err;
    if (sw.axis == SweepAxis::H || sw.axis == SweepAxis::V) {
        try {
            shared = fit_candidates(spec, sw.alpha, spec.T);
        } catch (const std::exception& e) {
            shared_err = e.what();
        }
    }

    std::vector<SweepRow> rows(n);
    parallel_for(n, threads, [&](int i) {
        const double x = sw.values[i];
        SchemeSpec sc = sw.scheme;
        double alpha = sw.alpha;
        int T = spec.T;
        switch (sw.axis) {
        case SweepAxis::Alpha: alpha = x; break;
        case SweepAxis::T: T = static_cast<int>(x); break;
        case SweepAxis::H: sc.h = static_cast<int>(x); break;
        case SweepAxis::V: sc.v = static_cast<int>(x); break;
        }
        SweepRow r;
        r.value = x;
        r.alpha = alpha;
        r.scheme = sc.name();
        r.mode = mode_name(sc.mode);
        r.T = T;
        try {
            sc.validate();
            if (spec.base_phi.size() > 0 && !is_stationary(alpha * spec.base_phi))
                throw ConfigError("nonstationary DGP");
            if (!shared_err.empty()) throw NumericalFailure("oracle: " + shared_err);
            const CandidatePair c = shared ? *shared : fit_candidates(spec, alpha, T);
            r.stat = summarize(make_setup(c, sc, sw.objective, spec.gamma));
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        rows[i] = r;
    });
    return rows;
}

namespace {

SetupAt setup_at(const ExperimentSpec& spec, double alpha, const SchemeSpec& scheme) {
    // the search may revisit T, and the oracle is the expensive part
    auto cache = std::make_shared<std::map<int, CandidatePair>>();
    return [spec, alpha, scheme, cache](int T) {
        auto it = cache->find(T);
        if (it == cache->end()) it = cache->emplace(T, fit_candidates(spec, alpha, T)).first;
        return make_setup(it->second, scheme, Objective::CV, spec.gamma);
    };
}

} // namespace

MinSampleResult experiment_min_sample_size(const ExperimentSpec& spec, double alpha, const SchemeSpec& scheme,
                                           int lo, int hi) {
    return min_sample_size(setup_at(spec, alpha, scheme), spec.gamma, lo, hi);
}

MinSampleResult experiment_min_sample_scan(const ExperimentSpec& spec, double alpha, const SchemeSpec& scheme,
                                           int lo, int hi, int step) {
    return min_sample_size_scan(setup_at(spec, alpha, scheme), spec.gamma, lo, hi, step);
}

void write_min_sample_csv(std::ostream& os, const std::vector<MinSampleRow>& rows) {
    os << "alpha,scheme,mode,T_min,evaluations,linear_scan\n";
    for (const MinSampleRow& r : rows) {
        os << format_double(r.alpha) << ',' << r.scheme << ',' << r.mode << ',';
        if (r.result.T_min) os << *r.result.T_min;
        os << ',' << r.result.evaluations << ',' << (r.result.linear_scan ? "true" : "false") << '\n';
    }
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int nt = std::max(1, std::min(threads, n));
    if (nt == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first;
    std::mutex mu;
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

StatSummary empirical_summary(std::vector<double> omega) {
    if (omega.empty()) throw std::invalid_argument("no draws to summarize");
    std::sort(omega.begin(), omega.end());
    const double n = static_cast<double>(omega.size());
    StatSummary s;
    s.adverse = std::count_if(omega.begin(), omega.end(), [](double w) { return w < 0.0; }) / n;
    double sum = 0.0;
    for (double w : omega) sum += w;
    s.mean = sum / n;
    double ss = 0.0;
    for (double w : omega) ss += (w - s.mean) * (w - s.mean);
    s.sd = omega.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.q01 = quantile7(omega, 0.01);
    s.q99 = quantile7(omega, 0.99);
    return s;
}

} // namespace arxcv
