#include "arxcv/selection.hpp"
#include "arxcv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace arxcv {

void ComparisonSetup::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    dgp.validate();
    model_a.validate();
    model_b.validate();
    if (model_a.T() != T() || model_b.T() != T()) throw std::invalid_argument("models and DGP differ in length");
    scheme.validate();
}

QuadForm statistic_form(const SarxModel& model, const ComparisonSetup& s) {
    if (s.objective == Objective::Theoretical) return elpd_quadform(model, s.dgp, s.scheme.mode);
    return cv_quadform(model, make_plan(s.scheme, static_cast<int>(s.T())));
}

QuadForm statistic_form(const ComparisonSetup& s) {
    s.validate();
    if (s.objective == Objective::Theoretical)
        return diff(elpd_quadform(s.model_a, s.dgp, s.scheme.mode), elpd_quadform(s.model_b, s.dgp, s.scheme.mode));
    const FoldPlan plan = make_plan(s.scheme, static_cast<int>(s.T()));
    return diff(cv_quadform(s.model_a, plan), cv_quadform(s.model_b, plan));
}

double adverse_probability(const QuadForm& omega, const GaussianLaw& law) {
    return cdf(params_from_quadform(omega, law), 0.0);
}

double adverse_probability(const ComparisonSetup& s) {
    return adverse_probability(statistic_form(s), joint_law(s.dgp));
}

bool is_well_separated(double prob, double gamma) { return prob < gamma; }

StatSummary summarize(const ComparisonSetup& s) {
    const QuadForm w = statistic_form(s);
    const GaussianLaw law = joint_law(s.dgp);
    const GChi2 d = params_from_quadform(w, law);
    const Moments m = moments(w, law);
    StatSummary out;
    out.adverse = cdf(d, 0.0);
    out.mean = m.mean;
    out.sd = m.sd();
    out.q01 = quantile(d, 0.01);
    out.q99 = quantile(d, 0.99);
    return out;
}

std::vector<double> cost_samples(const ComparisonSetup& s, int n_reps, std::uint64_t seed) {
    if (n_reps < 0) throw std::invalid_argument("n_reps must be non-negative");
    const QuadForm w = statistic_form(s);
    const QuadForm ea = elpd_quadform(s.model_a, s.dgp, Mode::Joint);
    const QuadForm eb = elpd_quadform(s.model_b, s.dgp, Mode::Joint);
    const MatrixXd y = simulate(s.dgp, seed, n_reps);
    std::vector<double> out(n_reps);
    for (int n = 0; n < n_reps; ++n) {
        const VectorXd yn = y.row(n).transpose();
        const double a = ea.eval(yn), b = eb.eval(yn);
        const double chosen = w.eval(yn) >= 0.0 ? a : b;
        out[n] = std::max(a, b) - chosen;
    }
    return out;
}

namespace {

struct Probe {
    const SetupAt& make;
    double gamma;
    int evals = 0;

    bool good(int T) {
        ++evals;
        try {
            return is_well_separated(adverse_probability(make(T)), gamma);
        } catch (const InfeasibleScheme&) {
            return false; // too short for the scheme
        }
    }
};

} // namespace

MinSampleResult min_sample_size_scan(const SetupAt& make, double gamma, int lo, int hi, int step) {
    if (lo > hi || step < 1) throw std::invalid_argument("bad scan range");
    Probe pr{make, gamma};
    MinSampleResult r;
    r.linear_scan = true;
    for (int T = lo; T <= hi; T += step) {
        if (pr.good(T)) {
            r.T_min = T;
            break;
        }
    }
    r.evaluations = pr.evals;
    return r;
}

MinSampleResult min_sample_size(const SetupAt& make, double gamma, int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("empty search range");
    Probe pr{make, gamma};
    MinSampleResult r;
    if (pr.good(lo)) {
        r.T_min = lo;
        r.evaluations = pr.evals;
        return r;
    }
    if (!pr.good(hi)) {
        r.evaluations = pr.evals;
        return r;
    }
    int bad = lo, good = hi;
    while (good - bad > 1) {
        const int mid = bad + (good - bad) / 2;
        if (pr.good(mid)) good = mid;
        else bad = mid;
    }
    // post hoc check: a few points below the boundary must all fail,
    // otherwise the curve is not monotone and we fall back to scanning
    bool monotone = true;
    for (int k = 1; k <= 4 && monotone; ++k) {
        const int T = lo + (good - 1 - lo) * k / 5;
        if (T > lo && T < good && pr.good(T)) monotone = false;
    }
    if (monotone) {
        r.T_min = good;
        r.evaluations = pr.evals;
        return r;
    }
    MinSampleResult scan = min_sample_size_scan(make, gamma, lo, good, 1);
    scan.evaluations += pr.evals;
    return scan;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "value,alpha,scheme,mode,T,adverse_prob,mean,sd,q01,q99,error\n";
    for (const SweepRow& r : rows) {
        os << format_double(r.value) << ',' << format_double(r.alpha) << ',' << r.scheme << ',' << r.mode << ',' << r.T << ',';
        if (r.error.empty()) {
            os << format_double(r.stat.adverse) << ',' << format_double(r.stat.mean) << ','
               << format_double(r.stat.sd) << ',' << format_double(r.stat.q01) << ','
               << format_double(r.stat.q99) << ",\n";
        } else {
            std::string e = r.error;
            std::replace(e.begin(), e.end(), ',', ';');
            os << ",,,,," << e << '\n';
        }
    }
}

} // namespace arxcv
