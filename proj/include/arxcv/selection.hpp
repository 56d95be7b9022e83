#pragma once

#include "arxcv/cv_schemes.hpp"
#include "arxcv/gchisq.hpp"
#include "arxcv/sarx.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace arxcv {

// CV: the scheme's estimator. Theoretical: eljpd (joint) or elppd (pointwise)
// over the full series, the mode taken from the scheme.
enum class Objective { CV, Theoretical };

// model_a is the better model by construction, so omega > 0 is a correct choice.
struct ComparisonSetup {
    ArxSpec dgp;
    SarxModel model_a;
    SarxModel model_b;
    SchemeSpec scheme;
    Objective objective = Objective::CV;
    double gamma = 0.01;

    Index T() const { return dgp.T(); }
    void validate() const;
};

QuadForm statistic_form(const SarxModel& model, const ComparisonSetup& s);
QuadForm statistic_form(const ComparisonSetup& s); // omega = A - B

double adverse_probability(const QuadForm& omega, const GaussianLaw& law);
double adverse_probability(const ComparisonSetup& s);

bool is_well_separated(double prob, double gamma);

struct StatSummary {
    double adverse = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double q01 = 0.0;
    double q99 = 0.0;
};

StatSummary summarize(const ComparisonSetup& s);

// max over models of eljpd(y) minus eljpd(y) of the CV choice, one per simulated y
std::vector<double> cost_samples(const ComparisonSetup& s, int n_reps, std::uint64_t seed);

struct MinSampleResult {
    std::optional<int> T_min;
    bool linear_scan = false;   // binary search was abandoned for a scan
    int evaluations = 0;
};

using SetupAt = std::function<ComparisonSetup(int T)>;

// smallest T in [lo, hi] with adverse probability below gamma
MinSampleResult min_sample_size(const SetupAt& make, double gamma, int lo = 10, int hi = 2500);

// first grid point lo, lo+step, ... with adverse probability below gamma
MinSampleResult min_sample_size_scan(const SetupAt& make, double gamma, int lo, int hi, int step);

struct SweepRow {
    double value = 0.0; // the swept coordinate
    double alpha = 0.0;
    std::string scheme;
    std::string mode;
    int T = 0;
    StatSummary stat;
    std::string error; // non-empty when the row could not be computed
};

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

} // namespace arxcv
