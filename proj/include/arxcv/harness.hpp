#pragma once

#include "arxcv/full_bayes.hpp"
#include "arxcv/oracle.hpp"
#include "arxcv/selection.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace arxcv {

enum class Variant { Easy, Hard };
enum class Engine { Analytic, FullBayes };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);
std::string engine_name(Engine e);
Engine parse_engine(const std::string& s);

// One row of the experiment table. The DGP is ARX(p*, 3) with phi* = alpha * base_phi;
// candidate l is ARX(p_l, q_l) on the first q_l columns of Z.
struct ExperimentSpec {
    int id = 1;
    VectorXd base_phi;
    int p_a = 1, q_a = 2;
    int p_b = 1, q_b = 1;
    Variant variant = Variant::Hard;
    std::vector<double> alpha_grid{0.0, 0.5, 0.75, 1.0};
    int T = 100;
    int replicates = 500;
    std::uint64_t seed = 1;
    double sigma2 = 1.0;
    double gamma = 0.01;
    std::vector<SchemeSpec> schemes;

    VectorXd beta_star() const;  // (1,2,1) easy, (1,1/2,1) hard
    void validate() const;       // ConfigError on anything malformed
};

// ids 1..5; schemes default to pointwise LOO and joint hv-block(3,3)
ExperimentSpec table1_experiment(int id, Variant v = Variant::Hard);

// counter-based stream split, so results never depend on scheduling
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// T x 3 covariates for an experiment; the same seed for every T, so shorter
// matrices are prefixes of longer ones
MatrixXd experiment_covariates(const ExperimentSpec& spec, int T);

ArxSpec experiment_dgp(const ExperimentSpec& spec, double alpha, int T);

struct CandidatePair {
    ArxSpec dgp;
    SarxModel a;
    SarxModel b;
    OracleResult fit_a;
    OracleResult fit_b;
};

// oracle plug-in (phi, sigma2) for both candidates, beta prior N(beta*, sigma2 I) on their columns
CandidatePair fit_candidates(const ExperimentSpec& spec, double alpha, int T);

ComparisonSetup make_setup(const CandidatePair& c, const SchemeSpec& scheme, Objective objective, double gamma);

struct ResultRow {
    int experiment = 0;
    Variant variant = Variant::Hard;
    Engine engine = Engine::Analytic;
    double alpha = 0.0;
    std::string scheme;
    std::string mode;
    int T = 0;
    StatSummary stat;
    int replicates = 0;  // 0 for exact analytic rows
    std::string error;
};

// per replicate selection statistics of the full-Bayes engine
struct ReplicateRow {
    double alpha = 0.0;
    int replicate = 0;
    std::string scheme;
    std::string mode;
    double omega = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<ReplicateRow> replicates;
};

// rows ordered by (alpha in grid order, scheme in spec order) whatever the thread count
ExperimentResult run_experiment(const ExperimentSpec& spec, Engine engine, int threads = 1);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_replicates_csv(std::ostream& os, const std::vector<ReplicateRow>& rows);

enum class SweepAxis { Alpha, T, H, V };
std::string axis_name(SweepAxis a);
SweepAxis parse_axis(const std::string& s);

struct SweepSpec {
    SweepAxis axis = SweepAxis::Alpha;
    std::vector<double> values;
    double alpha = 1.0;          // fixed when the axis is not alpha
    SchemeSpec scheme = SchemeSpec::hvblock(3, 3, Mode::Joint);  // h or v replaced along those axes
    Objective objective = Objective::CV;
};

std::vector<SweepRow> sweep(const ExperimentSpec& spec, const SweepSpec& sw, int threads = 1);

struct MinSampleRow {
    double alpha = 0.0;
    std::string scheme;
    std::string mode;
    MinSampleResult result;
};

MinSampleResult experiment_min_sample_size(const ExperimentSpec& spec, double alpha, const SchemeSpec& scheme,
                                           int lo = 10, int hi = 2500);
MinSampleResult experiment_min_sample_scan(const ExperimentSpec& spec, double alpha, const SchemeSpec& scheme,
                                           int lo, int hi, int step);

void write_min_sample_csv(std::ostream& os, const std::vector<MinSampleRow>& rows);

// indices 0..n-1 on a small pool; fn must only touch its own slot
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// sample statistics of a set of omega draws: adverse rate, mean, sd, 1% and 99% quantiles
StatSummary empirical_summary(std::vector<double> omega);

} // namespace arxcv
