// arxcv: run the selection experiments from the command line.
#include "arxcv/config.hpp"
#include "arxcv/errors.hpp"
#include "arxcv/harness.hpp"
#include "arxcv/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace arxcv;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::string config;
    int experiment = 1;
    std::string variant = "hard";
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int threads = 1;
    std::string engine;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "TOML run description");
    app->add_option("--experiment", c.experiment, "table experiment id when no config is given");
    app->add_option("--variant", c.variant, "easy or hard, when no config is given");
    app->add_option("--seed", c.seed, "override the base seed");
    app->add_option("--out-dir", c.out_dir, "directory for CSV and SVG output");
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--engine", c.engine, "analytic or full-bayes");
}

RunConfig resolve(const Common& c) {
    RunConfig cfg;
    if (!c.config.empty()) {
        cfg = load_config(c.config);
    } else {
        cfg.experiment = table1_experiment(c.experiment, parse_variant(c.variant));
    }
    if (c.seed) cfg.experiment.seed = *c.seed;
    if (!c.engine.empty()) cfg.engine = parse_engine(c.engine);
    cfg.experiment.validate();
    return cfg;
}

std::ofstream open_out(const Common& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    const fs::path p = fs::path(c.out_dir) / name;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    std::cerr << "wrote " << p.string() << '\n';
    return os;
}

// Z is fixed per (experiment, T); it goes next to every result set
void write_covariates(const Common& c, const ExperimentSpec& s, int T) {
    auto os = open_out(c, "covariates.csv");
    write_matrix_csv(os, experiment_covariates(s, T), {"z1", "z2", "z3"});
}

void write_oracle(const Common& c, const ExperimentSpec& s) {
    auto os = open_out(c, "oracle.csv");
    os << "alpha,model,p,q,phi_hat,sigma2_hat,objective,converged\n";
    for (double a : s.alpha_grid) {
        const CandidatePair cp = fit_candidates(s, a, s.T);
        for (int m = 0; m < 2; ++m) {
            const OracleResult& r = m == 0 ? cp.fit_a : cp.fit_b;
            os << format_double(a) << ',' << (m == 0 ? "A" : "B") << ',' << (m == 0 ? s.p_a : s.p_b) << ','
               << (m == 0 ? s.q_a : s.q_b) << ',';
            for (Index i = 0; i < r.phi_hat.size(); ++i) os << (i ? ";" : "") << format_double(r.phi_hat(i));
            os << ',' << format_double(r.sigma2_hat) << ',' << format_double(r.objective) << ','
               << (r.converged ? "true" : "false") << '\n';
        }
    }
}

int cmd_simulate(const Common& c, double alpha, int paths) {
    const RunConfig cfg = resolve(c);
    const ExperimentSpec& s = cfg.experiment;
    const ArxSpec dgp = experiment_dgp(s, alpha, s.T);
    write_covariates(c, s, s.T);
    auto os = open_out(c, "paths.csv");
    os << "path,t,y\n";
    for (int r = 0; r < paths; ++r) {
        const VectorXd y = simulate(dgp, derive_seed(s.seed, 2, r), 1).row(0).transpose();
        for (Index t = 0; t < y.size(); ++t) os << r << ',' << t + 1 << ',' << format_double(y(t)) << '\n';
    }
    return 0;
}

// one row per (alpha, replicate), one omega column per scheme
int cmd_elpd_dist(const Common& c) {
    const RunConfig cfg = resolve(c);
    const ExperimentSpec& s = cfg.experiment;
    const int ns = static_cast<int>(s.schemes.size());
    const int R = s.replicates;
    std::vector<std::string> cols;
    for (const SchemeSpec& sc : s.schemes) cols.push_back(sc.name() + ":" + mode_name(sc.mode));

    std::vector<std::vector<double>> table(s.alpha_grid.size() * R, std::vector<double>(ns, NAN));
    if (cfg.engine == Engine::FullBayes) {
        const ExperimentResult res = run_experiment(s, Engine::FullBayes, c.threads);
        for (const ResultRow& r : res.rows)
            if (!r.error.empty()) std::cerr << "warning: " << r.scheme << ' ' << r.mode << ": " << r.error << '\n';
        for (const ReplicateRow& r : res.replicates) {
            const auto ai = std::find(s.alpha_grid.begin(), s.alpha_grid.end(), r.alpha) - s.alpha_grid.begin();
            const auto ci = std::find(cols.begin(), cols.end(), r.scheme + ":" + r.mode) - cols.begin();
            table[ai * R + r.replicate][ci] = r.omega;
        }
    } else {
        for (std::size_t i = 0; i < s.alpha_grid.size(); ++i) {
            const CandidatePair cp = fit_candidates(s, s.alpha_grid[i], s.T);
            std::vector<std::optional<QuadForm>> forms(ns);
            for (int j = 0; j < ns; ++j) {
                try {
                    forms[j] = statistic_form(make_setup(cp, s.schemes[j], Objective::CV, s.gamma));
                } catch (const InfeasibleScheme& e) {
                    std::cerr << "warning: " << cols[j] << ": " << e.what() << '\n';
                }
            }
            parallel_for(R, c.threads, [&](int r) {
                const VectorXd y = simulate(cp.dgp, derive_seed(s.seed, 2, r), 1).row(0).transpose();
                for (int j = 0; j < ns; ++j)
                    if (forms[j]) table[i * R + r][j] = forms[j]->eval(y);
            });
        }
    }
    write_covariates(c, s, s.T);
    auto os = open_out(c, "elpd_dist.csv");
    os << "alpha,replicate";
    for (const auto& n : cols) os << ',' << n;
    os << '\n';
    for (std::size_t i = 0; i < s.alpha_grid.size(); ++i)
        for (int r = 0; r < R; ++r) {
            os << format_double(s.alpha_grid[i]) << ',' << r;
            for (double w : table[i * R + r]) os << ',' << (std::isnan(w) ? std::string() : format_double(w));
            os << '\n';
        }
    return 0;
}

int cmd_adverse_rate(const Common& c) {
    RunConfig cfg = resolve(c);
    const ExperimentSpec& s = cfg.experiment;
    if (cfg.sweep) {
        const auto rows = sweep(s, *cfg.sweep, c.threads);
        auto os = open_out(c, "sweep_" + axis_name(cfg.sweep->axis) + ".csv");
        write_sweep_csv(os, rows);
    } else {
        const ExperimentResult res = run_experiment(s, Engine::Analytic, c.threads);
        auto os = open_out(c, "adverse_rate.csv");
        write_results_csv(os, res.rows);
    }
    write_covariates(c, s, s.T);
    return 0;
}

int cmd_min_sample(const Common& c, std::vector<double> alphas, int lo, int hi, int scan_step) {
    const RunConfig cfg = resolve(c);
    const ExperimentSpec& s = cfg.experiment;
    if (alphas.empty()) alphas = {1.0};
    std::vector<MinSampleRow> rows;
    for (double a : alphas)
        for (const SchemeSpec& sc : s.schemes)
            rows.push_back({a, sc.name(), mode_name(sc.mode), {}});
    parallel_for(static_cast<int>(rows.size()), c.threads, [&](int k) {
        const SchemeSpec& sc = s.schemes[k % s.schemes.size()];
        rows[k].result = scan_step > 0 ? experiment_min_sample_scan(s, rows[k].alpha, sc, lo, hi, scan_step)
                                       : experiment_min_sample_size(s, rows[k].alpha, sc, lo, hi);
    });
    auto os = open_out(c, "min_sample_size.csv");
    write_min_sample_csv(os, rows);
    return 0;
}

int cmd_experiment_run(const Common& c) {
    const RunConfig cfg = resolve(c);
    const ExperimentSpec& s = cfg.experiment;
    const ExperimentResult res = run_experiment(s, cfg.engine, c.threads);
    {
        auto os = open_out(c, "results.csv");
        write_results_csv(os, res.rows);
    }
    if (cfg.engine == Engine::FullBayes) {
        auto os = open_out(c, "replicates.csv");
        write_replicates_csv(os, res.replicates);
    } else {
        write_oracle(c, s);
    }
    if (cfg.sweep) {
        auto os = open_out(c, "sweep_" + axis_name(cfg.sweep->axis) + ".csv");
        write_sweep_csv(os, sweep(s, *cfg.sweep, c.threads));
    }
    write_covariates(c, s, s.T);
    {
        auto os = open_out(c, "run.toml");
        os << to_toml(cfg);
    }
    // row errors are data, not a failed run
    for (const ResultRow& r : res.rows)
        if (!r.error.empty())
            std::cerr << "row error: alpha " << r.alpha << ' ' << r.scheme << ' ' << r.mode << ": " << r.error << '\n';
    return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& out, PlotSpec spec) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot read " + csv_path);
    const CsvTable t = read_csv(in);
    const std::string svg = render_svg(t, spec);
    if (out.empty() || out == "-") {
        std::cout << svg;
    } else {
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot write " + out);
        os << svg;
        std::cerr << "wrote " << out << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-validation model selection for ARX time series"};
    app.require_subcommand(1);

    Common sim_c, dist_c, rate_c, min_c, run_c;

    double sim_alpha = 1.0;
    int sim_paths = 1;
    auto* sim = app.add_subcommand("simulate", "simulate DGP paths for one alpha");
    add_common(sim, sim_c);
    sim->add_option("--alpha", sim_alpha, "dependence level");
    sim->add_option("--paths", sim_paths, "number of paths")->check(CLI::PositiveNumber);

    auto* dist = app.add_subcommand("elpd-dist", "per-replicate selection statistics");
    add_common(dist, dist_c);

    auto* rate = app.add_subcommand("adverse-rate", "exact adverse selection rates (or a sweep)");
    add_common(rate, rate_c);

    std::vector<double> ms_alpha;
    int ms_lo = 10, ms_hi = 2500, ms_step = 0;
    auto* ms = app.add_subcommand("min-sample-size", "smallest well-separated T per scheme");
    add_common(ms, min_c);
    ms->add_option("--alpha", ms_alpha, "dependence levels (default 1)");
    ms->add_option("--lo", ms_lo, "lower end of the T range");
    ms->add_option("--hi", ms_hi, "upper end of the T range");
    ms->add_option("--scan-step", ms_step, "scan with this step instead of bisecting");

    auto* exp = app.add_subcommand("experiment", "experiment runs");
    exp->require_subcommand(1);
    auto* run = exp->add_subcommand("run", "full experiment run to CSV");
    add_common(run, run_c);

    std::string plot_csv, plot_out, plot_kind = "line";
    PlotSpec plot_spec;
    auto* plot = app.add_subcommand("plot", "render a CSV as SVG");
    plot->add_option("csv", plot_csv, "input CSV")->required();
    plot->add_option("-o,--out", plot_out, "output SVG (stdout when omitted)");
    plot->add_option("--kind", plot_kind, "line or scatter");
    plot->add_option("--x", plot_spec.x, "x column");
    plot->add_option("--y", plot_spec.y, "y column");
    plot->add_option("--series", plot_spec.series, "column splitting lines");
    plot->add_option("--title", plot_spec.title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(sim_c, sim_alpha, sim_paths);
        if (*dist) return cmd_elpd_dist(dist_c);
        if (*rate) return cmd_adverse_rate(rate_c);
        if (*ms) return cmd_min_sample(min_c, ms_alpha, ms_lo, ms_hi, ms_step);
        if (*run) return cmd_experiment_run(run_c);
        if (*plot) {
            plot_spec.kind = parse_plot_kind(plot_kind);
            return cmd_plot(plot_csv, plot_out, plot_spec);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const InfeasibleScheme& e) {
        std::cerr << "infeasible scheme: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
