#include "arxcv/config.hpp"
#include "arxcv/errors.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace arxcv {

namespace {

// unknown keys are almost always typos, so they are errors
void check_keys(const toml::table& t, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : t) {
        (void)v;
        if (!allowed.count(std::string(k.str())))
            throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where);
    }
}

std::optional<std::int64_t> get_int(const toml::table& t, const char* key) {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
    return n->value<std::int64_t>();
}

std::optional<double> get_num(const toml::table& t, const char* key) {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (n->is_integer()) return static_cast<double>(*n->value<std::int64_t>());
    if (!n->is_floating_point()) throw ConfigError(std::string("'") + key + "' must be a number");
    return n->value<double>();
}

std::optional<std::string> get_str(const toml::table& t, const char* key) {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
    return n->value<std::string>();
}

std::optional<std::vector<double>> get_nums(const toml::table& t, const char* key) {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    const toml::array* a = n->as_array();
    if (!a) throw ConfigError(std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const toml::node& e : *a) {
        if (e.is_integer()) out.push_back(static_cast<double>(*e.value<std::int64_t>()));
        else if (e.is_floating_point()) out.push_back(*e.value<double>());
        else throw ConfigError(std::string("'") + key + "' must be an array of numbers");
    }
    return out;
}

const toml::table* get_table(const toml::table& t, const char* key) {
    const toml::node* n = t.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) throw ConfigError(std::string("'") + key + "' must be a table");
    return n->as_table();
}

int narrow(std::int64_t x, const char* key) {
    if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(std::string("'") + key + "' is out of range");
    return static_cast<int>(x);
}

SchemeSpec read_scheme(const toml::table& t) {
    check_keys(t, {"kind", "K", "h", "v", "w", "mode"}, "scheme");
    const auto kind = get_str(t, "kind");
    if (!kind) throw ConfigError("scheme needs a kind");
    const std::string mode = get_str(t, "mode").value_or(
        *kind == "loo" || *kind == "hblock" || *kind == "h-block" ? "pointwise" : "");
    if (mode.empty()) throw ConfigError("scheme '" + *kind + "' needs a mode (joint or pointwise)");
    try {
        return parse_scheme(*kind, narrow(get_int(t, "K").value_or(0), "K"), narrow(get_int(t, "h").value_or(0), "h"),
                            narrow(get_int(t, "v").value_or(0), "v"), narrow(get_int(t, "w").value_or(1), "w"), mode);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scheme: ") + e.what());
    }
}

toml::table write_scheme(const SchemeSpec& s) {
    toml::table t;
    switch (s.kind) {
    case SchemeSpec::Kind::LOO: t.insert("kind", "loo"); break;
    case SchemeSpec::Kind::KFold: t.insert("kind", "kfold"); t.insert("K", s.K); break;
    case SchemeSpec::Kind::HBlock: t.insert("kind", "hblock"); t.insert("h", s.h); break;
    case SchemeSpec::Kind::HVBlock: t.insert("kind", "hvblock"); t.insert("h", s.h); t.insert("v", s.v); break;
    case SchemeSpec::Kind::LFO:
        t.insert("kind", "lfo");
        t.insert("h", s.h);
        t.insert("v", s.v);
        t.insert("w", s.w);
        break;
    }
    t.insert("mode", mode_name(s.mode));
    return t;
}

void read_candidate(const toml::table* t, const char* name, int& p, int& q) {
    if (!t) return;
    check_keys(*t, {"p", "q"}, name);
    if (auto v = get_int(*t, "p")) p = narrow(*v, "p");
    if (auto v = get_int(*t, "q")) q = narrow(*v, "q");
}

ExperimentSpec read_experiment(const toml::table& t) {
    check_keys(t, {"id", "variant", "base_phi", "candidate_a", "candidate_b", "alpha", "T", "replicates", "seed",
                   "sigma2", "gamma", "scheme"},
               "[experiment]");
    const int id = narrow(get_int(t, "id").value_or(1), "id");
    const Variant variant = parse_variant(get_str(t, "variant").value_or("hard"));

    ExperimentSpec s;
    if (id >= 1 && id <= 5) {
        s = table1_experiment(id, variant);
    } else {
        s.id = id;
        s.variant = variant;
        if (!t.get("base_phi")) throw ConfigError("experiments outside the table need base_phi");
        if (!t.get("scheme")) throw ConfigError("experiments outside the table need at least one scheme");
    }
    if (auto v = get_nums(t, "base_phi")) s.base_phi = Eigen::Map<const VectorXd>(v->data(), static_cast<Index>(v->size()));
    read_candidate(get_table(t, "candidate_a"), "candidate_a", s.p_a, s.q_a);
    read_candidate(get_table(t, "candidate_b"), "candidate_b", s.p_b, s.q_b);
    if (auto v = get_nums(t, "alpha")) s.alpha_grid = *v;
    if (auto v = get_int(t, "T")) s.T = narrow(*v, "T");
    if (auto v = get_int(t, "replicates")) s.replicates = narrow(*v, "replicates");
    if (auto v = get_int(t, "seed")) {
        if (*v < 0) throw ConfigError("seed must be nonnegative");
        s.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = get_num(t, "sigma2")) s.sigma2 = *v;
    if (auto v = get_num(t, "gamma")) s.gamma = *v;
    if (const toml::node* n = t.get("scheme")) {
        const toml::array* a = n->as_array();
        if (!a || a->empty()) throw ConfigError("'scheme' must be a non-empty array of tables");
        s.schemes.clear();
        for (const toml::node& e : *a) {
            if (!e.is_table()) throw ConfigError("'scheme' entries must be tables");
            s.schemes.push_back(read_scheme(*e.as_table()));
        }
    }
    s.validate();
    return s;
}

SweepSpec read_sweep(const toml::table& t) {
    check_keys(t, {"axis", "values", "alpha", "objective", "scheme"}, "[sweep]");
    SweepSpec sw;
    const auto axis = get_str(t, "axis");
    if (!axis) throw ConfigError("sweep needs an axis");
    sw.axis = parse_axis(*axis);
    const auto vals = get_nums(t, "values");
    if (!vals || vals->empty()) throw ConfigError("sweep needs values");
    sw.values = *vals;
    if (auto v = get_num(t, "alpha")) sw.alpha = *v;
    if (auto v = get_str(t, "objective")) {
        if (*v == "cv") sw.objective = Objective::CV;
        else if (*v == "theoretical") sw.objective = Objective::Theoretical;
        else throw ConfigError("unknown objective: " + *v);
    }
    if (const toml::table* sc = get_table(t, "scheme")) sw.scheme = read_scheme(*sc);
    return sw;
}

toml::array num_array(const std::vector<double>& v) {
    toml::array a;
    for (double x : v) a.push_back(x);
    return a;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
    check_keys(root, {"engine", "experiment", "sweep"}, "top level");
    RunConfig cfg;
    if (auto e = get_str(root, "engine")) cfg.engine = parse_engine(*e);
    const toml::table* ex = get_table(root, "experiment");
    if (!ex) throw ConfigError("missing [experiment] table");
    cfg.experiment = read_experiment(*ex);
    if (const toml::table* sw = get_table(root, "sweep")) cfg.sweep = read_sweep(*sw);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_toml(const RunConfig& cfg) {
    const ExperimentSpec& s = cfg.experiment;
    toml::table ex;
    ex.insert("id", s.id);
    ex.insert("variant", variant_name(s.variant));
    ex.insert("base_phi", num_array(std::vector<double>(s.base_phi.data(), s.base_phi.data() + s.base_phi.size())));
    ex.insert("candidate_a", toml::table{{"p", s.p_a}, {"q", s.q_a}});
    ex.insert("candidate_b", toml::table{{"p", s.p_b}, {"q", s.q_b}});
    ex.insert("alpha", num_array(s.alpha_grid));
    ex.insert("T", s.T);
    ex.insert("replicates", s.replicates);
    ex.insert("seed", static_cast<std::int64_t>(s.seed));
    ex.insert("sigma2", s.sigma2);
    ex.insert("gamma", s.gamma);
    toml::array schemes;
    for (const SchemeSpec& sc : s.schemes) schemes.push_back(write_scheme(sc));
    ex.insert("scheme", std::move(schemes));

    toml::table root;
    root.insert("engine", engine_name(cfg.engine));
    root.insert("experiment", std::move(ex));
    if (cfg.sweep) {
        const SweepSpec& sw = *cfg.sweep;
        toml::table t;
        t.insert("axis", axis_name(sw.axis));
        t.insert("values", num_array(sw.values));
        t.insert("alpha", sw.alpha);
        t.insert("objective", sw.objective == Objective::CV ? "cv" : "theoretical");
        t.insert("scheme", write_scheme(sw.scheme));
        root.insert("sweep", std::move(t));
    }
    std::ostringstream os;
    os << root << '\n';
    return os.str();
}

} // namespace arxcv
