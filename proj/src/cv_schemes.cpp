#include "arxcv/cv_schemes.hpp"
#include "arxcv/errors.hpp"

#include <algorithm>
#include <iterator>
#include <ostream>
#include <stdexcept>

namespace arxcv {

SchemeSpec SchemeSpec::loo() { return SchemeSpec{Kind::LOO, 0, 0, 0, 1, Mode::Pointwise}; }

SchemeSpec SchemeSpec::kfold(int K, Mode m) { return SchemeSpec{Kind::KFold, K, 0, 0, 1, m}; }

SchemeSpec SchemeSpec::hblock(int h) { return SchemeSpec{Kind::HBlock, 0, h, 0, 1, Mode::Pointwise}; }

SchemeSpec SchemeSpec::hvblock(int h, int v, Mode m) { return SchemeSpec{Kind::HVBlock, 0, h, v, 1, m}; }

SchemeSpec SchemeSpec::lfo(int h, int v, int w, Mode m) { return SchemeSpec{Kind::LFO, 0, h, v, w, m}; }

void SchemeSpec::validate() const {
    if (kind == Kind::KFold && K < 2) throw std::invalid_argument("K-fold needs K >= 2");
    if (h < 0 || v < 0) throw std::invalid_argument("h and v must be non-negative");
    if (kind == Kind::LFO && w < 1) throw std::invalid_argument("LFO needs w >= 1");
    if ((kind == Kind::LOO || kind == Kind::HBlock) && mode != Mode::Pointwise)
        throw std::invalid_argument("LOO and h-block have singleton test sets; mode must be pointwise");
}

std::string SchemeSpec::name() const {
    switch (kind) {
    case Kind::LOO: return "loo";
    case Kind::KFold: return "kfold(" + std::to_string(K) + ")";
    case Kind::HBlock: return "h(" + std::to_string(h) + ")";
    case Kind::HVBlock: return "hv(" + std::to_string(h) + "," + std::to_string(v) + ")";
    case Kind::LFO:
        return "lfo(" + std::to_string(h) + "," + std::to_string(v) + "," + std::to_string(w) + ")";
    }
    return "?";
}

std::string mode_name(Mode m) { return m == Mode::Joint ? "joint" : "pointwise"; }

Mode parse_mode(const std::string& s) {
    if (s == "joint") return Mode::Joint;
    if (s == "pointwise") return Mode::Pointwise;
    throw std::invalid_argument("unknown mode: " + s);
}

SchemeSpec parse_scheme(const std::string& kind, int K, int h, int v, int w, const std::string& mode) {
    SchemeSpec s;
    if (kind == "loo") s = SchemeSpec::loo();
    else if (kind == "kfold" || kind == "k-fold") s = SchemeSpec::kfold(K, parse_mode(mode));
    else if (kind == "h-block" || kind == "hblock") s = SchemeSpec::hblock(h);
    else if (kind == "hv-block" || kind == "hvblock") s = SchemeSpec::hvblock(h, v, parse_mode(mode));
    else if (kind == "lfo") s = SchemeSpec::lfo(h, v, w, parse_mode(mode));
    else throw std::invalid_argument("unknown scheme kind: " + kind);
    s.validate();
    return s;
}

namespace {

std::vector<int> range(int a, int b) { // inclusive, empty if a > b
    std::vector<int> out;
    for (int t = a; t <= b; ++t) out.push_back(t);
    return out;
}

Fold block_fold(int T, int a, int b, int h) {
    Fold f;
    f.test = range(a, b);
    for (int t = 1; t <= T; ++t)
        if (t < a - h || t > b + h) f.train.push_back(t);
    return f;
}

} // namespace

FoldPlan make_plan(const SchemeSpec& scheme, int T) {
    scheme.validate();
    if (T < 1) throw std::invalid_argument("T must be positive");
    FoldPlan plan;
    plan.T = T;
    plan.mode = scheme.mode;
    using K = SchemeSpec::Kind;
    switch (scheme.kind) {
    case K::LOO:
        for (int k = 1; k <= T; ++k) plan.folds.push_back(block_fold(T, k, k, 0));
        break;
    case K::HBlock:
        for (int k = 1; k <= T; ++k) plan.folds.push_back(block_fold(T, k, k, scheme.h));
        break;
    case K::HVBlock: {
        const int width = 2 * scheme.v + 1;
        for (int a = 1; a <= T; a += width)
            plan.folds.push_back(block_fold(T, a, std::min(T, a + width - 1), scheme.h));
        break;
    }
    case K::KFold: {
        if (scheme.K > T) throw InfeasibleScheme("K-fold with K > T leaves empty test sets", scheme.K);
        const int base = T / scheme.K, extra = T % scheme.K;
        int a = 1;
        for (int k = 0; k < scheme.K; ++k) {
            const int n = base + (k < extra ? 1 : 0);
            plan.folds.push_back(block_fold(T, a, a + n - 1, 0));
            a += n;
        }
        break;
    }
    case K::LFO: {
        const int width = 2 * scheme.v + 1;
        for (int a = scheme.w + 1; a <= T; a += width) {
            Fold f;
            f.test = range(a, std::min(T, a + width - 1));
            f.train = range(1, a - scheme.h - 1);
            plan.folds.push_back(std::move(f));
        }
        if (plan.folds.empty()) throw InfeasibleScheme("LFO warm-up leaves no test block", 0);
        break;
    }
    }
    for (std::size_t k = 0; k < plan.folds.size(); ++k) {
        if (plan.folds[k].train.empty())
            throw InfeasibleScheme("empty train set in fold " + std::to_string(k + 1), static_cast<int>(k + 1));
        if (plan.folds[k].test.empty())
            throw InfeasibleScheme("empty test set in fold " + std::to_string(k + 1), static_cast<int>(k + 1));
    }
    return plan;
}

std::pair<std::vector<int>, std::vector<int>> selection_indices(const Fold& fold) {
    return {fold.train, fold.test};
}

std::vector<std::string> validate_plan(const FoldPlan& plan) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < plan.folds.size(); ++k) {
        const Fold& f = plan.folds[k];
        const std::string tag = std::to_string(k + 1);
        if (f.train.empty()) out.push_back("empty train in fold " + tag);
        if (f.test.empty()) out.push_back("empty test in fold " + tag);
        for (const auto* v : {&f.train, &f.test}) {
            if (!std::is_sorted(v->begin(), v->end()) || std::adjacent_find(v->begin(), v->end()) != v->end())
                out.push_back("unsorted or repeated index in fold " + tag);
            for (int t : *v)
                if (t < 1 || t > plan.T) {
                    out.push_back("index out of range in fold " + tag);
                    break;
                }
        }
        std::vector<int> both;
        std::set_intersection(f.train.begin(), f.train.end(), f.test.begin(), f.test.end(),
                              std::back_inserter(both));
        if (!both.empty()) out.push_back("overlap in fold " + tag);
    }
    return out;
}

void write_plan_csv(std::ostream& os, const FoldPlan& plan) {
    os << "fold,role,index\n";
    for (std::size_t k = 0; k < plan.folds.size(); ++k) {
        for (int t : plan.folds[k].test) os << (k + 1) << ",test," << t << '\n';
        for (int t : plan.folds[k].train) os << (k + 1) << ",train," << t << '\n';
    }
}

} // namespace arxcv
