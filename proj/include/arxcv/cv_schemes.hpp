#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace arxcv {

enum class Mode { Joint, Pointwise };

// Indices are 1-based and sorted.
struct Fold {
    std::vector<int> test;
    std::vector<int> train;
};

struct FoldPlan {
    int T = 0;
    std::vector<Fold> folds;
    Mode mode = Mode::Joint;
    int K() const { return static_cast<int>(folds.size()); }
};

struct SchemeSpec {
    enum class Kind { LOO, KFold, HBlock, HVBlock, LFO };
    Kind kind = Kind::LOO;
    int K = 0, h = 0, v = 0, w = 1;
    Mode mode = Mode::Pointwise;

    static SchemeSpec loo();
    static SchemeSpec kfold(int K, Mode m);
    static SchemeSpec hblock(int h);
    static SchemeSpec hvblock(int h, int v, Mode m);
    static SchemeSpec lfo(int h, int v, int w, Mode m);

    void validate() const;
    std::string name() const;   // e.g. "hv(3,3)"
};

FoldPlan make_plan(const SchemeSpec& scheme, int T);

// (train, test), both 1-based
std::pair<std::vector<int>, std::vector<int>> selection_indices(const Fold& fold);

// empty when the plan is valid
std::vector<std::string> validate_plan(const FoldPlan& plan);

// columns: fold, role, index
void write_plan_csv(std::ostream& os, const FoldPlan& plan);

std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);
SchemeSpec parse_scheme(const std::string& kind, int K, int h, int v, int w, const std::string& mode);

} // namespace arxcv
