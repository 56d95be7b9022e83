#include "doctest.h"

#include "arxcv/cv_schemes.hpp"
#include "arxcv/errors.hpp"

#include <set>
#include <sstream>

using namespace arxcv;
using V = std::vector<int>;

TEST_CASE("LOO on three points") {
    const FoldPlan p = make_plan(SchemeSpec::loo(), 3);
    REQUIRE(p.K() == 3);
    CHECK(p.folds[0].test == V{1});
    CHECK(p.folds[0].train == V{2, 3});
    CHECK(p.folds[1].train == V{1, 3});
    CHECK(p.folds[2].train == V{1, 2});
    CHECK(p.mode == Mode::Pointwise);
    CHECK(validate_plan(p).empty());
}

TEST_CASE("h-block halo") {
    const FoldPlan p = make_plan(SchemeSpec::hblock(2), 10);
    CHECK(p.folds[4].test == V{5});
    CHECK(p.folds[4].train == V{1, 2, 8, 9, 10});
    const FoldPlan h0 = make_plan(SchemeSpec::hblock(0), 7);
    const FoldPlan loo = make_plan(SchemeSpec::loo(), 7);
    for (int k = 0; k < 7; ++k) CHECK(h0.folds[k].train == loo.folds[k].train);
}

TEST_CASE("LFO expanding window") {
    const FoldPlan p = make_plan(SchemeSpec::lfo(0, 0, 3, Mode::Joint), 6);
    REQUIRE(p.K() == 3);
    CHECK(p.folds[0].test == V{4});
    CHECK(p.folds[0].train == V{1, 2, 3});
    CHECK(p.folds[1].train == V{1, 2, 3, 4});
    CHECK(p.folds[2].test == V{6});
    CHECK(p.folds[2].train == V{1, 2, 3, 4, 5});
}

TEST_CASE("selection indices") {
    const FoldPlan loo = make_plan(SchemeSpec::loo(), 3);
    auto [tr, te] = selection_indices(loo.folds[1]);
    CHECK(tr == V{1, 3});
    CHECK(te == V{2});

    const FoldPlan hv = make_plan(SchemeSpec::hvblock(3, 2, Mode::Joint), 20);
    CHECK(hv.folds[0].test == V{1, 2, 3, 4, 5});
    V want;
    for (int t = 9; t <= 20; ++t) want.push_back(t);
    CHECK(hv.folds[0].train == want);

    const FoldPlan kf = make_plan(SchemeSpec::kfold(5, Mode::Joint), 20);
    CHECK(kf.folds[1].test == V{5, 6, 7, 8});
    CHECK(kf.folds[1].train.size() == 16u);
}

TEST_CASE("K-fold sizes put the remainder first") {
    const FoldPlan p = make_plan(SchemeSpec::kfold(3, Mode::Pointwise), 11);
    CHECK(p.folds[0].test.size() == 4u);
    CHECK(p.folds[1].test.size() == 4u);
    CHECK(p.folds[2].test.size() == 3u);
}

TEST_CASE("halo and coverage invariants") {
    const int T = 37;
    const std::vector<SchemeSpec> specs{SchemeSpec::loo(), SchemeSpec::kfold(5, Mode::Joint),
                                        SchemeSpec::hblock(3), SchemeSpec::hvblock(3, 3, Mode::Joint),
                                        SchemeSpec::hvblock(2, 0, Mode::Pointwise),
                                        SchemeSpec::lfo(3, 3, 10, Mode::Joint)};
    for (const auto& s : specs) {
        CAPTURE(s.name());
        const FoldPlan p = make_plan(s, T);
        CHECK(validate_plan(p).empty());
        std::set<int> covered;
        for (const auto& f : p.folds) {
            covered.insert(f.test.begin(), f.test.end());
            for (int tr : f.train)
                for (int te : f.test) CHECK(std::abs(tr - te) > s.h);
            if (s.kind == SchemeSpec::Kind::LFO) CHECK(f.train.back() < f.test.front() - s.h);
        }
        const int first = s.kind == SchemeSpec::Kind::LFO ? s.w + 1 : 1;
        CHECK(covered.size() == static_cast<std::size_t>(T - first + 1));
        CHECK(*covered.begin() == first);
        CHECK(*covered.rbegin() == T);
    }
}

TEST_CASE("truncated last hv block") {
    const FoldPlan p = make_plan(SchemeSpec::hvblock(1, 1, Mode::Joint), 7);
    REQUIRE(p.K() == 3);
    CHECK(p.folds[2].test == V{7});
    CHECK(p.folds[2].train == V{1, 2, 3, 4, 5});
}

TEST_CASE("infeasible schemes name the fold") {
    try {
        make_plan(SchemeSpec::hblock(5), 4);
        FAIL("expected InfeasibleScheme");
    } catch (const InfeasibleScheme& e) {
        CHECK(e.fold() == 1);
    }
    CHECK_THROWS_AS(make_plan(SchemeSpec::lfo(0, 0, 10, Mode::Joint), 8), InfeasibleScheme);
    CHECK_THROWS_AS(make_plan(SchemeSpec::kfold(9, Mode::Joint), 8), InfeasibleScheme);
    CHECK_THROWS(SchemeSpec::kfold(1, Mode::Joint).validate());
    CHECK_THROWS(SchemeSpec::hvblock(-1, 0, Mode::Joint).validate());
    CHECK_THROWS(SchemeSpec::lfo(0, 0, 0, Mode::Joint).validate());
}

TEST_CASE("validate_plan reports violations") {
    FoldPlan p;
    p.T = 4;
    p.folds.push_back({V{3}, V{1, 3}});
    p.folds.push_back({V{2}, V{}});
    const auto bad = validate_plan(p);
    bool overlap = false, empty = false;
    for (const auto& s : bad) {
        if (s == "overlap in fold 1") overlap = true;
        if (s.find("empty train") != std::string::npos) empty = true;
    }
    CHECK(overlap);
    CHECK(empty);
}

TEST_CASE("names, parsing and CSV export") {
    CHECK(SchemeSpec::hvblock(3, 3, Mode::Joint).name() == "hv(3,3)");
    CHECK(SchemeSpec::loo().name() == "loo");
    const SchemeSpec s = parse_scheme("hv-block", 0, 3, 2, 1, "joint");
    CHECK(s.kind == SchemeSpec::Kind::HVBlock);
    CHECK(s.v == 2);
    CHECK(parse_mode("pointwise") == Mode::Pointwise);
    CHECK_THROWS(parse_mode("sideways"));
    std::ostringstream os;
    write_plan_csv(os, make_plan(SchemeSpec::loo(), 2));
    CHECK(os.str() == "fold,role,index\n1,test,1\n1,train,2\n2,test,2\n2,train,1\n");
}
