#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stpaplus/behavior.hpp"

using namespace stpaplus;

namespace {

WindowSet ws(std::initializer_list<std::pair<Tick, Tick>> parts) {
    return WindowSet::from_pieces(std::vector<std::pair<Tick, Tick>>(parts));
}

std::function<bool(Tick)> member_of(const WindowSet& s) {
    return [s](Tick t) { return s.contains(t); };
}

PerformanceConstraint always_ok() {
    return {"always", [](Tick, std::span<const double>) { return true; }};
}

WindowSet random_set(std::mt19937_64& rng, Tick horizon) {
    std::uniform_int_distribution<int> n_pieces(0, 5);
    std::uniform_int_distribution<Tick> point(0, horizon);
    std::vector<std::pair<Tick, Tick>> raw;
    int n = n_pieces(rng);
    for (int i = 0; i < n; ++i) {
        Tick a = point(rng);
        Tick b = point(rng);
        raw.emplace_back(std::min(a, b), std::max(a, b));
    }
    return WindowSet::from_pieces(std::move(raw));
}

}  // namespace

TEST_CASE("must window ends at the expiry tick with configured width") {
    // safe through tick 79, margin 20 ticks
    auto kept_safe = [](Tick t) { return t < 80; };
    auto r = derive_must_window(kept_safe, Interval(0, 100), 20);
    CHECK(r.window == ws({{60, 80}}));
    CHECK_FALSE(r.doomed);
}

TEST_CASE("must window is empty when safety never lapses in the horizon") {
    auto r = derive_must_window([](Tick) { return true; }, Interval(0, 100), 20);
    CHECK(r.window.empty());
    CHECK_FALSE(r.doomed);
}

TEST_CASE("must window flags a lapsed deadline") {
    auto r = derive_must_window([](Tick) { return false; }, Interval(10, 100), 20);
    CHECK(r.window.empty());
    CHECK(r.doomed);
}

TEST_CASE("must window clips to the horizon start") {
    auto r = derive_must_window([](Tick t) { return t < 5; }, Interval(0, 100), 20);
    CHECK(r.window == ws({{0, 5}}));
}

TEST_CASE("must window rejects bad arguments") {
    CHECK_THROWS_AS(derive_must_window([](Tick) { return true; }, Interval(0, 10), 0),
                    std::invalid_argument);
}

TEST_CASE("must-not window is the exact infeasible image") {
    WindowSet bad = ws({{0, 20}, {50, 70}});
    auto feasible = [&](Tick t) { return !bad.contains(t); };
    CHECK(derive_must_not_window(feasible, Interval(0, 100)) == bad);
    CHECK(derive_must_not_window([](Tick) { return true; }, Interval(0, 100)).empty());
    CHECK(derive_must_not_window([](Tick) { return false; }, Interval(0, 30)) == ws({{0, 30}}));
}

TEST_CASE("merge-lane kinematics place the must-start expiry where clearance runs out") {
    // lane 300 m, ego at 20 m/s, end clearance 10 m, merge takes 3 s, dt 0.1 s:
    // a merge begun at tick k completes at 2k + 60 m; clearance fails once
    // 300 - (2k + 60) < 10.
    const double lane_end = 300.0, v = 20.0, d_end_min = 10.0, t_merge = 3.0, dt = 0.1;
    auto kept_safe = [&](Tick k) {
        double completion = v * dt * static_cast<double>(k) + v * t_merge;
        return lane_end - completion >= d_end_min;
    };
    auto r = derive_must_window(kept_safe, Interval(0, 400), 20);
    // closed form: first failing tick is the smallest k with 2k > 230 -> 116
    CHECK(r.window.sup() == Tick{116});
    CHECK(r.window == ws({{96, 116}}));
}

TEST_CASE("full derivation combines windows per the feasible-start rule") {
    WindowDerivationInputs in;
    in.start_kept_safe = [](Tick t) { return t < 80; };
    in.start_feasible = [](Tick t) { return t >= 20; };
    in.stop_kept_safe = [](Tick) { return true; };
    in.stop_feasible = [](Tick) { return true; };
    auto pcs = derive_prescriptive(in, always_ok(), 0, Interval(0, 100), 20);
    CHECK(pcs.must_start == ws({{60, 80}}));
    CHECK(pcs.must_not_start == ws({{0, 20}}));
    CHECK(pcs.can_start == ws({{20, 60}}));
    CHECK(pcs.start_set == ws({{20, 80}}));
    CHECK_FALSE(pcs.has_conflict());
    CHECK(pcs.stop_set == ws({{0, 100}}));
}

TEST_CASE("conflict flag when the must window sits inside the must-not window") {
    WindowDerivationInputs in;
    in.start_kept_safe = [](Tick t) { return t < 80; };
    in.start_feasible = [](Tick) { return false; };
    in.stop_kept_safe = [](Tick) { return true; };
    in.stop_feasible = [](Tick) { return true; };
    auto pcs = derive_prescriptive(in, always_ok(), 0, Interval(0, 100), 20);
    CHECK(pcs.start_conflict);
    CHECK(pcs.start_set.empty());
}

TEST_CASE("conflict soundness on random window constructions") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 500; ++i) {
        WindowSet safe_lapse = random_set(rng, 100);
        WindowSet infeasible = random_set(rng, 100);
        WindowDerivationInputs in;
        in.start_kept_safe = [&](Tick t) { return !safe_lapse.contains(t); };
        in.start_feasible = [&](Tick t) { return !infeasible.contains(t); };
        in.stop_kept_safe = [](Tick) { return true; };
        in.stop_feasible = [](Tick) { return true; };
        auto pcs = derive_prescriptive(in, always_ok(), 0, Interval(0, 100), 10);

        bool expect_conflict = !pcs.must_start.empty() &&
                               is_subset(pcs.must_start, pcs.must_not_start);
        CHECK(pcs.start_conflict == expect_conflict);
        // the can window never meets the prescriptive windows
        CHECK(set_intersect(pcs.can_start,
                            set_union(pcs.must_start, pcs.must_not_start)).empty());
        // ST stays clear of the must-not window
        CHECK(set_intersect(pcs.start_set, pcs.must_not_start).empty());
    }
}

TEST_CASE("enlarging the must-not window never enlarges the feasible start set") {
    std::mt19937_64 rng(555);
    for (int i = 0; i < 300; ++i) {
        WindowSet bad1 = random_set(rng, 100);
        WindowSet bad2 = set_union(bad1, random_set(rng, 100));
        WindowDerivationInputs in1, in2;
        auto kept = [](Tick t) { return t < 90; };
        in1.start_kept_safe = kept;
        in2.start_kept_safe = kept;
        in1.start_feasible = [&](Tick t) { return !bad1.contains(t); };
        in2.start_feasible = [&](Tick t) { return !bad2.contains(t); };
        in1.stop_kept_safe = in2.stop_kept_safe = [](Tick) { return true; };
        in1.stop_feasible = in2.stop_feasible = [](Tick) { return true; };
        auto a = derive_prescriptive(in1, always_ok(), 0, Interval(0, 100), 10);
        auto b = derive_prescriptive(in2, always_ok(), 0, Interval(0, 100), 10);
        CHECK(is_subset(b.start_set, a.start_set));
    }
}

TEST_CASE("re-derivation with identical inputs is identical") {
    WindowDerivationInputs in;
    in.start_kept_safe = [](Tick t) { return t < 42; };
    in.start_feasible = [](Tick t) { return t % 7 != 0; };
    in.stop_kept_safe = [](Tick t) { return t < 90; };
    in.stop_feasible = [](Tick t) { return t % 5 != 0; };
    auto a = derive_prescriptive(in, always_ok(), 3, Interval(0, 100), 10);
    auto b = derive_prescriptive(in, always_ok(), 3, Interval(0, 100), 10);
    CHECK(a.start_set == b.start_set);
    CHECK(a.stop_set == b.stop_set);
    CHECK(a.must_start == b.must_start);
    CHECK(a.can_stop == b.can_stop);
}

namespace {

// Independent pointwise checker for the execution rule, kept deliberately
// naive: scan everything, no window algebra.
struct NaiveVerdict {
    bool start_bad{false}, stop_bad{false};
    Tick first_bad_sample{-1};
};

NaiveVerdict naive_check(const BehaviorTrace& tr, const PrescriptiveConstraints& pcs) {
    NaiveVerdict v;
    v.start_bad = !pcs.start_set.contains(tr.start);
    v.stop_bad = !pcs.stop_set.contains(tr.stop);
    for (Tick t = tr.start; t <= tr.stop; ++t) {
        if (!pcs.performance.admissible(t, tr.samples[static_cast<std::size_t>(t - tr.start)])) {
            v.first_bad_sample = t;
            break;
        }
    }
    return v;
}

}  // namespace

TEST_CASE("validate_execution basics") {
    PrescriptiveConstraints pcs;
    pcs.performance = {"y0 in [0,5]", [](Tick, std::span<const double> y) {
                           return y[0] >= 0.0 && y[0] <= 5.0;
                       }};
    pcs.start_set = ws({{20, 80}});
    pcs.stop_set = ws({{30, 90}});
    pcs.must_not_start = ws({{0, 20}});

    BehaviorTrace good{40, 45, std::vector<OutputSample>(6, {1.0})};
    CHECK(validate_execution(good, pcs).ok());

    BehaviorTrace bad_start{10, 45, std::vector<OutputSample>(36, {1.0})};
    auto rep = validate_execution(bad_start, pcs);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].clause == ValidationViolation::Clause::StartWindow);
    CHECK(rep.violations[0].detail.find("must-not-start") != std::string::npos);

    BehaviorTrace degenerate{45, 45, {}};
    CHECK_THROWS_AS(validate_execution(degenerate, pcs), std::invalid_argument);
}

TEST_CASE("validate_execution agrees with the pointwise oracle on random traces") {
    std::mt19937_64 rng(90210);
    std::uniform_int_distribution<Tick> start_d(0, 60);
    std::uniform_int_distribution<Tick> len_d(1, 30);
    std::uniform_real_distribution<double> val_d(-2.0, 8.0);
    for (int i = 0; i < 500; ++i) {
        PrescriptiveConstraints pcs;
        pcs.start_set = random_set(rng, 100);
        pcs.stop_set = random_set(rng, 100);
        pcs.performance = {"band", [](Tick t, std::span<const double> y) {
                               // time-varying admissible band
                               return y[0] >= 0.0 && y[0] <= 5.0 + (t % 3);
                           }};
        BehaviorTrace tr;
        tr.start = start_d(rng);
        tr.stop = tr.start + len_d(rng);
        for (Tick t = tr.start; t <= tr.stop; ++t) {
            tr.samples.push_back({val_d(rng)});
        }

        auto rep = validate_execution(tr, pcs);
        auto naive = naive_check(tr, pcs);

        bool got_start = false, got_stop = false;
        Tick got_perf = -1;
        for (const auto& v : rep.violations) {
            if (v.clause == ValidationViolation::Clause::StartWindow) got_start = true;
            if (v.clause == ValidationViolation::Clause::StopWindow) got_stop = true;
            if (v.clause == ValidationViolation::Clause::Performance) got_perf = v.tick;
        }
        CHECK(got_start == naive.start_bad);
        CHECK(got_stop == naive.stop_bad);
        CHECK(got_perf == naive.first_bad_sample);
    }
}
