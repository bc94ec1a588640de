// Acceptance suite: one self-contained check per shipped guarantee, one
// PASS/FAIL line each. Exits non-zero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "stpaplus/episode.hpp"

using namespace stpaplus;

namespace {

const char* kConfigDir = STPAPLUS_SOURCE_DIR "/configs/";

int g_failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail = "") {
    std::printf("%s criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", number, name,
                detail.empty() ? "" : " — ", detail.c_str());
    if (!pass) ++g_failures;
}

ScenarioConfig load(const std::string& name) {
    auto result = parse_config_file(std::string(kConfigDir) + name);
    if (!result.ok()) {
        std::fprintf(stderr, "cannot load %s:\n%s", name.c_str(),
                     result.errors.to_text().c_str());
        std::exit(1);
    }
    return *result.config;
}

// ---------------------------------------------------------------------------
// 1. window-calculus algebra against the per-tick boolean-array oracle
// ---------------------------------------------------------------------------
void criterion_1() {
    constexpr Tick kH = 200;
    std::mt19937_64 rng(20260808);
    auto random_set = [&]() {
        std::vector<std::pair<Tick, Tick>> raw;
        int n = static_cast<int>(rng() % 7);
        for (int i = 0; i < n; ++i) {
            Tick a = static_cast<Tick>(rng() % (kH + 1));
            Tick b = static_cast<Tick>(rng() % (kH + 1));
            raw.emplace_back(std::min(a, b), std::max(a, b));
        }
        return WindowSet::from_pieces(std::move(raw));
    };
    auto grid = [&](const WindowSet& s) {
        std::vector<bool> g(kH);
        for (Tick t = 0; t < kH; ++t) g[static_cast<std::size_t>(t)] = s.contains(t);
        return g;
    };
    auto from_grid = [&](const std::vector<bool>& g) {
        std::vector<std::pair<Tick, Tick>> raw;
        for (Tick t = 0; t < kH; ++t) {
            if (g[static_cast<std::size_t>(t)]) raw.emplace_back(t, t + 1);
        }
        return WindowSet::from_pieces(std::move(raw));
    };

    long mismatches = 0;
    const Interval domain(0, kH);
    for (int i = 0; i < 1000; ++i) {
        WindowSet a = random_set(), b = random_set(), c = random_set();
        if (set_union(a, b) != set_union(b, a)) ++mismatches;
        if (set_intersect(a, b) != set_intersect(b, a)) ++mismatches;
        if (set_union(set_union(a, b), c) != set_union(a, set_union(b, c))) ++mismatches;
        if (set_intersect(set_intersect(a, b), c) != set_intersect(a, set_intersect(b, c))) {
            ++mismatches;
        }
        if (set_complement(set_union(a, b), domain) !=
            set_intersect(set_complement(a, domain), set_complement(b, domain))) {
            ++mismatches;
        }
        // canonical idempotence
        std::vector<std::pair<Tick, Tick>> raw;
        for (const auto& p : a.pieces()) raw.emplace_back(p.lo, p.hi);
        if (WindowSet::from_pieces(raw) != a) ++mismatches;

        // exact grid equivalence for every operation
        auto ga = grid(a), gb = grid(b);
        std::vector<bool> gu(kH), gi(kH), gc(kH);
        for (Tick t = 0; t < kH; ++t) {
            auto idx = static_cast<std::size_t>(t);
            gu[idx] = ga[idx] || gb[idx];
            gi[idx] = ga[idx] && gb[idx];
            gc[idx] = !ga[idx];
        }
        if (set_union(a, b) != from_grid(gu)) ++mismatches;
        if (set_intersect(a, b) != from_grid(gi)) ++mismatches;
        if (set_complement(a, domain) != from_grid(gc)) ++mismatches;

        // separation: the can window never meets must or must-not
        WindowSet horizon = random_set();
        WindowSet cw = can_window(a, b, horizon);
        if (!set_intersect(cw, set_union(a, b)).empty()) ++mismatches;
        std::vector<bool> gh = grid(horizon), gw(kH);
        for (Tick t = 0; t < kH; ++t) {
            auto idx = static_cast<std::size_t>(t);
            gw[idx] = gh[idx] && !(ga[idx] || gb[idx]);
        }
        if (cw != from_grid(gw)) ++mismatches;
    }
    report(1, "window algebra laws and grid-oracle equivalence (1000 cases)",
           mismatches == 0, mismatches ? std::to_string(mismatches) + " mismatches" : "");
}

// ---------------------------------------------------------------------------
// 2. execution validator vs an independent pointwise checker
// ---------------------------------------------------------------------------
void criterion_2() {
    std::mt19937_64 rng(424242);
    auto random_set = [&](Tick h) {
        std::vector<std::pair<Tick, Tick>> raw;
        int n = static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            Tick a = static_cast<Tick>(rng() % (h + 1));
            Tick b = static_cast<Tick>(rng() % (h + 1));
            raw.emplace_back(std::min(a, b), std::max(a, b));
        }
        return WindowSet::from_pieces(std::move(raw));
    };

    long mismatches = 0;
    for (int i = 0; i < 500; ++i) {
        PrescriptiveConstraints pcs;
        pcs.start_set = random_set(100);
        pcs.stop_set = random_set(100);
        pcs.performance = {"band", [](Tick t, std::span<const double> y) {
                               return y[0] >= 0.0 && y[0] <= 5.0 + static_cast<double>(t % 4);
                           }};
        BehaviorTrace tr;
        tr.start = static_cast<Tick>(rng() % 60);
        tr.stop = tr.start + 1 + static_cast<Tick>(rng() % 30);
        for (Tick t = tr.start; t <= tr.stop; ++t) {
            double v = static_cast<double>(rng() % 1000) / 100.0 - 2.0;
            tr.samples.push_back({v});
        }

        // independent pointwise verdict
        bool start_bad = !pcs.start_set.contains(tr.start);
        bool stop_bad = !pcs.stop_set.contains(tr.stop);
        Tick first_bad = -1;
        for (Tick t = tr.start; t <= tr.stop; ++t) {
            const auto& y = tr.samples[static_cast<std::size_t>(t - tr.start)];
            if (!(y[0] >= 0.0 && y[0] <= 5.0 + static_cast<double>(t % 4))) {
                first_bad = t;
                break;
            }
        }

        auto rep = validate_execution(tr, pcs);
        bool got_start = false, got_stop = false;
        Tick got_perf = -1;
        for (const auto& v : rep.violations) {
            if (v.clause == ValidationViolation::Clause::StartWindow) got_start = true;
            if (v.clause == ValidationViolation::Clause::StopWindow) got_stop = true;
            if (v.clause == ValidationViolation::Clause::Performance) got_perf = v.tick;
        }
        if (got_start != start_bad || got_stop != stop_bad || got_perf != first_bad) {
            ++mismatches;
        }
    }
    report(2, "execution validator agrees with the pointwise checker (500 cases)",
           mismatches == 0, mismatches ? std::to_string(mismatches) + " mismatches" : "");
}

// ---------------------------------------------------------------------------
// 3. descent-angle aggregation fixture, exact interval equality
// ---------------------------------------------------------------------------
void criterion_3() {
    ScenarioConfig cfg = load("evtol_nominal.json");
    ProcessModel model = make_process_model(cfg);
    ElementRef gamma{ElementKind::State, 0};

    auto all_true = model.aggregate(cfg.conditions).bounds(gamma);
    ConditionSnapshot backup = cfg.conditions;
    backup["nominal_vertiport"] = 0.0;
    auto dcs2 = model.aggregate(backup);
    auto dropped = dcs2.bounds(gamma);

    bool pass = all_true == ValueRange{5.0, 8.0} && dropped == ValueRange{3.0, 8.0};
    bool excluded_ok = dcs2.excluded.size() == 1 && dcs2.excluded[0].name == "gamma_vertiport";
    report(3, "descent-angle aggregation: [5,8] nominal, [3,8] with the requirement dropped",
           pass && excluded_ok);
}

// ---------------------------------------------------------------------------
// 4. full unsafe-scenario taxonomy, one config per (stage, kind) at a known tick
// ---------------------------------------------------------------------------
void criterion_4() {
    struct Expect {
        const char* config;
        Stage stage;
        ScenarioKind kind;
        Tick tick;
    };
    const Expect table[] = {
        {"taxonomy/tx_d1_no_decision.json", Stage::D1, ScenarioKind::NoDecision, 0},
        {"taxonomy/tx_d1_previously_safe.json", Stage::D1, ScenarioKind::PreviouslySafe, 20},
        {"taxonomy/tx_d1_unsafe_timing.json", Stage::D1, ScenarioKind::UnsafeTiming, 0},
        {"taxonomy/tx_d2_no_decision.json", Stage::D2, ScenarioKind::NoDecision, 0},
        {"taxonomy/tx_d2_previously_safe.json", Stage::D2, ScenarioKind::PreviouslySafe, 50},
        {"taxonomy/tx_d2_unsafe_timing.json", Stage::D2, ScenarioKind::UnsafeTiming, 21},
        {"taxonomy/tx_d2_time_coupling.json", Stage::D2, ScenarioKind::TimeCoupling, 0},
        {"taxonomy/tx_d3_no_decision.json", Stage::D3, ScenarioKind::NoDecision, 32},
        {"taxonomy/tx_d3_previously_safe.json", Stage::D3, ScenarioKind::PreviouslySafe, 10},
        {"taxonomy/tx_d3_unsafe_timing.json", Stage::D3, ScenarioKind::UnsafeTiming, 1},
        {"taxonomy/tx_d3_time_coupling.json", Stage::D3, ScenarioKind::TimeCoupling, 3},
    };

    int ok = 0;
    std::string detail;
    for (const auto& e : table) {
        ScenarioConfig cfg = load(e.config);
        auto result = run_episode(cfg, cfg.run.seed);

        bool provoked = false;
        bool clean_tick = true;
        for (const auto& ev : result.summary.events) {
            if (ev.tick == e.tick) {
                if (ev.stage == e.stage && ev.kind == e.kind) provoked = true;
                else clean_tick = false;
            }
        }
        // the standalone monitor finds the same event, tick-exact
        bool detected = false;
        MonitorVerdict verdict = classify(result.trace, cfg);
        for (const auto& ev : verdict.events) {
            if (ev.tick == e.tick && ev.stage == e.stage && ev.kind == e.kind) detected = true;
        }
        if (provoked && clean_tick && detected) {
            ++ok;
        } else {
            detail += std::string(e.config) + (provoked ? "" : " !provoked") +
                      (clean_tick ? "" : " !exclusive") + (detected ? "" : " !detected") + "; ";
        }
    }
    report(4, "unsafe-scenario taxonomy coverage 11/11, monitor-confirmed",
           ok == 11, ok == 11 ? "" : std::to_string(ok) + "/11 " + detail);
}

// ---------------------------------------------------------------------------
// 5 & 6. the 100-seed randomized merge corpus
// ---------------------------------------------------------------------------
using EventKey = std::tuple<Tick, Stage, ScenarioKind>;

std::set<EventKey> keys(const std::vector<ScenarioEvent>& events) {
    std::set<EventKey> out;
    for (const auto& e : events) out.insert({e.tick, e.stage, e.kind});
    return out;
}

void criteria_5_6() {
    ScenarioConfig cfg = load("merge_random.json");
    int agree = 0, safe = 0;
    std::string detail5, detail6;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto result = run_episode(cfg, seed);

        std::vector<ScenarioEvent> controller_events;
        bool d1_no_decision = false;
        for (const auto& r : result.trace.records) {
            for (const auto& e : r.events) {
                controller_events.push_back(e);
                if (e.stage == Stage::D1 && e.kind == ScenarioKind::NoDecision) {
                    d1_no_decision = true;
                }
            }
        }
        MonitorVerdict verdict = classify(result.trace, cfg);
        if (keys(verdict.events) == keys(controller_events)) {
            ++agree;
        } else if (detail5.size() < 120) {
            detail5 += "seed " + std::to_string(seed) + "; ";
        }

        bool episode_safe;
        if (!d1_no_decision) {
            episode_safe = result.verdict.behavior_violations.empty() &&
                           result.summary.terminal != TerminalKind::Hazard;
        } else {
            episode_safe = result.summary.terminal == TerminalKind::FallbackComplete &&
                           result.summary.final_state[0] < cfg.merge.lane_end_m;
            // when the braking distance at detection allowed it, the stop must
            // also keep the end clearance
            if (result.summary.fallback_margin_ok.value_or(false)) {
                episode_safe = episode_safe &&
                               result.summary.final_state[0] <=
                                   cfg.merge.lane_end_m - cfg.merge.d_end_min_m;
            }
        }
        if (episode_safe) {
            ++safe;
        } else if (detail6.size() < 120) {
            detail6 += "seed " + std::to_string(seed) + " terminal " +
                       terminal_name(result.summary.terminal) + "; ";
        }
    }
    report(5, "monitor/controller flag agreement across the 100-seed corpus", agree == 100,
           agree == 100 ? "" : std::to_string(agree) + "/100 " + detail5);
    report(6, "hazard-freedom and fallback safety across the 100-seed corpus", safe == 100,
           safe == 100 ? "" : std::to_string(safe) + "/100 " + detail6);
}

// ---------------------------------------------------------------------------
// 7. baseline contrast on the adversarial configs
// ---------------------------------------------------------------------------
void criterion_7() {
    int ok = 0;
    std::string detail;
    for (const char* name :
         {"adv_opening_late.json", "adv_tightening.json", "adv_time_coupling.json"}) {
        ScenarioConfig cfg = load(name);
        auto guarded = run_episode(cfg, cfg.run.seed);

        ScenarioConfig naive_cfg = cfg;
        naive_cfg.controller.kind = ControllerKind::Naive;
        auto naive = run_episode(naive_cfg, cfg.run.seed);

        bool contrast = guarded.verdict.behavior_violations.empty() &&
                        !naive.verdict.behavior_violations.empty();
        if (contrast) {
            ++ok;
        } else {
            detail += std::string(name) + " guarded=" +
                      std::to_string(guarded.verdict.behavior_violations.size()) + " naive=" +
                      std::to_string(naive.verdict.behavior_violations.size()) + "; ";
        }
    }
    report(7, "baseline contrast 3/3: naive violates, guarded stays clean", ok == 3, detail);
}

// ---------------------------------------------------------------------------
// 8. delay compensation exactness and the uncompensated penalty
// ---------------------------------------------------------------------------
void criterion_8() {
    ScenarioConfig cfg = load("adv_time_coupling.json");  // d13 = 10 ticks
    auto compensated = run_episode(cfg, cfg.run.seed);

    bool exact = !compensated.summary.prediction_gap.empty();
    for (double gap : compensated.summary.prediction_gap) {
        exact = exact && gap <= 1e-9;
    }
    double onset_comp = compensated.summary.onset_plan_error.value_or(1e9);

    ScenarioConfig off = cfg;
    off.controller.compensate_reference = false;
    off.controller.compensate_action = false;
    auto uncompensated = run_episode(off, cfg.run.seed);
    double onset_off = uncompensated.summary.onset_plan_error.value_or(0.0);

    bool pass = exact && onset_comp <= 1e-9 && onset_off > onset_comp;
    report(8, "start-state prediction exact at d13=10; uncompensated onset error larger",
           pass,
           "compensated onset " + std::to_string(onset_comp) + ", uncompensated " +
               std::to_string(onset_off));
}

// ---------------------------------------------------------------------------
// 9. byte-identical traces for identical (config, seed)
// ---------------------------------------------------------------------------
void criterion_9() {
    const char* names[] = {"merge_nominal.json", "merge_dense.json", "merge_random.json",
                           "evtol_nominal.json", "evtol_backup_pad.json",
                           "adv_opening_late.json", "adv_tightening.json",
                           "adv_time_coupling.json", "taxonomy/tx_d2_time_coupling.json",
                           "taxonomy/tx_d3_previously_safe.json"};
    int ok = 0;
    std::string detail;
    for (const char* name : names) {
        ScenarioConfig cfg = load(name);
        auto a = run_episode(cfg, cfg.run.seed);
        auto b = run_episode(cfg, cfg.run.seed);
        if (write_trace(a.trace) == write_trace(b.trace)) {
            ++ok;
        } else {
            detail += std::string(name) + "; ";
        }
    }
    report(9, "determinism: identical (config, seed) gives byte-identical traces (10 configs)",
           ok == 10, detail);
}

// ---------------------------------------------------------------------------
// 10. parser robustness under random byte mutations
// ---------------------------------------------------------------------------
void criterion_10() {
    std::vector<std::string> corpus;
    for (const char* name : {"merge_nominal.json", "evtol_backup_pad.json",
                             "taxonomy/tx_d2_previously_safe.json"}) {
        ScenarioConfig cfg = load(name);
        corpus.push_back(emit_config(cfg));
    }
    std::mt19937_64 rng(0xFADE);
    long bad_accepts = 0, crashes = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string text = corpus[rng() % corpus.size()];
        int edits = 1 + static_cast<int>(rng() % 8);
        for (int e = 0; e < edits; ++e) {
            std::size_t pos = rng() % text.size();
            switch (rng() % 3) {
                case 0: text[pos] = static_cast<char>(rng() % 256); break;
                case 1: text.insert(pos, 1, static_cast<char>(rng() % 256)); break;
                default: text.erase(pos, 1); break;
            }
        }
        try {
            auto result = parse_config_text(text);
            if (result.ok()) {
                // accepted: the tick lattice must genuinely hold
                const auto& cfg = *result.config;
                auto exact = [&](double seconds, Tick ticks) {
                    return std::fabs(seconds - static_cast<double>(ticks) * cfg.run.dt_s) <
                           1e-9;
                };
                if (!exact(cfg.run.horizon_s, cfg.run.horizon_ticks) ||
                    (cfg.plant_kind == PlantKind::Merge &&
                     !exact(cfg.merge.t_merge_s, cfg.merge.t_merge_ticks))) {
                    ++bad_accepts;
                }
            } else if (result.errors.items.empty()) {
                ++bad_accepts;  // failed without a structured error
            }
        } catch (...) {
            ++crashes;
        }
    }
    report(10, "config fuzzing: 10^4 byte mutations, structured errors only",
           bad_accepts == 0 && crashes == 0,
           crashes ? std::to_string(crashes) + " escapes" : "");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criteria_5_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
