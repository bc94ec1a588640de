#include "stpaplus/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stpaplus/sim.hpp"

namespace stpaplus {

std::string MonitorVerdict::to_text() const {
    std::ostringstream os;
    for (const auto& e : events) {
        os << "event tick=" << e.tick << ' ' << stage_name(e.stage) << ' '
           << scenario_kind_name(e.kind) << ' ' << e.cause << '\n';
    }
    for (const auto& v : behavior_violations) {
        os << "behavior " << v.clause << " tick=" << v.tick << ' ' << v.detail << '\n';
    }
    for (const auto& v : process_violations) {
        os << "process " << v.clause << " tick=" << v.tick << ' ' << v.detail << '\n';
    }
    for (const auto& [tick, name] : assumption_breaks) {
        os << "assumption_break tick=" << tick << ' ' << name << '\n';
    }
    return os.str();
}

namespace {

WorldSnapshot snapshot_from_record(const TraceRecord& r, PlantKind kind) {
    WorldSnapshot snap;
    snap.tick = r.tick;
    snap.plant_kind = kind;
    snap.state = r.state;
    snap.params = r.params;
    snap.traffic = r.traffic;
    snap.traffic_visible = r.traffic_visible;
    snap.traffic_speeds_visible = r.traffic_speeds_visible;
    snap.conditions = r.conditions;
    snap.conditions_visible = r.conditions_visible;
    return snap;
}

void validate_trace(const Trace& trace, const ScenarioConfig& cfg) {
    const std::size_t sdim = cfg.plant_kind == PlantKind::Merge ? 2 : 3;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& r = trace.records[i];
        if (r.state.size() != sdim) {
            throw std::invalid_argument("trace record " + std::to_string(i) +
                                        ": state vector has wrong dimension");
        }
        if (r.tick != static_cast<Tick>(i)) {
            throw std::invalid_argument("trace record " + std::to_string(i) +
                                        ": ticks are not contiguous");
        }
    }
    std::string plant = cfg.plant_kind == PlantKind::Merge ? "merge" : "descent";
    if (trace.header.plant != plant) {
        throw std::invalid_argument("trace header plant '" + trace.header.plant +
                                    "' does not match the config");
    }
}

/// Pair-edit mutations applied on the same schedule the episode used.
class PairEditTimeline {
public:
    PairEditTimeline(const ScenarioConfig& cfg, std::uint64_t seed) {
        // re-resolve the seeded event schedule exactly like the episode did
        World world(cfg, seed);
        events_ = world.events();
    }

    void advance_to(Tick tick, ProcessModel& model) {
        while (next_ < events_.size() && events_[next_].at <= tick) {
            const auto& m = events_[next_].mutation;
            if (m.set_pair_interval) {
                for (std::size_t i = 0; i < model.pairs().size(); ++i) {
                    if (model.pairs()[i].name == m.set_pair_interval->pair) {
                        model.set_pair_interval(i, m.set_pair_interval->interval);
                    }
                }
            }
            ++next_;
        }
    }

private:
    std::vector<EventConfig> events_;
    std::size_t next_{0};
};

const ConditionSnapshot& effective_conditions(const TraceRecord& r,
                                              const ScenarioConfig& cfg) {
    return r.conditions_visible ? r.conditions : cfg.conditions;
}

}  // namespace

MonitorVerdict classify(const Trace& trace, const ScenarioConfig& cfg) {
    validate_trace(trace, cfg);
    MonitorVerdict verdict;

    // shadow pipeline: re-run the decision rules on the logged observations
    ProcessModel model = make_process_model(cfg);
    Controller shadow(cfg, model);
    PairEditTimeline edits(cfg, trace.header.seed);

    std::set<std::tuple<Tick, Stage, ScenarioKind>> seen;
    for (const auto& r : trace.records) {
        edits.advance_to(r.tick, model);
        ControllerOutput out = shadow.step(snapshot_from_record(r, cfg.plant_kind));
        for (const auto& e : out.events) {
            if (seen.insert({e.tick, e.stage, e.kind}).second) {
                verdict.events.push_back(e);
            }
        }
    }

    // stored start-state predictions vs the realized trajectory
    const Tick d13 = cfg.delays.d13();
    if (d13 > 0) {
        for (const auto& r : trace.records) {
            if (!r.has_reference || r.ref_invalidated || r.tick != r.ref_t3) continue;
            if (r.ref_xhat.empty()) continue;
            double gap = 0.0;
            for (std::size_t i = 0; i < r.ref_xhat.size() && i < r.state.size(); ++i) {
                gap = std::max(gap, std::fabs(r.ref_xhat[i] - r.state[i]));
            }
            if (gap > cfg.controller.eps_pred) {
                if (seen.insert({r.ref_t1, Stage::D2, ScenarioKind::TimeCoupling}).second) {
                    std::ostringstream os;
                    os << "stale initial state: stored prediction for tick " << r.ref_t3
                       << " differs from the realized state by " << gap;
                    verdict.events.push_back(ScenarioEvent::make(
                        r.ref_t1, Stage::D2, ScenarioKind::TimeCoupling, os.str()));
                }
            }
        }
    }

    std::sort(verdict.events.begin(), verdict.events.end(),
              [](const ScenarioEvent& a, const ScenarioEvent& b) {
                  if (a.tick != b.tick) return a.tick < b.tick;
                  if (a.stage != b.stage) return a.stage < b.stage;
                  return a.kind < b.kind;
              });
    return verdict;
}

MonitorVerdict replay_check(const Trace& trace, const ScenarioConfig& cfg) {
    validate_trace(trace, cfg);
    MonitorVerdict verdict;

    ProcessModel model = make_process_model(cfg);
    PairEditTimeline edits(cfg, trace.header.seed);
    const Construct& c = model.construct();

    std::optional<Tick> start_tick;
    std::vector<bool> prev_truth;

    // pass 1: per-tick process rule and assumption breaks
    std::vector<DescriptiveConstraints> dcs_by_tick;
    dcs_by_tick.reserve(trace.records.size());
    for (const auto& r : trace.records) {
        edits.advance_to(r.tick, model);
        DescriptiveConstraints dcs = model.aggregate(effective_conditions(r, cfg));

        for (std::size_t i = 0; i < dcs.pair_truth.size(); ++i) {
            bool was = i < prev_truth.size() ? prev_truth[i] : true;
            if (was && !dcs.pair_truth[i]) {
                std::string name = model.pairs()[i].name;
                for (const auto& ex : dcs.excluded) {
                    if (ex.pair_index == i) name += " (" + ex.failed_assumption + ")";
                }
                verdict.assumption_breaks.emplace_back(r.tick, name);
            }
        }
        prev_truth = dcs.pair_truth;

        std::vector<double> u{r.u_applied};
        EvalContext ctx{u, r.state, r.params, r.xdot, r.y};
        for (const auto& v : dcs.violations(ctx)) {
            verdict.process_violations.push_back(
                {"set/" + v.pair_name, r.tick,
                 c.element_name(v.element) + "=" + std::to_string(v.observed) +
                     " outside " + v.bound});
        }
        if (r.begin_maneuver && !start_tick) start_tick = r.tick;
        dcs_by_tick.push_back(std::move(dcs));
    }

    // pass 2: the behavior rule over the executed maneuver
    if (start_tick) {
        const Tick st = *start_tick;
        const auto& start_rec = trace.records[static_cast<std::size_t>(st)];
        WorldSnapshot start_snap = snapshot_from_record(start_rec, cfg.plant_kind);
        const DescriptiveConstraints& start_dcs = dcs_by_tick[static_cast<std::size_t>(st)];

        auto pcs = derive_prescriptive(
            derivation_inputs_for(cfg, start_snap, start_dcs, cfg.run.horizon_ticks),
            performance_for(cfg, start_snap, start_dcs), st,
            Interval(st, std::max<Tick>(cfg.run.horizon_ticks, st + 1)),
            cfg.controller.urgency_margin);

        if (!pcs.start_set.contains(st)) {
            std::string detail = "maneuver started at " + std::to_string(st) +
                                 " outside the feasible start set " + pcs.start_set.to_string();
            if (pcs.must_not_start.contains(st)) {
                detail += " (inside must-not-start " + pcs.must_not_start.to_string() + ")";
            }
            verdict.behavior_violations.push_back({"start_window", st, detail});
        }

        Tick sp;
        bool aborted = false;
        if (cfg.plant_kind == PlantKind::Merge) {
            sp = st + cfg.merge.t_merge_ticks;
        } else {
            sp = static_cast<Tick>(trace.records.size()) - 1;
        }
        for (Tick t = st; t <= sp && t < static_cast<Tick>(trace.records.size()); ++t) {
            if (trace.records[static_cast<std::size_t>(t)].fallback) {
                sp = t;
                aborted = true;
                break;
            }
        }
        const Tick last = static_cast<Tick>(trace.records.size()) - 1;
        const Tick sp_eff = std::min(sp, last);

        if (!aborted && sp <= last) {
            const auto& stop_rec = trace.records[static_cast<std::size_t>(sp)];
            WorldSnapshot stop_snap = snapshot_from_record(stop_rec, cfg.plant_kind);
            auto stop_pcs = derive_prescriptive(
                derivation_inputs_for(cfg, stop_snap, dcs_by_tick[static_cast<std::size_t>(sp)],
                                      cfg.run.horizon_ticks),
                performance_for(cfg, stop_snap, dcs_by_tick[static_cast<std::size_t>(sp)]), sp,
                Interval(sp, std::max<Tick>(cfg.run.horizon_ticks, sp + 1)),
                cfg.controller.urgency_margin);
            if (!stop_pcs.stop_set.contains(sp)) {
                verdict.behavior_violations.push_back(
                    {"stop_window", sp,
                     "maneuver stop at " + std::to_string(sp) + " outside the feasible stop set " +
                         stop_pcs.stop_set.to_string()});
            }
        }

        // per-tick admissible outputs over [st, sp], each epoch's own rule
        for (Tick t = st; t <= sp_eff; ++t) {
            const auto& rec = trace.records[static_cast<std::size_t>(t)];
            WorldSnapshot snap = snapshot_from_record(rec, cfg.plant_kind);
            PerformanceConstraint perf =
                performance_for(cfg, snap, dcs_by_tick[static_cast<std::size_t>(t)], st);
            if (!perf.admissible(t, rec.y)) {
                verdict.behavior_violations.push_back(
                    {"performance", t, "output outside the admissible set [" + perf.name + "]"});
                break;  // first offending tick
            }
        }
    }

    // merge-lane clearance while still in the merge lane (the in-behavior's
    // constraint); ticks after a deliberate fallback are judged by the
    // braking-margin rule instead
    if (cfg.plant_kind == PlantKind::Merge) {
        double d_end = cfg.merge.d_end_min_m;
        if (const BehaviorConfig* b = cfg.find_behavior(cfg.intended)) {
            if (const BehaviorConfig* inb = cfg.find_behavior(b->in_ref);
                inb && inb->pc.kind == PcTemplate::Kind::DistanceToLaneEnd) {
                d_end = inb->pc.min_m;
            }
        }
        Tick done_at = start_tick ? *start_tick + cfg.merge.t_merge_ticks
                                  : static_cast<Tick>(trace.records.size());
        for (const auto& r : trace.records) {
            if (r.tick >= done_at || r.fallback) break;
            double lane_end = r.params.empty() ? cfg.merge.lane_end_m : r.params[0];
            if (lane_end - r.state[0] < d_end) {
                verdict.behavior_violations.push_back(
                    {"lane_end_clearance", r.tick,
                     "remaining lane " + std::to_string(lane_end - r.state[0]) + " m below " +
                         std::to_string(d_end) + " m"});
                break;
            }
        }
    }
    return verdict;
}

MonitorVerdict monitor_trace(const Trace& trace, const ScenarioConfig& cfg) {
    MonitorVerdict verdict = classify(trace, cfg);
    MonitorVerdict replay = replay_check(trace, cfg);
    verdict.behavior_violations = std::move(replay.behavior_violations);
    verdict.process_violations = std::move(replay.process_violations);
    verdict.assumption_breaks = std::move(replay.assumption_breaks);
    return verdict;
}

}  // namespace stpaplus
