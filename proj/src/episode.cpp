#include "stpaplus/episode.hpp"

#include <cmath>
#include <sstream>

namespace stpaplus {

bool EpisodeSummary::has_event(Stage stage, ScenarioKind kind) const {
    for (const auto& e : events) {
        if (e.stage == stage && e.kind == kind) return true;
    }
    return false;
}

std::string EpisodeSummary::to_text() const {
    std::ostringstream os;
    os << "terminal=" << terminal_name(terminal) << " ticks=" << ticks << '\n';
    std::map<std::string, int> counts;
    for (const auto& e : events) {
        counts[std::string(stage_name(e.stage)) + '/' + scenario_kind_name(e.kind)]++;
    }
    os << "scenario_events=" << events.size() << '\n';
    for (const auto& [key, n] : counts) os << "  " << key << " x" << n << '\n';
    if (fallback_engaged) {
        os << "fallback_engaged=true";
        if (fallback_margin_ok) {
            os << " braking_margin_ok=" << (*fallback_margin_ok ? "true" : "false");
        }
        os << '\n';
    }
    if (maneuver_started_at) os << "maneuver_started_at=" << *maneuver_started_at << '\n';
    if (onset_plan_error) os << "onset_plan_error=" << *onset_plan_error << '\n';
    for (double g : prediction_gap) os << "prediction_gap=" << g << '\n';
    os << "saturations=" << saturations << '\n';
    return os.str();
}

namespace {

double inf_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        m = std::max(m, std::fabs(a[i] - b[i]));
    }
    return m;
}

TraceRecord build_record(const WorldSnapshot& snap, const ControllerOutput& out) {
    TraceRecord r;
    r.tick = snap.tick;
    r.state = snap.state;
    r.params = snap.params;
    r.traffic = snap.traffic;
    r.traffic_visible = snap.traffic_visible;
    r.traffic_speeds_visible = snap.traffic_speeds_visible;
    r.conditions = snap.conditions;
    r.conditions_visible = snap.conditions_visible;
    for (bool b : out.dcs.pair_truth) r.assumption_truth.push_back(b);
    r.w_mst = out.windows.must_start.to_string();
    r.w_nst = out.windows.must_not_start.to_string();
    r.w_cst = out.windows.can_start.to_string();
    r.w_msp = out.windows.must_stop.to_string();
    r.w_nsp = out.windows.must_not_stop.to_string();
    r.w_csp = out.windows.can_stop.to_string();
    r.w_st = out.windows.start_set.to_string();
    r.w_sp = out.windows.stop_set.to_string();
    r.start_conflict = out.windows.start_conflict;
    r.start_doomed = out.windows.start_doomed;
    r.phase = out.phase;
    if (out.reference) {
        r.has_reference = true;
        r.ref_start = out.reference->start;
        r.ref_stop = out.reference->stop;
        r.ref_target = out.reference->target_value;
        r.ref_t1 = out.reference->t1;
        r.ref_t2 = out.reference->t2;
        r.ref_t3 = out.reference->t3;
        r.ref_epoch = out.reference->epoch;
        r.ref_invalidated = out.reference->invalidated;
        r.ref_xhat = out.reference->predicted_start_state;
    }
    r.xhat_generated = out.xhat_t3;
    r.begin_maneuver = out.command.begin_maneuver;
    r.fallback = out.command.fallback_brake;
    r.events = out.events;
    return r;
}

/// Planned state at the maneuver start: the reference trajectory replayed
/// from its stored start-state prediction.
std::vector<double> planned_state_at_start(const ScenarioConfig& cfg, const Construct& c,
                                           const ControlReference& ref,
                                           const DescriptiveConstraints& dcs) {
    std::vector<double> sim = ref.predicted_start_state;
    ValueRange ub = dcs.bounds({ElementKind::Input, 0});
    const double dt = cfg.run.dt_s;
    for (Tick t = ref.t3; t < ref.start; ++t) {
        double u;
        if (cfg.plant_kind == PlantKind::Merge) {
            u = std::clamp((ref.setpoint_at(t + 1) - sim[1]) / dt, ub.lo, ub.hi);
        } else {
            u = ref.setpoint_at(t);
        }
        std::vector<double> uv{u};
        sim = c.step(sim, uv);
    }
    return sim;
}

}  // namespace

EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed) {
    EpisodeResult result;
    World world(cfg, seed);
    ProcessModel model = make_process_model(cfg);
    Controller controller(cfg, model);

    result.trace.header.plant = cfg.plant_kind == PlantKind::Merge ? "merge" : "descent";
    result.trace.header.dt_s = cfg.run.dt_s;
    result.trace.header.horizon_ticks = cfg.run.horizon_ticks;
    result.trace.header.seed = seed;

    EpisodeSummary& summary = result.summary;
    summary.terminal = TerminalKind::HorizonEnd;

    for (Tick t = 0; t < cfg.run.horizon_ticks; ++t) {
        world.apply_events(t, model);
        WorldSnapshot snap = world.observe(t);
        ControllerOutput out = controller.step(snap);

        for (const auto& e : out.events) summary.events.push_back(e);

        // start-state prediction audit: realized state at t3 vs the stored
        // prediction of the active reference
        if (out.reference && !out.reference->invalidated && t == out.reference->t3 &&
            !out.reference->predicted_start_state.empty()) {
            summary.prediction_gap.push_back(
                inf_norm_diff(snap.state, out.reference->predicted_start_state));
        }
        if (out.command.begin_maneuver && out.reference) {
            summary.maneuver_started_at = t;
            auto planned = planned_state_at_start(cfg, model.construct(), *out.reference, out.dcs);
            summary.onset_plan_error = inf_norm_diff(snap.state, planned);
        }

        TerminalKind term = world.terminal(t);
        if (term != TerminalKind::None) {
            TraceRecord r = build_record(snap, out);
            // the episode ends here; no further input is applied
            r.xdot.assign(model.construct().state_dim(), 0.0);
            r.y.assign(model.construct().output_dim(), 0.0);
            std::vector<double> u0{0.0};
            model.construct().eval(u0, snap.state, r.xdot, r.y);
            result.trace.records.push_back(std::move(r));
            summary.terminal = term;
            break;
        }

        StepRecord step = world.step(out.command, out.dcs);
        if (step.saturated) ++summary.saturations;
        TraceRecord r = build_record(snap, out);
        r.u_requested = step.u_requested;
        r.u_applied = step.u_applied;
        r.saturated = step.saturated;
        r.xdot = step.xdot;
        r.y = step.y;
        result.trace.records.push_back(std::move(r));
    }

    summary.ticks = static_cast<Tick>(result.trace.records.size());
    summary.fallback_engaged = world.fallback_engaged();
    summary.fallback_margin_ok = world.fallback_margin_ok();
    summary.final_state = world.state();
    result.trace.footer.terminal = terminal_name(summary.terminal);
    result.trace.footer.ticks = summary.ticks;

    result.verdict = monitor_trace(result.trace, cfg);
    return result;
}

}  // namespace stpaplus
