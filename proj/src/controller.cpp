#include "stpaplus/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stpaplus {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::D1: return "D1";
        case Stage::D2: return "D2";
        case Stage::D3: return "D3";
    }
    return "?";
}

const char* scenario_kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::NoDecision: return "no_decision";
        case ScenarioKind::PreviouslySafe: return "previously_safe";
        case ScenarioKind::UnsafeTiming: return "unsafe_timing";
        case ScenarioKind::TimeCoupling: return "time_coupling";
    }
    return "?";
}

std::optional<Stage> stage_from_name(const std::string& s) {
    if (s == "D1") return Stage::D1;
    if (s == "D2") return Stage::D2;
    if (s == "D3") return Stage::D3;
    return std::nullopt;
}

std::optional<ScenarioKind> scenario_kind_from_name(const std::string& s) {
    if (s == "no_decision") return ScenarioKind::NoDecision;
    if (s == "previously_safe") return ScenarioKind::PreviouslySafe;
    if (s == "unsafe_timing") return ScenarioKind::UnsafeTiming;
    if (s == "time_coupling") return ScenarioKind::TimeCoupling;
    return std::nullopt;
}

ScenarioEvent ScenarioEvent::make(Tick tick, Stage stage, ScenarioKind kind,
                                  std::string cause) {
    if (stage == Stage::D1 && kind == ScenarioKind::TimeCoupling) {
        throw std::invalid_argument(
            "time coupling is not applicable while deciding prescriptive constraints");
    }
    return {tick, stage, kind, std::move(cause)};
}

double ControlReference::setpoint_at(Tick t) const {
    if (setpoints.empty()) return 0.0;
    Tick idx = std::clamp<Tick>(t - traj_begin, 0, static_cast<Tick>(setpoints.size()) - 1);
    return setpoints[static_cast<std::size_t>(idx)];
}

std::vector<double> predict_state(
    const Construct& construct, std::vector<double> x_obs, Tick from_tick, Tick d,
    const std::map<Tick, double>& in_flight,
    const std::function<double(Tick, const std::vector<double>&)>& fallthrough,
    const DescriptiveConstraints& dcs) {
    if (d < 0) {
        throw std::invalid_argument("predict_state: negative prediction distance");
    }
    std::vector<double> x = std::move(x_obs);
    ValueRange ub = dcs.bounds({ElementKind::Input, 0});
    for (Tick t = from_tick; t < from_tick + d; ++t) {
        auto it = in_flight.find(t);
        double u = it != in_flight.end() ? it->second : fallthrough(t, x);
        u = std::clamp(u, ub.lo, ub.hi);
        std::vector<double> uv{u};
        x = construct.step(x, uv);
    }
    return x;
}

Controller::Controller(const ScenarioConfig& cfg, ProcessModel& model)
    : cfg_(cfg), model_(model), delays_(DelayProfile::from(cfg.delays)),
      horizon_(cfg.run.horizon_ticks) {}

void Controller::apply_policy(PolicyAction action, ControllerOutput&) {
    switch (action) {
        case PolicyAction::Replan:
            break;  // keep deciding; the next tick retries
        case PolicyAction::Fallback:
            fallback_ = true;
            break;
        case PolicyAction::Halt:
            halted_ = true;
            break;
    }
}

double Controller::default_control(Tick, const std::vector<double>&) const {
    // no committed plan: coast (merge) / hold level flight (descent)
    return 0.0;
}

double Controller::tracking_control(Tick plant_tick, const WorldSnapshot& snap,
                                    const DescriptiveConstraints& dcs) const {
    const double dt = cfg_.run.dt_s;
    if (cfg_.plant_kind == PlantKind::Merge) {
        double v_base;
        if (cfg_.controller.compensate_action && plant_tick > snap.tick) {
            auto x = predict_state(
                model_.construct(), snap.state, snap.tick, plant_tick - snap.tick, issued_,
                [this](Tick t, const std::vector<double>& s) { return default_control(t, s); },
                dcs);
            v_base = x[1];
        } else {
            v_base = snap.state[1];  // stale by the actuation transport
        }
        double r_next = active_->setpoint_at(plant_tick + 1);
        ValueRange ub = dcs.bounds({ElementKind::Input, 0});
        return std::clamp((r_next - v_base) / dt, ub.lo, ub.hi);
    }
    Tick idx = cfg_.controller.compensate_action ? plant_tick : snap.tick;
    return active_->setpoint_at(idx);
}

// ---------------------------------------------------------------------------
// D1: decide prescriptive constraints (every tick, epoch-diffed)
// ---------------------------------------------------------------------------
void Controller::run_d1(const WorldSnapshot& snap, const PrescriptiveConstraints& fresh,
                        ControllerOutput& out) {
    const Tick now = snap.tick;

    // previously-safe: the stored commitments fell out of the fresh windows
    if (active_ && !active_->invalidated && now < active_->start) {
        std::string cause;
        if (!fresh.start_set.contains(active_->start)) {
            cause = "committed start " + std::to_string(active_->start) +
                    " left the feasible start set " + fresh.start_set.to_string();
        } else if (!fresh.stop_set.contains(active_->stop)) {
            cause = "committed stop " + std::to_string(active_->stop) +
                    " left the feasible stop set " + fresh.stop_set.to_string();
        } else if (fresh.has_conflict()) {
            cause = "window derivation turned conflicted";
        }
        if (!cause.empty()) {
            out.events.push_back(
                ScenarioEvent::make(now, Stage::D1, ScenarioKind::PreviouslySafe, cause));
            PolicyAction action = cfg_.controller.policy.previously_safe;
            if (action == PolicyAction::Replan) {
                active_->invalidated = true;
                want_replan_ = true;
                job_.reset();
            } else {
                apply_policy(action, out);
            }
        }
    }

    if (job_ || fallback_ || halted_) return;
    if (active_ && !active_->invalidated) return;
    const bool replan = active_ && active_->invalidated && want_replan_;

    if (fresh.has_conflict()) {
        if (!nd_latched_) {
            std::string cause = fresh.start_doomed
                ? "transition deadline already lapsed"
                : "must window " + fresh.must_start.to_string() +
                      " lies inside must-not window " + fresh.must_not_start.to_string();
            out.events.push_back(
                ScenarioEvent::make(now, Stage::D1, ScenarioKind::NoDecision, cause));
            nd_latched_ = true;
            apply_policy(cfg_.controller.policy.no_decision, out);
        }
        return;
    }
    nd_latched_ = false;

    if (!replan) {
        // too-late gate for a fresh decision: the earliest feasible start must
        // still be actionable through the whole pipeline
        auto earliest = fresh.start_set.first();
        Tick cost = delays_.l1 + delays_.l2 + delays_.l3 + delays_.d13();
        if (earliest && *earliest < now + cost) {
            if (!ut_latched_) {
                std::ostringstream os;
                os << "earliest feasible start " << *earliest << " < now " << now
                   << " + pipeline cost " << cost;
                out.events.push_back(ScenarioEvent::make(now, Stage::D1,
                                                         ScenarioKind::UnsafeTiming, os.str()));
                ut_latched_ = true;
                apply_policy(cfg_.controller.policy.unsafe_timing, out);
            }
            return;
        }
        ut_latched_ = false;
    }

    PipelineJob job;
    job.obs_tick = now;
    job.t1 = now + delays_.l1;
    job.t2 = job.t1 + delays_.d12;
    job.t3 = job.t1 + delays_.d13();
    job.pcs = fresh;
    job.replan = replan;
    job_ = std::move(job);
    want_replan_ = false;
}

// ---------------------------------------------------------------------------
// D2 watchdog: the active plan against the freshest constraints
// ---------------------------------------------------------------------------
void Controller::run_d2_scan(const WorldSnapshot& snap, const PrescriptiveConstraints& fresh,
                             const DescriptiveConstraints& dcs, ControllerOutput& out) {
    if (!active_ || active_->invalidated || job_ || fallback_ || halted_) return;
    const Tick now = snap.tick;
    if (now > active_->stop) return;
    PerformanceConstraint perf = performance_for(cfg_, snap, dcs, active_->start);

    const Construct& c = model_.construct();
    const double dt = cfg_.run.dt_s;
    std::vector<double> sim = snap.state;
    std::vector<double> xdot(c.state_dim()), y(c.output_dim());
    ValueRange ub = dcs.bounds({ElementKind::Input, 0});

    for (Tick t = now; t <= active_->stop; ++t) {
        double u;
        auto it = issued_.find(t);
        if (it != issued_.end()) {
            u = it->second;
        } else if (cfg_.plant_kind == PlantKind::Merge) {
            u = std::clamp((active_->setpoint_at(t + 1) - sim[1]) / dt, ub.lo, ub.hi);
        } else {
            u = active_->setpoint_at(t);
        }
        std::vector<double> uv{u};
        c.dynamics(uv, sim, snap.params, xdot, y);
        EvalContext ctx{uv, sim, snap.params, xdot, y};

        auto violations = dcs.violations(ctx);
        if (!violations.empty()) {
            std::ostringstream os;
            os << "descriptive constraints " << (t == now ? "being" : "going to be")
               << " violated at tick " << t << ": "
               << element_kind_name(violations[0].element.kind) << '['
               << violations[0].element.index << "]=" << violations[0].observed
               << " outside " << violations[0].bound;
            out.events.push_back(
                ScenarioEvent::make(now, Stage::D2, ScenarioKind::PreviouslySafe, os.str()));
            break;
        }
        if (t >= active_->start && t <= active_->stop && !perf.admissible(t, y)) {
            std::ostringstream os;
            os << "prescriptive constraints going to be violated at tick " << t << " ["
               << perf.name << ']';
            out.events.push_back(
                ScenarioEvent::make(now, Stage::D2, ScenarioKind::PreviouslySafe, os.str()));
            break;
        }
        sim = c.step(sim, uv);
    }

    if (!out.events.empty() && out.events.back().stage == Stage::D2 &&
        out.events.back().kind == ScenarioKind::PreviouslySafe &&
        out.events.back().tick == now) {
        PolicyAction action = cfg_.controller.policy.previously_safe;
        if (action == PolicyAction::Replan) {
            if (cfg_.plant_kind == PlantKind::Merge && now >= active_->start) {
                // the maneuver is already running; a fresh start cannot be
                // re-decided, so fall back instead
                apply_policy(PolicyAction::Fallback, out);
            } else {
                active_->invalidated = true;
                want_replan_ = true;
            }
        } else {
            apply_policy(action, out);
        }
    }
}

// ---------------------------------------------------------------------------
// D3 watchdog: issued-but-recallable actions against the fresh input sets
// ---------------------------------------------------------------------------
void Controller::run_d3_scan(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                             ControllerOutput& out) {
    if (issued_.empty() || fallback_ || halted_) return;
    const Tick now = snap.tick;
    ValueRange ub = dcs.bounds({ElementKind::Input, 0});
    std::optional<Tick> first_bad;
    for (const auto& [tick, u] : issued_) {
        if (tick < now + delays_.d23) continue;  // beyond recall
        if (u >= ub.lo && u <= ub.hi) continue;
        std::ostringstream os;
        os << "issued action u=" << u << " for tick " << tick
           << " violates the updated input set " << to_string(ub);
        out.events.push_back(
            ScenarioEvent::make(now, Stage::D3, ScenarioKind::PreviouslySafe, os.str()));
        first_bad = tick;
        break;
    }
    if (first_bad) {
        // recall the schedule from the violation on; tracking re-issues it
        // against the updated sets from the realized state
        issued_.erase(issued_.lower_bound(*first_bad), issued_.end());
    }
}

// ---------------------------------------------------------------------------
// Reference search (D2 proper)
// ---------------------------------------------------------------------------
bool Controller::plan_feasible(const ControlReference& ref, const WorldSnapshot& snap,
                               const DescriptiveConstraints& dcs,
                               const std::vector<double>& from, Tick from_tick,
                               std::string* why) const {
    const Construct& c = model_.construct();
    const double dt = cfg_.run.dt_s;
    PerformanceConstraint perf = performance_for(cfg_, snap, dcs, ref.start);
    ValueRange ub = dcs.bounds({ElementKind::Input, 0});

    std::vector<double> sim = from;
    std::vector<double> xdot(c.state_dim()), y(c.output_dim());
    for (Tick t = from_tick; t <= ref.stop; ++t) {
        double u;
        if (cfg_.plant_kind == PlantKind::Merge) {
            u = std::clamp((ref.setpoint_at(t + 1) - sim[1]) / dt, ub.lo, ub.hi);
        } else {
            u = ref.setpoint_at(t);
        }
        std::vector<double> uv{u};
        c.dynamics(uv, sim, snap.params, xdot, y);
        EvalContext ctx{uv, sim, snap.params, xdot, y};
        auto violations = dcs.violations(ctx);
        if (!violations.empty()) {
            if (why) *why = "descriptive violation at tick " + std::to_string(t);
            return false;
        }
        if (t >= ref.start && !perf.admissible(t, y)) {
            if (why) *why = "performance violation at tick " + std::to_string(t);
            return false;
        }
        sim = c.step(sim, uv);
    }
    if (cfg_.plant_kind == PlantKind::Merge) {
        // the completed maneuver must clear the lane end
        double d_end = snap.params[1];
        std::vector<double> probe = from;
        for (Tick t = from_tick; t < ref.stop; ++t) {
            double u = std::clamp((ref.setpoint_at(t + 1) - probe[1]) / dt, ub.lo, ub.hi);
            std::vector<double> uv{u};
            probe = c.step(probe, uv);
        }
        if (probe[0] > snap.params[0] - d_end) {
            if (why) *why = "completion would breach the lane-end clearance";
            return false;
        }
    }
    return true;
}

std::optional<ControlReference> Controller::find_reference(
    const PrescriptiveConstraints& pcs, const WorldSnapshot& snap,
    const DescriptiveConstraints& dcs, const std::vector<double>& xhat, Tick t1, Tick t2,
    Tick t3) const {
    const double dt = cfg_.run.dt_s;

    if (cfg_.plant_kind == PlantKind::Merge) {
        const Tick t_merge = cfg_.merge.t_merge_ticks;
        ValueRange ub = dcs.bounds({ElementKind::Input, 0});
        ValueRange vb = dcs.bounds({ElementKind::State, 1});
        std::optional<ValueRange> entry;
        if (const BehaviorConfig* b = cfg_.find_behavior(cfg_.intended);
            b && b->pc.kind == PcTemplate::Kind::GapToTraffic) {
            entry = b->pc.entry_speed;
        }
        ValueRange v_window = vb;
        if (entry) v_window = intersect(v_window, *entry);
        if (v_window.lo > v_window.hi) return std::nullopt;

        const double v_hat = xhat[1];
        // candidate target speeds, nearest to the predicted speed first
        std::vector<double> grid;
        double lo = std::max(v_window.lo, 0.0);
        double hi = v_window.hi;
        for (double v = lo; v <= hi + 1e-9; v += cfg_.controller.speed_step_mps) {
            grid.push_back(v);
        }
        if (v_hat >= lo && v_hat <= hi) grid.push_back(v_hat);
        std::stable_sort(grid.begin(), grid.end(), [&](double a, double b) {
            double da = std::fabs(a - v_hat), db = std::fabs(b - v_hat);
            if (da != db) return da < db;
            return a < b;
        });

        for (const auto& piece : pcs.start_set.pieces()) {
            for (Tick st = std::max(piece.lo, t3); st < piece.hi; ++st) {
                Tick sp = st + t_merge;
                if (sp >= horizon_) return std::nullopt;  // later starts only get worse
                if (!pcs.stop_set.contains(sp)) continue;
                for (double v_tgt : grid) {
                    ControlReference ref;
                    ref.start = st;
                    ref.stop = sp;
                    ref.target_value = v_tgt;
                    ref.traj_begin = t3;
                    ref.t1 = t1;
                    ref.t2 = t2;
                    ref.t3 = t3;
                    ref.epoch = pcs.derivation_epoch;
                    ref.predicted_start_state = xhat;
                    // bounded-acceleration ramp to the target, then hold
                    double v = v_hat;
                    bool reached = false;
                    for (Tick t = t3; t <= sp; ++t) {
                        ref.setpoints.push_back(v);
                        if (t >= st && !reached) break;  // must stabilize before the start
                        double step = v_tgt > v ? std::min(ub.hi * dt, v_tgt - v)
                                                : std::max(ub.lo * dt, v_tgt - v);
                        v += step;
                        if (std::fabs(v - v_tgt) < 1e-12) {
                            v = v_tgt;
                            reached = true;
                        }
                    }
                    if (!reached && std::fabs(v_hat - v_tgt) > 1e-12) continue;
                    // fill the hold segment
                    while (ref.setpoints.size() <
                           static_cast<std::size_t>(sp - t3 + 1)) {
                        ref.setpoints.push_back(v_tgt);
                    }
                    if (plan_feasible(ref, snap, dcs, xhat, t3)) return ref;
                }
            }
        }
        return std::nullopt;
    }

    // descent: the constant angle is fixed by the geometry at each start tick
    ValueRange gb = intersect(dcs.bounds({ElementKind::State, 0}),
                              dcs.bounds({ElementKind::Input, 0}));
    for (const auto& piece : pcs.start_set.pieces()) {
        for (Tick st = std::max(piece.lo, t3); st < piece.hi; ++st) {
            double gamma = descent_required_gamma(cfg_, snap, st);
            if (!gb.contains(gamma)) continue;
            Tick duration = descent_duration_ticks(cfg_, snap, st);
            if (duration <= 0) continue;
            Tick sp = st + duration;
            if (sp >= horizon_) return std::nullopt;
            if (!pcs.stop_set.contains(sp)) continue;
            ControlReference ref;
            ref.start = st;
            ref.stop = sp;
            ref.target_value = gamma;
            ref.traj_begin = t3;
            ref.t1 = t1;
            ref.t2 = t2;
            ref.t3 = t3;
            ref.epoch = pcs.derivation_epoch;
            ref.predicted_start_state = xhat;
            // the construct acquires the command one tick later, so lead it
            for (Tick t = t3; t <= sp; ++t) {
                ref.setpoints.push_back(t >= st - 1 ? gamma : 0.0);
            }
            if (plan_feasible(ref, snap, dcs, xhat, t3)) return ref;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Committed-segment bridge (reference replacement under delay): the actions
// inside [t1, t1+d13) and the replacement reference must satisfy both
// constraint families at the same time, so the bridge candidates and the
// reference search are coupled.
// ---------------------------------------------------------------------------
std::optional<ControlReference> Controller::plan_replacement(
    const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
    const PrescriptiveConstraints& pcs, Tick t1, Tick t2, Tick t3, ControllerOutput& out) {
    const Construct& c = model_.construct();
    const Tick locked_end = t1 + delays_.d23;
    const Tick window_end = t1 + delays_.d13();
    ValueRange ub = dcs.bounds({ElementKind::Input, 0});

    auto segment_control = [&](Tick t, const std::vector<double>& state,
                               const std::vector<double>* patch) -> double {
        if (patch && t >= locked_end) {
            return (*patch)[static_cast<std::size_t>(t - locked_end)];
        }
        auto it = issued_.find(t);
        if (it != issued_.end()) return it->second;
        return default_control(t, state);
    };

    // simulate the committed segment under a bridge candidate; clean means
    // the descriptive constraints hold throughout
    auto simulate = [&](const std::vector<double>* patch, std::vector<double>* end_state) {
        std::vector<double> sim = snap.state;
        std::vector<double> xdot(c.state_dim()), y(c.output_dim());
        bool clean = true;
        for (Tick t = t1; t < window_end; ++t) {
            double u = std::clamp(segment_control(t, sim, patch), ub.lo, ub.hi);
            std::vector<double> uv{u};
            c.dynamics(uv, sim, snap.params, xdot, y);
            EvalContext ctx{uv, sim, snap.params, xdot, y};
            if (!dcs.violations(ctx).empty()) clean = false;
            sim = c.step(sim, uv);
        }
        *end_state = sim;
        return clean;
    };

    bool any_clean = false;
    int ref_attempts = 0;
    auto try_bridge = [&](const std::vector<double>* patch)
        -> std::optional<ControlReference> {
        std::vector<double> handoff;
        if (!simulate(patch, &handoff)) return std::nullopt;
        any_clean = true;
        if (++ref_attempts > 64) return std::nullopt;
        auto ref = find_reference(pcs, snap, dcs, handoff, t1, t2, t3);
        if (!ref) return std::nullopt;
        if (patch) {
            for (Tick t = locked_end; t < window_end; ++t) {
                issued_[t] = (*patch)[static_cast<std::size_t>(t - locked_end)];
            }
        }
        return ref;
    };

    // the default continuation first: it is what the plant will do anyway
    if (auto ref = try_bridge(nullptr)) return ref;

    const Tick width = window_end - locked_end;
    if (width > 0 && width <= 16) {
        std::vector<double> levels{ub.lo, 0.0, ub.hi};
        std::erase_if(levels, [&](double v) { return !std::isfinite(v); });
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

        std::vector<double> patch(static_cast<std::size_t>(width), levels.front());
        long examined = 0;
        const long cap = 200000;
        std::optional<ControlReference> found;
        std::function<bool(std::size_t)> dfs = [&](std::size_t depth) -> bool {
            if (++examined > cap || ref_attempts > 64) return false;
            if (depth == patch.size()) {
                found = try_bridge(&patch);
                return found.has_value();
            }
            for (double level : levels) {
                patch[depth] = level;
                if (dfs(depth + 1)) return true;
            }
            return false;
        };
        if (dfs(0) && found) return found;
    }

    if (!any_clean) {
        out.events.push_back(ScenarioEvent::make(
            t1, Stage::D3, ScenarioKind::NoDecision,
            "no control action over the committed segment [" + std::to_string(t1) + "," +
                std::to_string(window_end) + ") satisfies both constraint families"));
        apply_policy(cfg_.controller.policy.d3_no_decision, out);
    } else {
        out.events.push_back(ScenarioEvent::make(
            t1, Stage::D2, ScenarioKind::NoDecision,
            "no (start, stop, trajectory) satisfies the prescriptive and descriptive "
            "constraints together from any admissible committed-segment handoff"));
        apply_policy(cfg_.controller.policy.no_decision, out);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pipeline job progression: reference generation at t1, adoption at t2
// ---------------------------------------------------------------------------
void Controller::progress_job(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                              ControllerOutput& out) {
    if (!job_ || fallback_ || halted_) return;
    const Tick now = snap.tick;

    if (now == job_->t1 && !job_->pending) {
        std::vector<double> xhat;
        if (cfg_.controller.compensate_reference) {
            xhat = predict_state(
                model_.construct(), snap.state, now, delays_.d13(), issued_,
                [this](Tick t, const std::vector<double>& s) { return default_control(t, s); },
                dcs);
        } else {
            xhat = snap.state;
            if (delays_.d13() > 0) {
                out.events.push_back(ScenarioEvent::make(
                    now, Stage::D2, ScenarioKind::TimeCoupling,
                    "reference generated from the stale state observed at t1; the process "
                    "seeks it " + std::to_string(delays_.d13()) + " ticks later"));
            }
        }
        out.xhat_t3 = xhat;

        std::optional<ControlReference> ref;
        if (job_->replan && active_ && delays_.d13() > 0) {
            // the committed-segment bridge and the replacement reference must
            // hold together; the search couples them
            ref = plan_replacement(snap, dcs, job_->pcs, job_->t1, job_->t2, job_->t3, out);
            if (ref) out.xhat_t3 = ref->predicted_start_state;
            if (!ref) {
                job_.reset();
                return;
            }
        } else {
            ref = find_reference(job_->pcs, snap, dcs, xhat, job_->t1, job_->t2, job_->t3);
            if (!ref) {
                out.events.push_back(ScenarioEvent::make(
                    now, Stage::D2, ScenarioKind::NoDecision,
                    "no (start, stop, trajectory) satisfies the prescriptive and descriptive "
                    "constraints together"));
                job_.reset();
                apply_policy(cfg_.controller.policy.no_decision, out);
                return;
            }
        }
        Tick cost = delays_.l2 + delays_.l3 + delays_.d13();
        if (ref->start < now + cost) {
            std::ostringstream os;
            os << "chosen start " << ref->start << " < now " << now
               << " + remaining pipeline cost " << cost;
            out.events.push_back(
                ScenarioEvent::make(now, Stage::D2, ScenarioKind::UnsafeTiming, os.str()));
            job_.reset();
            apply_policy(cfg_.controller.policy.unsafe_timing, out);
            return;
        }
        job_->pending = std::move(ref);
    }

    if (job_ && job_->pending && now == job_->t2) {
        ControlReference ref = *job_->pending;
        if (!cfg_.controller.compensate_action && delays_.d23 > 0) {
            out.events.push_back(ScenarioEvent::make(
                now, Stage::D3, ScenarioKind::TimeCoupling,
                "actions generated against the state at issuance; the process executes "
                "them " + std::to_string(delays_.d23) + " ticks later"));
        }
        Tick exec_lead = cfg_.plant_kind == PlantKind::Merge ? cfg_.merge.exec_lead_ticks : 0;
        if (ref.start < now + delays_.d23 + exec_lead) {
            std::ostringstream os;
            os << "maneuver trigger for start " << ref.start
               << " cannot be issued in time (execution lead " << exec_lead
               << " + transport " << delays_.d23 << ")";
            out.events.push_back(
                ScenarioEvent::make(now, Stage::D3, ScenarioKind::UnsafeTiming, os.str()));
            job_.reset();
            apply_policy(cfg_.controller.policy.unsafe_timing, out);
            return;
        }
        active_ = ref;
        want_replan_ = false;
        job_.reset();
        if (cfg_.controller.issue_all) {
            // issue the whole remaining schedule now; later constraint changes
            // recall and re-issue through the D3 scan
            std::vector<double> sim = ref.predicted_start_state;
            ValueRange ub = dcs.bounds({ElementKind::Input, 0});
            const double dt = cfg_.run.dt_s;
            for (Tick t = ref.t3; t <= ref.stop; ++t) {
                double u;
                if (cfg_.plant_kind == PlantKind::Merge) {
                    u = std::clamp((ref.setpoint_at(t + 1) - sim[1]) / dt, ub.lo, ub.hi);
                } else {
                    u = ref.setpoint_at(t);
                }
                issued_[t] = u;
                std::vector<double> uv{u};
                sim = model_.construct().step(sim, uv);
            }
        }
    }
}

void Controller::issue_actions(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                               ControllerOutput& out) {
    const Tick now = snap.tick;
    const Tick target = now + delays_.d23;

    if (target < horizon_ && !issued_.count(target)) {
        double u;
        if (halted_ || fallback_) {
            u = 0.0;
        } else if (active_ && !active_->invalidated && target >= active_->t3) {
            u = tracking_control(target, snap, dcs);
        } else {
            u = default_control(target, snap.state);
        }
        issued_[target] = u;
    }

    auto it = issued_.find(now);
    out.command.u = it != issued_.end() ? it->second : default_control(now, snap.state);
    out.command.fallback_brake = fallback_;
    out.command.begin_maneuver = active_ && !active_->invalidated && !fallback_ && !halted_ &&
                                 now == active_->start;
}

// ---------------------------------------------------------------------------
// Naive baseline: no must-not windows, no compensation, no re-decisions
// ---------------------------------------------------------------------------
void Controller::naive_step(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                            ControllerOutput& out) {
    const Tick now = snap.tick;
    if (!naive_planned_) {
        naive_planned_ = true;
        Tick t3 = now + delays_.d13();
        Tick open_until = out.windows.must_start.sup().value_or(horizon_);
        Tick start = std::min(std::max(now, t3), open_until - 1);
        if (out.windows.must_start.empty() && open_until <= start) return;

        ControlReference ref;
        ref.start = start;
        ref.traj_begin = t3;
        ref.t1 = now;
        ref.t2 = now + delays_.d12;
        ref.t3 = t3;
        ref.epoch = now;
        ref.predicted_start_state = snap.state;  // stale on purpose
        if (cfg_.plant_kind == PlantKind::Merge) {
            ref.stop = start + cfg_.merge.t_merge_ticks;
            ref.target_value = snap.state[1];  // hold the current speed
            for (Tick t = t3; t <= ref.stop; ++t) ref.setpoints.push_back(snap.state[1]);
        } else {
            double gamma = descent_required_gamma(cfg_, snap, start);
            Tick duration = descent_duration_ticks(cfg_, snap, start);
            ref.stop = start + std::max<Tick>(duration, 1);
            ref.target_value = gamma;
            for (Tick t = t3; t <= ref.stop; ++t) {
                ref.setpoints.push_back(t >= start - 1 ? gamma : 0.0);
            }
        }
        if (ref.stop >= horizon_) {
            naive_planned_ = true;
            return;
        }
        active_ = ref;
    }

    const Tick target = now + delays_.d23;
    if (target < horizon_ && !issued_.count(target)) {
        double u = 0.0;
        if (active_ && target >= active_->t3) {
            if (cfg_.plant_kind == PlantKind::Merge) {
                ValueRange ub = dcs.bounds({ElementKind::Input, 0});
                // stale state: no transport compensation
                u = std::clamp((active_->setpoint_at(target + 1) - snap.state[1]) / cfg_.run.dt_s,
                               ub.lo, ub.hi);
            } else {
                u = active_->setpoint_at(now);
            }
        }
        issued_[target] = u;
    }
    auto it = issued_.find(now);
    out.command.u = it != issued_.end() ? it->second : 0.0;
    out.command.begin_maneuver = active_ && now == active_->start;
}

ControllerOutput Controller::step(const WorldSnapshot& snap) {
    ControllerOutput out;
    // with conditions not observable the controller falls back to its static
    // world model: the declared initial values
    const ConditionSnapshot& conditions =
        snap.conditions_visible ? snap.conditions : cfg_.conditions;
    DescriptiveConstraints dcs = model_.aggregate(conditions);
    if (prev_dcs_) {
        out.assumption_delta = model_.watch_assumptions(conditions, *prev_dcs_);
    }
    prev_dcs_ = dcs;
    out.dcs = dcs;

    SpeedPlan plan;
    const SpeedPlan* plan_ptr = nullptr;
    if (cfg_.plant_kind == PlantKind::Merge && active_ && !active_->invalidated) {
        plan.begin = active_->traj_begin;
        plan.v = active_->setpoints;
        plan_ptr = &plan;
    }
    WindowDerivationInputs inputs = derivation_inputs_for(cfg_, snap, dcs, horizon_, plan_ptr);
    PerformanceConstraint perf = performance_for(cfg_, snap, dcs);
    out.windows = derive_prescriptive(inputs, std::move(perf), snap.tick,
                                      Interval(snap.tick, std::max(horizon_, snap.tick + 1)),
                                      cfg_.controller.urgency_margin);

    if (cfg_.controller.kind == ControllerKind::Naive) {
        naive_step(snap, dcs, out);
        out.reference = active_;
        out.phase = active_ ? (snap.tick >= active_->start ? "executing" : "approach") : "idle";
        return out;
    }

    if (!fallback_ && !halted_) {
        run_d1(snap, out.windows, out);
        run_d3_scan(snap, dcs, out);
        run_d2_scan(snap, out.windows, dcs, out);
        progress_job(snap, dcs, out);
    }
    issue_actions(snap, dcs, out);

    out.reference = active_;
    if (halted_) out.phase = "halted";
    else if (fallback_) out.phase = "fallback";
    else if (!active_) out.phase = job_ ? "planning" : "idle";
    else if (active_->invalidated) out.phase = "replanning";
    else if (snap.tick < active_->start) out.phase = "approach";
    else if (snap.tick <= active_->stop) out.phase = "executing";
    else out.phase = "done";
    return out;
}

}  // namespace stpaplus
