#include "stpaplus/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace stpaplus {

namespace {

constexpr double kPi = 3.14159265358979323846;

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return lo + unit_draw(rng) * (hi - lo);
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

const char* terminal_name(TerminalKind k) {
    switch (k) {
        case TerminalKind::None: return "none";
        case TerminalKind::Merged: return "merged";
        case TerminalKind::Landed: return "landed";
        case TerminalKind::FallbackComplete: return "fallback_complete";
        case TerminalKind::Hazard: return "hazard";
        case TerminalKind::HorizonEnd: return "horizon_end";
    }
    return "?";
}

Construct make_construct(const ScenarioConfig& cfg) {
    Construct c;
    c.dt = cfg.run.dt_s;
    if (cfg.plant_kind == PlantKind::Merge) {
        c.input_names = {"a"};
        c.state_names = {"s", "v"};
        c.output_names = {"s", "v"};
        c.param_names = {"lane_end_m", "d_end_min_m", "d_gap_min_m"};
        c.params = {cfg.merge.lane_end_m, cfg.merge.d_end_min_m, cfg.merge.d_gap_min_m};
        c.dynamics = [](std::span<const double> u, std::span<const double> x,
                        std::span<const double>, std::span<double> xdot,
                        std::span<double> y) {
            xdot[0] = x[1];
            xdot[1] = u[0];
            y[0] = x[0];
            y[1] = x[1];
        };
        c.input_domain = {{-8.0, 4.0}};
        c.state_domain = {{0.0, cfg.merge.lane_end_m}, {0.0, 40.0}};
    } else {
        c.input_names = {"gamma_cmd"};
        c.state_names = {"gamma", "h", "g"};
        c.output_names = {"gamma", "h", "g"};
        c.param_names = {"ground_speed_mps", "target_offset_m"};
        c.params = {cfg.descent.ground_speed_mps, 0.0};
        c.dynamics = [dt = c.dt](std::span<const double> u, std::span<const double> x,
                                 std::span<const double> p, std::span<double> xdot,
                                 std::span<double> y) {
            // the commanded angle is acquired within one tick
            xdot[0] = (u[0] - x[0]) / dt;
            xdot[1] = -p[0] * std::tan(x[0] * kPi / 180.0);
            xdot[2] = -p[0];
            y[0] = x[0];
            y[1] = x[1];
            y[2] = x[2];
        };
        c.input_domain = {{0.0, 15.0}};
        c.state_domain = {{0.0, 15.0},
                          {0.0, cfg.descent.altitude_m},
                          {0.0, cfg.descent.ground_distance_m}};
    }
    return c;
}

ProcessModel make_process_model(const ScenarioConfig& cfg) {
    ProcessModel model(make_construct(cfg));
    const Construct& c = model.construct();
    for (const auto& p : cfg.pairs) {
        ConstraintAssumptionPair pair;
        pair.name = p.name;
        auto idx = c.find_element(p.target, p.element);
        if (!idx) {
            throw std::invalid_argument("pair '" + p.name + "': unknown element '" +
                                        p.element + "'");
        }
        pair.target = {p.target, *idx};
        if (p.constraint.interval) {
            pair.constraint = interval_set(*p.constraint.interval);
            pair.constraint.idle_exempt = p.constraint.idle_exempt;
        }
        if (p.constraint.zone) {
            ZoneSpeedLimit z = *p.constraint.zone;
            pair.constraint.description =
                "v<=" + std::to_string(z.v_max_mps) + " in " + to_string(z.zone_m) + " m";
            pair.constraint.predicate = [z](const EvalContext& ctx) {
                if (ctx.x.size() < 2) return true;
                if (!z.zone_m.contains(ctx.x[0])) return true;
                return ctx.x[1] <= z.v_max_mps;
            };
        }
        pair.assume_system = p.assume_system;
        pair.assume_env = p.assume_env;
        pair.arrow = p.arrow;
        pair.justification = p.justification;
        model.add_pair(std::move(pair));
    }
    return model;
}

World::World(const ScenarioConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), construct_(make_construct(cfg)) {
    params_ = construct_.params;
    conditions_ = cfg.conditions;
    if (cfg.plant_kind == PlantKind::Merge) {
        state_ = {cfg.merge.ego_s_m, cfg.merge.ego_v_mps};
        traffic_ = cfg.merge.traffic;
    } else {
        state_ = {cfg.descent.gamma_init_deg, cfg.descent.altitude_m,
                  cfg.descent.ground_distance_m};
    }

    std::mt19937_64 rng(seed);
    if (cfg.randomize) {
        const auto& r = *cfg.randomize;
        traffic_.clear();
        auto count = uniform_int(rng, r.traffic_count_lo, r.traffic_count_hi);
        double p = r.first_position_m;
        for (std::int64_t i = 0; i < count; ++i) {
            traffic_.push_back({p, uniform_real(rng, r.speed_lo_mps, r.speed_hi_mps)});
            p += uniform_real(rng, r.gap_lo_m, r.gap_hi_m);
        }
    }

    events_ = cfg.events;
    Tick prev = -1;
    for (auto& ev : events_) {
        if (ev.jitter_s) {
            double dt = cfg.run.dt_s;
            Tick lo = static_cast<Tick>(std::llround(ev.jitter_s->lo / dt));
            Tick hi = static_cast<Tick>(std::llround(ev.jitter_s->hi / dt));
            ev.at += uniform_int(rng, lo, hi);
        }
        ev.at = std::max(ev.at, prev + 1);  // keep the script strictly increasing
        prev = ev.at;
        if (ev.mutation.set_traffic) {
            int idx = ev.mutation.set_traffic->index;
            if (idx < 0 || idx >= static_cast<int>(traffic_.size())) {
                throw std::invalid_argument("event set_traffic index " + std::to_string(idx) +
                                            " out of range for this episode's traffic");
            }
        }
    }
}

void World::apply_events(Tick tick, ProcessModel& model) {
    while (next_event_ < events_.size() && events_[next_event_].at <= tick) {
        const auto& m = events_[next_event_].mutation;
        if (m.set_condition) conditions_[m.set_condition->var] = m.set_condition->value;
        if (m.set_traffic) {
            auto& veh = traffic_[static_cast<std::size_t>(m.set_traffic->index)];
            if (m.set_traffic->p_m) veh.p_m = *m.set_traffic->p_m;
            if (m.set_traffic->v_mps) veh.v_mps = *m.set_traffic->v_mps;
        }
        if (m.add_traffic) traffic_.push_back({m.add_traffic->p_m, m.add_traffic->v_mps});
        if (m.set_param) {
            auto idx = construct_.find_element(ElementKind::Param, m.set_param->name);
            if (idx) params_[*idx] = m.set_param->value;
        }
        if (m.nudge_ego) {
            state_[0] += m.nudge_ego->ds_m;
            if (state_.size() > 1) state_[1] += m.nudge_ego->dv_mps;
        }
        if (m.set_pair_interval) {
            for (std::size_t i = 0; i < model.pairs().size(); ++i) {
                if (model.pairs()[i].name == m.set_pair_interval->pair) {
                    model.set_pair_interval(i, m.set_pair_interval->interval);
                }
            }
        }
        ++next_event_;
    }
}

WorldSnapshot World::observe_full(Tick tick) const {
    WorldSnapshot snap;
    snap.tick = tick;
    snap.plant_kind = cfg_.plant_kind;
    snap.state = state_;
    snap.params = params_;
    snap.traffic = traffic_;
    snap.traffic_visible = true;
    snap.traffic_speeds_visible = true;
    snap.conditions = conditions_;
    snap.conditions_visible = true;
    return snap;
}

WorldSnapshot World::observe(Tick tick) const {
    WorldSnapshot snap = observe_full(tick);
    const auto& vis = cfg_.run.visibility;
    if (!vis.traffic) {
        snap.traffic.clear();
        snap.traffic_visible = false;
        snap.traffic_speeds_visible = false;
    } else if (!vis.traffic_speeds) {
        for (auto& t : snap.traffic) t.v_mps = 0.0;
        snap.traffic_speeds_visible = false;
    }
    if (!vis.conditions) {
        snap.conditions.clear();
        snap.conditions_visible = false;
    }
    return snap;
}

StepRecord World::step(const PlantCommand& cmd, const DescriptiveConstraints& dcs) {
    StepRecord rec;
    const double dt = construct_.dt;

    double u = cmd.u;
    if (cfg_.plant_kind == PlantKind::Merge) {
        if (cmd.fallback_brake && !fallback_engaged_) {
            fallback_engaged_ = true;
            ValueRange ub = dcs.bounds({ElementKind::Input, 0});
            double brake = std::isfinite(ub.lo) ? -ub.lo : 4.0;
            double v = state_[1];
            double remaining = params_[0] - params_[1] - state_[0];
            fallback_margin_ok_ = brake > 0.0 && (v * v) / (2.0 * brake) <= remaining;
        }
        if (fallback_engaged_) {
            ValueRange ub = dcs.bounds({ElementKind::Input, 0});
            u = std::isfinite(ub.lo) ? ub.lo : -4.0;
        }
        if (cmd.begin_maneuver && !merge_started_ && !merge_done_ && !fallback_engaged_) {
            merge_started_ = true;
            merge_started_at_ = tick_;
        }
        rec.u_requested = u;
        ValueRange ub = dcs.bounds({ElementKind::Input, 0});
        double applied = std::clamp(u, ub.lo, ub.hi);
        if (applied != u) rec.saturated = true;
        // never reverse: braking stops exactly at zero speed
        if (state_[1] + dt * applied < 0.0) applied = -state_[1] / dt;
        rec.u_applied = applied;

        std::vector<double> uv{applied};
        rec.xdot.resize(2);
        rec.y.resize(2);
        construct_.dynamics(uv, state_, params_, rec.xdot, rec.y);
        state_[0] += dt * rec.xdot[0];
        state_[1] += dt * rec.xdot[1];
        if (state_[1] < 1e-12) state_[1] = 0.0;
        for (auto& veh : traffic_) veh.p_m += dt * veh.v_mps;
        ++tick_;
        if (merge_started_ && !merge_done_ &&
            tick_ >= *merge_started_at_ + cfg_.merge.t_merge_ticks) {
            merge_done_ = true;
        }
    } else {
        if (cmd.fallback_brake) fallback_engaged_ = true;
        if (cmd.begin_maneuver && !descent_started_) descent_started_ = true;
        if (fallback_engaged_) u = 0.0;  // abort the descent: level off
        rec.u_requested = u;
        ValueRange gb = intersect(dcs.bounds({ElementKind::Input, 0}),
                                  dcs.bounds({ElementKind::State, 0}));
        double applied = u;
        if (descent_started_ && !fallback_engaged_) {
            applied = std::clamp(u, gb.lo, gb.hi);
            if (applied != u) rec.saturated = true;
        }
        std::vector<double> uv{applied};
        rec.u_applied = applied;
        rec.xdot.resize(3);
        rec.y.resize(3);
        construct_.dynamics(uv, state_, params_, rec.xdot, rec.y);
        state_[0] += dt * rec.xdot[0];
        state_[1] += dt * rec.xdot[1];
        state_[2] += dt * rec.xdot[2];
        if (state_[1] <= 1e-6 && descent_started_) {
            state_[1] = 0.0;
            landed_ = true;
        }
        ++tick_;
    }
    return rec;
}

TerminalKind World::terminal(Tick) const {
    if (cfg_.plant_kind == PlantKind::Merge) {
        if (merge_done_) return TerminalKind::Merged;
        if (!merge_done_ && state_[0] > params_[0]) return TerminalKind::Hazard;
        if (fallback_engaged_ && state_[1] == 0.0) return TerminalKind::FallbackComplete;
    } else {
        if (landed_) return TerminalKind::Landed;
        double g_eff = state_[2] + params_[1];
        if (!landed_ && g_eff < -1.0) return TerminalKind::Hazard;
        if (fallback_engaged_ && std::fabs(state_[0]) < 1e-9) {
            return TerminalKind::FallbackComplete;
        }
    }
    return TerminalKind::None;
}

// ---------------------------------------------------------------------------
// Plant adapters
// ---------------------------------------------------------------------------

namespace {

const PcTemplate* intended_pc(const ScenarioConfig& cfg) {
    const BehaviorConfig* b = cfg.find_behavior(cfg.intended);
    return b ? &b->pc : nullptr;
}

const PcTemplate* in_behavior_pc(const ScenarioConfig& cfg) {
    const BehaviorConfig* b = cfg.find_behavior(cfg.intended);
    if (!b) return nullptr;
    const BehaviorConfig* in = cfg.find_behavior(b->in_ref);
    return in ? &in->pc : nullptr;
}

const PcTemplate* out_behavior_pc(const ScenarioConfig& cfg) {
    const BehaviorConfig* b = cfg.find_behavior(cfg.intended);
    if (!b) return nullptr;
    const BehaviorConfig* out = cfg.find_behavior(b->out_ref);
    return out ? &out->pc : nullptr;
}

bool occupied_at(const std::vector<std::pair<Tick, Tick>>& windows, Tick t) {
    for (const auto& [a, b] : windows) {
        if (t >= a && t < b) return true;
    }
    return false;
}

}  // namespace

double projected_min_gap(const ScenarioConfig& cfg, const WorldSnapshot& snap, Tick tick,
                         double s) {
    double best = std::numeric_limits<double>::infinity();
    const double dt = cfg.run.dt_s;
    for (const auto& veh : snap.traffic) {
        double p = veh.p_m + veh.v_mps * dt * static_cast<double>(tick - snap.tick);
        best = std::min(best, std::fabs(p - s));
    }
    return best;
}

double descent_required_gamma(const ScenarioConfig& cfg, const WorldSnapshot& snap,
                              Tick tick) {
    const double dt = cfg.run.dt_s;
    double h = snap.state[1];
    double vg = snap.params[0];
    double g_eff = snap.state[2] + snap.params[1] - vg * dt * static_cast<double>(tick - snap.tick);
    if (g_eff <= 0.0) return 90.0;
    return std::atan2(h, g_eff) * 180.0 / kPi;
}

Tick descent_duration_ticks(const ScenarioConfig& cfg, const WorldSnapshot& snap, Tick tick) {
    const double dt = cfg.run.dt_s;
    double vg = snap.params[0];
    double g_eff = snap.state[2] + snap.params[1] - vg * dt * static_cast<double>(tick - snap.tick);
    if (g_eff <= 0.0 || vg <= 0.0) return 0;
    return static_cast<Tick>(std::llround(g_eff / (vg * dt)));
}

WindowDerivationInputs derivation_inputs_for(const ScenarioConfig& cfg,
                                             const WorldSnapshot& snap,
                                             const DescriptiveConstraints& dcs,
                                             Tick horizon_hi,
                                             const SpeedPlan* plan) {
    WindowDerivationInputs in;
    if (cfg.plant_kind == PlantKind::Merge) {
        const double dt = cfg.run.dt_s;
        const double lane_end = snap.params[0];
        const double t_merge_s = cfg.merge.t_merge_s;
        const Tick t_merge_ticks = cfg.merge.t_merge_ticks;
        const Tick epoch = snap.tick;

        double d_end = snap.params[1];
        if (const PcTemplate* pci = in_behavior_pc(cfg);
            pci && pci->kind == PcTemplate::Kind::DistanceToLaneEnd) {
            d_end = pci->min_m;
        }
        double d_gap = snap.params[2];
        if (const PcTemplate* pc = intended_pc(cfg);
            pc && pc->kind == PcTemplate::Kind::GapToTraffic) {
            d_gap = pc->min_gap_m;
        }
        double d_gap_out = d_gap;
        if (const PcTemplate* pco = out_behavior_pc(cfg);
            pco && pco->kind == PcTemplate::Kind::GapToTraffic) {
            d_gap_out = pco->min_gap_m;
        }

        // ego position and speed per tick, following the plan when given
        auto table = std::make_shared<std::vector<std::pair<double, double>>>();
        {
            Tick end = std::max(horizon_hi + t_merge_ticks + 1, epoch + 1);
            table->reserve(static_cast<std::size_t>(end - epoch));
            double pos = snap.state[0];
            for (Tick t = epoch; t < end; ++t) {
                double speed = plan ? plan->at(t, snap.state[1]) : snap.state[1];
                table->emplace_back(pos, speed);
                pos += speed * dt;
            }
        }
        auto ego_at = [table, epoch](Tick t) {
            std::size_t idx = t <= epoch ? 0
                              : std::min<std::size_t>(static_cast<std::size_t>(t - epoch),
                                                      table->size() - 1);
            return (*table)[idx];
        };
        in.start_kept_safe = [=](Tick t) {
            auto [pos, speed] = ego_at(t);
            return lane_end - (pos + speed * t_merge_s) >= d_end;
        };
        in.start_feasible = [=, &cfg](Tick t) {
            auto [pos, speed] = ego_at(t);
            double completion = pos + speed * t_merge_s;
            return projected_min_gap(cfg, snap, t + t_merge_ticks, completion) >= d_gap;
        };
        in.stop_kept_safe = [=](Tick t) {
            return lane_end - ego_at(t).first >= d_end;
        };
        in.stop_feasible = [=, &cfg](Tick t) {
            return projected_min_gap(cfg, snap, t, ego_at(t).first) >= d_gap_out;
        };
    } else {
        ValueRange gamma_bounds = dcs.bounds({ElementKind::State, 0});
        const Tick deadline = cfg.descent.battery_deadline_ticks;
        const auto& occupied = cfg.descent.corridor_occupied;

        in.start_kept_safe = [&cfg, snap, gamma_bounds](Tick t) {
            double req = descent_required_gamma(cfg, snap, t);
            return req <= gamma_bounds.hi && req < 90.0;
        };
        in.start_feasible = [&cfg, snap, gamma_bounds, &occupied](Tick t) {
            double req = descent_required_gamma(cfg, snap, t);
            return gamma_bounds.contains(req) && !occupied_at(occupied, t) && req < 90.0;
        };
        in.stop_kept_safe = [deadline](Tick t) { return deadline == 0 || t < deadline; };
        in.stop_feasible = [&occupied](Tick t) { return !occupied_at(occupied, t); };
    }
    return in;
}

PerformanceConstraint performance_for(const ScenarioConfig& cfg, const WorldSnapshot& snap,
                                      const DescriptiveConstraints& dcs,
                                      std::optional<Tick> maneuver_start) {
    const PcTemplate* pc = intended_pc(cfg);
    if (cfg.plant_kind == PlantKind::Merge) {
        double d_gap = snap.params[2];
        std::optional<ValueRange> entry;
        if (pc && pc->kind == PcTemplate::Kind::GapToTraffic) {
            d_gap = pc->min_gap_m;
            entry = pc->entry_speed;
        }
        // while the maneuver is ongoing the gap check applies at the
        // projected completion point
        const double dt = cfg.run.dt_s;
        const Tick t_merge_ticks = cfg.merge.t_merge_ticks;
        const std::optional<Tick> start = maneuver_start;
        return {"gap_to_traffic",
                [&cfg, snap, d_gap, entry, dt, t_merge_ticks, start](
                    Tick t, std::span<const double> y) {
                    if (y.size() < 2) return false;
                    Tick completion_tick =
                        start ? std::max(*start + t_merge_ticks, t) : t + t_merge_ticks;
                    double lead_s = static_cast<double>(completion_tick - t) * dt;
                    double completion = y[0] + y[1] * lead_s;
                    if (projected_min_gap(cfg, snap, completion_tick, completion) < d_gap) {
                        return false;
                    }
                    if (entry && !entry->contains(y[1])) return false;
                    return true;
                }};
    }
    ValueRange gamma_bounds = dcs.bounds({ElementKind::State, 0});
    return {"descent_corridor", [gamma_bounds](Tick, std::span<const double> y) {
                return !y.empty() && gamma_bounds.contains(y[0]);
            }};
}

}  // namespace stpaplus
