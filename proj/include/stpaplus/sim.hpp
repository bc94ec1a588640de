#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stpaplus/behavior.hpp"
#include "stpaplus/config.hpp"
#include "stpaplus/process.hpp"

namespace stpaplus {

/// Everything the controller is permitted to see at one tick. Immutable
/// value: two observations of the same tick are identical, and constraint
/// predicates close over it.
struct WorldSnapshot {
    Tick tick{0};
    PlantKind plant_kind{PlantKind::Merge};
    std::vector<double> state;   // construct state vector
    std::vector<double> params;  // construct params (current values)
    std::vector<TrafficVehicle> traffic;
    bool traffic_visible{false};
    bool traffic_speeds_visible{false};
    ConditionSnapshot conditions;
    bool conditions_visible{false};

    double state_value(std::size_t i) const { return state.at(i); }
};

/// Controller output for one tick.
struct PlantCommand {
    double u{0.0};               // acceleration (merge) / angle command (descent)
    bool begin_maneuver{false};  // start the merge / the descent this tick
    bool fallback_brake{false};  // engage the plant's safe maneuver
};

enum class TerminalKind { None, Merged, Landed, FallbackComplete, Hazard, HorizonEnd };
const char* terminal_name(TerminalKind k);

/// What actually happened at one world tick.
struct StepRecord {
    double u_requested{0.0};
    double u_applied{0.0};
    bool saturated{false};  // requested input was outside the aggregated set
    std::vector<double> xdot;
    std::vector<double> y;
};

/// Builds the controlled-process construct for a plant kind.
Construct make_construct(const ScenarioConfig& cfg);

/// Builds the process model: the construct plus every declared
/// constraint-assumption pair.
ProcessModel make_process_model(const ScenarioConfig& cfg);

/// The authoritative discrete-time world: plant, scripted environment and
/// traffic. Deterministic given (config, seed).
class World {
public:
    World(const ScenarioConfig& cfg, std::uint64_t seed);

    /// Applies event mutations scheduled at `tick`. Must run before
    /// observe(tick) so mutations are visible the tick they fire.
    /// Pair edits are applied to `model`.
    void apply_events(Tick tick, ProcessModel& model);

    WorldSnapshot observe(Tick tick) const;
    /// Unfiltered snapshot, for oracles and tests.
    WorldSnapshot observe_full(Tick tick) const;

    /// One explicit first-order tick for every entity. Out-of-set inputs
    /// are saturated to the aggregated input bounds and flagged.
    StepRecord step(const PlantCommand& cmd, const DescriptiveConstraints& dcs);

    TerminalKind terminal(Tick tick) const;

    // -- inspection --
    const std::vector<double>& state() const { return state_; }
    const std::vector<TrafficVehicle>& traffic() const { return traffic_; }
    const ConditionSnapshot& conditions() const { return conditions_; }
    const std::vector<double>& params() const { return params_; }
    bool merge_started() const { return merge_started_; }
    bool merge_done() const { return merge_done_; }
    std::optional<Tick> merge_started_at() const { return merge_started_at_; }
    bool fallback_engaged() const { return fallback_engaged_; }
    /// Resolved event schedule (after seeded jitter), for reporting.
    const std::vector<EventConfig>& events() const { return events_; }
    /// Braking-distance feasibility noted when the fallback engages.
    std::optional<bool> fallback_margin_ok() const { return fallback_margin_ok_; }

private:
    const ScenarioConfig& cfg_;
    Construct construct_;
    std::vector<double> state_;
    std::vector<double> params_;
    std::vector<TrafficVehicle> traffic_;
    ConditionSnapshot conditions_;
    std::vector<EventConfig> events_;
    std::size_t next_event_{0};
    Tick tick_{0};

    bool merge_started_{false};
    bool merge_done_{false};
    std::optional<Tick> merge_started_at_;
    bool descent_started_{false};
    bool landed_{false};
    bool fallback_engaged_{false};
    std::optional<bool> fallback_margin_ok_;
};

// ---------------------------------------------------------------------------
// Plant adapters: turn a snapshot + aggregated sets into the Method-1
// predicate inputs and the intended behavior's performance constraint.
// Everything is a pure function of its arguments, so the monitor re-derives
// the same windows from logged snapshots.
// ---------------------------------------------------------------------------

/// The ego speed profile the window projection should assume. Without one,
/// the snapshot speed persists (a coasting ego). With an active plan the
/// projection follows the plan, so re-derived windows stay consistent with
/// the trajectory the controller actually intends.
struct SpeedPlan {
    Tick begin{0};
    std::vector<double> v;
    double at(Tick t, double fallback) const {
        if (v.empty() || t < begin) return fallback;
        std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(t - begin),
                                                v.size() - 1);
        return v[idx];
    }
};

/// Per-tick derivation predicates for the intended behavior declared in the
/// config. Traffic projections assume the snapshot's speeds persist; the ego
/// follows `plan` when given, its current speed otherwise.
WindowDerivationInputs derivation_inputs_for(const ScenarioConfig& cfg,
                                             const WorldSnapshot& snap,
                                             const DescriptiveConstraints& dcs,
                                             Tick horizon_hi,
                                             const SpeedPlan* plan = nullptr);

/// Y(t): the intended behavior's admissible-output predicate at this epoch.
/// For the merge the ongoing-maneuver gap check applies at the projected
/// completion point; passing the committed start pins that point to
/// start + t_merge, otherwise a full merge duration ahead is assumed.
PerformanceConstraint performance_for(const ScenarioConfig& cfg, const WorldSnapshot& snap,
                                      const DescriptiveConstraints& dcs,
                                      std::optional<Tick> maneuver_start = std::nullopt);

/// Smallest gap between position `s` and any projected vehicle at `tick`,
/// projecting from the snapshot's epoch. Infinite when no traffic is known.
double projected_min_gap(const ScenarioConfig& cfg, const WorldSnapshot& snap, Tick tick,
                         double s);

/// Required constant descent angle (degrees) to reach the pad from the
/// snapshot state at `tick` under constant closure speed.
double descent_required_gamma(const ScenarioConfig& cfg, const WorldSnapshot& snap, Tick tick);

/// Expected descent duration in ticks when starting at `tick`.
Tick descent_duration_ticks(const ScenarioConfig& cfg, const WorldSnapshot& snap, Tick tick);

}  // namespace stpaplus
