#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stpaplus/process.hpp"
#include "stpaplus/windows.hpp"

namespace stpaplus {

struct ParseError {
    std::string path;     // JSON-pointer-style field location
    std::string message;
};

struct ParseErrors {
    std::vector<ParseError> items;
    bool ok() const { return items.empty(); }
    std::string to_text() const;
};

// ---------------------------------------------------------------------------
// Closed predicate-template library for performance-constraint declarations.
// Arbitrary expressions are deliberately not supported: the monitor must be
// able to re-derive every predicate from the config alone.
// ---------------------------------------------------------------------------
struct PcTemplate {
    enum class Kind {
        IntervalBound,      // named state within [lo, hi]
        GapToTraffic,       // min gap to every main-lane vehicle
        DistanceToLaneEnd,  // min remaining distance in the merge lane
        DescentCorridor,    // descent angle within the aggregated gamma set
        CorridorOccupancy,  // clear of scripted occupancy windows
        LinearInequality,   // sum(coeff * state) <= bound
    };
    Kind kind{Kind::IntervalBound};

    std::string state_name;                            // IntervalBound
    ValueRange range;                                  // IntervalBound
    double min_gap_m{0.0};                             // GapToTraffic
    std::optional<ValueRange> entry_speed;             // GapToTraffic
    double min_m{0.0};                                 // DistanceToLaneEnd
    std::vector<std::pair<Tick, Tick>> occupied;       // CorridorOccupancy
    std::vector<std::pair<std::string, double>> terms; // LinearInequality
    double bound{0.0};                                 // LinearInequality

    friend bool operator==(const PcTemplate&, const PcTemplate&) = default;
};

struct BehaviorConfig {
    std::string name;
    PcTemplate pc;
    std::string in_ref;   // empty when the behavior is itself a neighbour
    std::string out_ref;
    friend bool operator==(const BehaviorConfig&, const BehaviorConfig&) = default;
};

// ---------------------------------------------------------------------------
// Constraint-assumption pair declarations
// ---------------------------------------------------------------------------
struct ZoneSpeedLimit {
    ValueRange zone_m;   // position window on the road
    double v_max_mps{0.0};
    friend bool operator==(const ZoneSpeedLimit&, const ZoneSpeedLimit&) = default;
};

struct PairConstraintConfig {
    std::optional<ValueRange> interval;
    std::optional<ZoneSpeedLimit> zone;
    bool idle_exempt{false};
    friend bool operator==(const PairConstraintConfig&, const PairConstraintConfig&) = default;
};

struct PairConfig {
    std::string name;
    ElementKind target{ElementKind::State};
    std::string element;
    PairConstraintConfig constraint;
    std::optional<AssumptionExpr> assume_system;
    std::optional<AssumptionExpr> assume_env;
    Arrow arrow{Arrow::A4_capacity};
    std::string justification;
    friend bool operator==(const PairConfig& a, const PairConfig& b);
};

// ---------------------------------------------------------------------------
// Event script
// ---------------------------------------------------------------------------
struct EventMutation {
    struct SetCondition { std::string var; double value;
        friend bool operator==(const SetCondition&, const SetCondition&) = default; };
    struct SetTraffic { int index; std::optional<double> p_m; std::optional<double> v_mps;
        friend bool operator==(const SetTraffic&, const SetTraffic&) = default; };
    struct AddTraffic { double p_m; double v_mps;
        friend bool operator==(const AddTraffic&, const AddTraffic&) = default; };
    struct SetParam { std::string name; double value;
        friend bool operator==(const SetParam&, const SetParam&) = default; };
    struct NudgeEgo { double ds_m{0.0}; double dv_mps{0.0};
        friend bool operator==(const NudgeEgo&, const NudgeEgo&) = default; };
    struct SetPairInterval { std::string pair; ValueRange interval;
        friend bool operator==(const SetPairInterval&, const SetPairInterval&) = default; };

    std::optional<SetCondition> set_condition;
    std::optional<SetTraffic> set_traffic;
    std::optional<AddTraffic> add_traffic;
    std::optional<SetParam> set_param;
    std::optional<NudgeEgo> nudge_ego;
    std::optional<SetPairInterval> set_pair_interval;

    friend bool operator==(const EventMutation&, const EventMutation&) = default;
};

struct EventConfig {
    Tick at{0};
    double at_s{0.0};
    std::optional<ValueRange> jitter_s;  // seeded tick jitter range
    EventMutation mutation;
    friend bool operator==(const EventConfig&, const EventConfig&) = default;
};

// ---------------------------------------------------------------------------
// Controller / delays / run
// ---------------------------------------------------------------------------
enum class PolicyAction { Replan, Fallback, Halt };

struct PolicyConfig {
    PolicyAction no_decision{PolicyAction::Fallback};
    PolicyAction previously_safe{PolicyAction::Replan};
    PolicyAction unsafe_timing{PolicyAction::Fallback};
    PolicyAction d3_no_decision{PolicyAction::Fallback};
    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

enum class ControllerKind { Stpa, Naive };

struct ControllerConfig {
    ControllerKind kind{ControllerKind::Stpa};
    Tick urgency_margin{20};
    double urgency_margin_s{2.0};
    double eps_pred{0.0};
    bool compensate_reference{true};  // predicted start state for references
    bool compensate_action{true};     // predicted state for action targeting
    bool issue_all{false};            // issue the whole schedule at adoption
    double speed_step_mps{0.5};
    PolicyConfig policy;
    friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

struct DelayConfig {
    Tick d12{0}, d23{0};
    Tick l1{0}, l2{0}, l3{0};
    double d12_s{0}, d23_s{0}, l1_s{0}, l2_s{0}, l3_s{0};
    Tick d13() const { return d12 + d23; }
    friend bool operator==(const DelayConfig&, const DelayConfig&) = default;
};

struct VisibilityConfig {
    bool traffic{true};
    bool traffic_speeds{true};
    bool conditions{true};
    friend bool operator==(const VisibilityConfig&, const VisibilityConfig&) = default;
};

struct RunConfig {
    double dt_s{0.1};
    double horizon_s{60.0};
    Tick horizon_ticks{600};
    std::uint64_t seed{0};
    VisibilityConfig visibility;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct RandomizeConfig {
    int traffic_count_lo{4}, traffic_count_hi{8};
    double gap_lo_m{15.0}, gap_hi_m{60.0};
    double speed_lo_mps{18.0}, speed_hi_mps{22.0};
    double first_position_m{20.0};
    friend bool operator==(const RandomizeConfig&, const RandomizeConfig&) = default;
};

// ---------------------------------------------------------------------------
// Plants
// ---------------------------------------------------------------------------
struct TrafficVehicle {
    double p_m{0.0};
    double v_mps{0.0};
    friend bool operator==(const TrafficVehicle&, const TrafficVehicle&) = default;
};

struct MergePlantConfig {
    double lane_end_m{300.0};
    double d_end_min_m{10.0};
    double d_gap_min_m{8.0};
    double t_merge_s{3.0};
    Tick t_merge_ticks{30};
    double exec_lead_s{0.0};
    Tick exec_lead_ticks{0};
    double ego_s_m{0.0};
    double ego_v_mps{20.0};
    std::vector<TrafficVehicle> traffic;
    friend bool operator==(const MergePlantConfig&, const MergePlantConfig&) = default;
};

struct DescentPlantConfig {
    double altitude_m{120.0};
    double ground_distance_m{600.0};
    double ground_speed_mps{20.0};
    double gamma_init_deg{0.0};
    std::vector<std::pair<double, double>> corridor_occupied_s;
    std::vector<std::pair<Tick, Tick>> corridor_occupied;
    double battery_deadline_s{0.0};  // 0 = none
    Tick battery_deadline_ticks{0};
    friend bool operator==(const DescentPlantConfig&, const DescentPlantConfig&) = default;
};

enum class PlantKind { Merge, Descent };

struct ScenarioConfig {
    PlantKind plant_kind{PlantKind::Merge};
    MergePlantConfig merge;
    DescentPlantConfig descent;
    std::map<std::string, double> conditions;
    std::vector<BehaviorConfig> behaviors;
    std::string intended;
    std::vector<PairConfig> pairs;
    DelayConfig delays;
    ControllerConfig controller;
    RunConfig run;
    std::optional<RandomizeConfig> randomize;
    std::vector<EventConfig> events;

    const BehaviorConfig* find_behavior(const std::string& name) const;
    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct ParseResult {
    std::optional<ScenarioConfig> config;
    ParseErrors errors;
    bool ok() const { return errors.ok() && config.has_value(); }
};

/// Parses and validates a scenario config document. Collects every error it
/// can find (not fail-fast); never throws on arbitrary byte input.
ParseResult parse_config_text(const std::string& text);
ParseResult parse_config_file(const std::string& path);

/// Re-emits a parsed config as a document that parses back to an equal value.
std::string emit_config(const ScenarioConfig& cfg);

/// The machine-readable schema shipped with the tool (also printed by
/// `--schema`).
const char* config_schema_json();

}  // namespace stpaplus
