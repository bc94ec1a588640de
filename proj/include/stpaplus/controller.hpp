#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stpaplus/behavior.hpp"
#include "stpaplus/process.hpp"
#include "stpaplus/sim.hpp"

namespace stpaplus {

enum class Stage { D1, D2, D3 };
enum class ScenarioKind { NoDecision, PreviouslySafe, UnsafeTiming, TimeCoupling };

const char* stage_name(Stage s);
const char* scenario_kind_name(ScenarioKind k);
std::optional<Stage> stage_from_name(const std::string& s);
std::optional<ScenarioKind> scenario_kind_from_name(const std::string& s);

/// A detected unsafe scenario. Time coupling cannot occur while deciding the
/// prescriptive constraints, so (D1, TimeCoupling) is rejected at
/// construction; the algorithm-is-wrong scenario has no representation at
/// all — it is out of scope for the whole pipeline.
struct ScenarioEvent {
    Tick tick{0};
    Stage stage{Stage::D1};
    ScenarioKind kind{ScenarioKind::NoDecision};
    std::string cause;

    static ScenarioEvent make(Tick tick, Stage stage, ScenarioKind kind, std::string cause);
    friend bool operator==(const ScenarioEvent& a, const ScenarioEvent& b) {
        return a.tick == b.tick && a.stage == b.stage && a.kind == b.kind;
    }
};

/// Pipeline timing: t1 = reference generation starts, t2 = action
/// generation starts, t3 = the process starts seeking the reference.
/// d12 = t2-t1 and d23 = t3-t2 are the inter-epoch delays (covering the
/// stage compute latencies l2, l3); l1..l3 are the per-stage compute costs
/// used in the too-late arithmetic.
struct DelayProfile {
    Tick d12{0}, d23{0};
    Tick l1{0}, l2{0}, l3{0};
    Tick d13() const { return d12 + d23; }
    static DelayProfile from(const DelayConfig& c) { return {c.d12, c.d23, c.l1, c.l2, c.l3}; }
};

/// A certified plan: start/stop commitments plus the per-tick setpoint
/// trajectory the action stage tracks. Setpoints are target speed (merge)
/// or commanded angle (descent) and cover [traj_begin, stop].
struct ControlReference {
    Tick start{0};
    Tick stop{0};
    double target_value{0.0};
    std::vector<double> setpoints;
    Tick traj_begin{0};
    std::vector<double> predicted_start_state;  // state expected at t3
    Tick t1{0}, t2{0}, t3{0};
    Tick epoch{0};  // window epoch the commitments were checked against
    bool invalidated{false};

    double setpoint_at(Tick t) const;
};

/// Forward-integrates the construct for `d` ticks from `x_obs`, applying
/// the scheduled in-flight controls and `fallthrough` where no control was
/// issued. Inputs are clamped to the aggregated input bounds exactly like
/// the plant applies them. Rejects d < 0.
std::vector<double> predict_state(
    const Construct& construct, std::vector<double> x_obs, Tick from_tick, Tick d,
    const std::map<Tick, double>& in_flight,
    const std::function<double(Tick, const std::vector<double>&)>& fallthrough,
    const DescriptiveConstraints& dcs);

/// Everything the episode loop and the trace need from one controller tick.
struct ControllerOutput {
    PlantCommand command;
    std::vector<ScenarioEvent> events;
    PrescriptiveConstraints windows;             // this tick's derivation
    DescriptiveConstraints dcs;                  // this tick's aggregation
    AssumptionDelta assumption_delta;
    std::optional<ControlReference> reference;   // active after this tick
    std::optional<std::vector<double>> xhat_t3;  // set on reference generation
    std::string phase;
};

/// The three-decision pipeline. Deciding the prescriptive constraints runs
/// every tick with epoch diffing; reference regeneration and action
/// issuance respect the delay profile. All responses to detected scenarios
/// follow the configured policy and every decision is deterministic in
/// (config, snapshot stream).
class Controller {
public:
    Controller(const ScenarioConfig& cfg, ProcessModel& model);

    ControllerOutput step(const WorldSnapshot& snap);

    bool fallback_engaged() const { return fallback_; }
    bool halted() const { return halted_; }
    const std::map<Tick, double>& issued() const { return issued_; }

private:
    struct PipelineJob {
        Tick obs_tick{0};
        Tick t1{0}, t2{0}, t3{0};
        PrescriptiveConstraints pcs;
        bool replan{false};
        std::optional<ControlReference> pending;
    };

    // decision stages
    void run_d1(const WorldSnapshot& snap, const PrescriptiveConstraints& fresh,
                ControllerOutput& out);
    void run_d2_scan(const WorldSnapshot& snap, const PrescriptiveConstraints& fresh,
                     const DescriptiveConstraints& dcs, ControllerOutput& out);
    void run_d3_scan(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                     ControllerOutput& out);
    void progress_job(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                      ControllerOutput& out);
    void issue_actions(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                       ControllerOutput& out);
    void naive_step(const WorldSnapshot& snap, const DescriptiveConstraints& dcs,
                    ControllerOutput& out);

    std::optional<ControlReference> find_reference(const PrescriptiveConstraints& pcs,
                                                   const WorldSnapshot& snap,
                                                   const DescriptiveConstraints& dcs,
                                                   const std::vector<double>& xhat, Tick t1,
                                                   Tick t2, Tick t3) const;
    bool plan_feasible(const ControlReference& ref, const WorldSnapshot& snap,
                       const DescriptiveConstraints& dcs, const std::vector<double>& from,
                       Tick from_tick, std::string* why = nullptr) const;
    std::optional<ControlReference> plan_replacement(const WorldSnapshot& snap,
                                                     const DescriptiveConstraints& dcs,
                                                     const PrescriptiveConstraints& pcs,
                                                     Tick t1, Tick t2, Tick t3,
                                                     ControllerOutput& out);

    double default_control(Tick t, const std::vector<double>& state) const;
    double tracking_control(Tick plant_tick, const WorldSnapshot& snap,
                            const DescriptiveConstraints& dcs) const;
    void apply_policy(PolicyAction action, ControllerOutput& out);

    const ScenarioConfig& cfg_;
    ProcessModel& model_;
    DelayProfile delays_;
    Tick horizon_;

    std::optional<PipelineJob> job_;
    std::optional<ControlReference> active_;
    std::map<Tick, double> issued_;
    std::optional<DescriptiveConstraints> prev_dcs_;
    bool fallback_{false};
    bool halted_{false};
    bool want_replan_{false};
    bool naive_planned_{false};
    bool nd_latched_{false};
    bool ut_latched_{false};
};

}  // namespace stpaplus
