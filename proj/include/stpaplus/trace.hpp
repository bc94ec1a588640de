#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stpaplus/config.hpp"
#include "stpaplus/controller.hpp"
#include "stpaplus/sim.hpp"

namespace stpaplus {

/// One line per tick. Carries everything the standalone monitor needs to
/// re-derive windows and re-check both constraint families: the filtered
/// world snapshot, the executed input, the controller's decision outputs
/// and its scenario flags.
struct TraceRecord {
    Tick tick{0};
    std::vector<double> state;
    std::vector<double> xdot;
    std::vector<double> y;
    double u_requested{0.0};
    double u_applied{0.0};
    bool saturated{false};
    std::vector<double> params;
    std::vector<TrafficVehicle> traffic;
    bool traffic_visible{true};
    bool traffic_speeds_visible{true};
    ConditionSnapshot conditions;
    bool conditions_visible{true};
    std::vector<bool> assumption_truth;

    // window components, text form
    std::string w_mst, w_nst, w_cst, w_msp, w_nsp, w_csp, w_st, w_sp;
    bool start_conflict{false};
    bool start_doomed{false};

    // decision outputs
    std::string phase;
    bool has_reference{false};
    Tick ref_start{0}, ref_stop{0};
    double ref_target{0.0};
    Tick ref_t1{0}, ref_t2{0}, ref_t3{0};
    Tick ref_epoch{0};
    bool ref_invalidated{false};
    std::vector<double> ref_xhat;
    std::optional<std::vector<double>> xhat_generated;  // set on the generation tick
    bool begin_maneuver{false};
    bool fallback{false};

    std::vector<ScenarioEvent> events;  // the controller's flags this tick
};

struct TraceHeader {
    int version{1};
    std::string plant;
    double dt_s{0.1};
    Tick horizon_ticks{0};
    std::uint64_t seed{0};
};

struct TraceFooter {
    std::string terminal;
    Tick ticks{0};
};

struct Trace {
    TraceHeader header;
    std::vector<TraceRecord> records;
    TraceFooter footer;
};

std::string write_trace(const Trace& trace);
void write_trace_file(const Trace& trace, const std::string& path);

struct TraceReadResult {
    std::optional<Trace> trace;
    std::string error;  // names the first malformed line / missing tick
    int error_line{0};
    bool ok() const { return trace.has_value(); }
};

TraceReadResult read_trace(const std::string& text);
TraceReadResult read_trace_file(const std::string& path);

}  // namespace stpaplus
