#pragma once

#include <string>
#include <vector>

#include "stpaplus/config.hpp"
#include "stpaplus/controller.hpp"
#include "stpaplus/trace.hpp"

namespace stpaplus {

/// The standalone verdict over a recorded trace: unsafe-scenario events per
/// stage, behavior-rule violations (start/stop windows and per-tick
/// admissible outputs), process-rule violations (tuple outside the
/// aggregated sets), and assumption breaks. A pure function of
/// (trace, config): repeated calls agree exactly.
struct MonitorVerdict {
    struct Violation {
        std::string clause;
        Tick tick{0};
        std::string detail;
    };

    std::vector<ScenarioEvent> events;
    std::vector<Violation> behavior_violations;  // the prescriptive rule
    std::vector<Violation> process_violations;   // the descriptive rule
    std::vector<std::pair<Tick, std::string>> assumption_breaks;

    bool clean() const {
        return events.empty() && behavior_violations.empty() && process_violations.empty() &&
               assumption_breaks.empty();
    }
    std::string to_text() const;
};

/// Detects and labels the unsafe-scenario taxonomy over a recorded trace by
/// re-running the decision rules against re-derived windows and sets — the
/// controller's own logged flags are never consulted. Throws
/// std::invalid_argument on a malformed trace, naming the first bad record.
MonitorVerdict classify(const Trace& trace, const ScenarioConfig& cfg);

/// Pointwise per-tick verification of the behavior rule (start/stop window
/// membership plus admissible outputs over the executed maneuver) and the
/// process rule (every logged tuple inside the aggregated sets while the
/// assumptions hold), plus assumption-break extraction.
MonitorVerdict replay_check(const Trace& trace, const ScenarioConfig& cfg);

/// classify + replay_check merged: the full standalone monitor.
MonitorVerdict monitor_trace(const Trace& trace, const ScenarioConfig& cfg);

}  // namespace stpaplus
