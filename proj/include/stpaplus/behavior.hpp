#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stpaplus/windows.hpp"

namespace stpaplus {

/// One sample of an output behavior's trajectory at a tick.
using OutputSample = std::vector<double>;

/// Time-indexed admissible-output predicate for an output behavior.
/// `admissible` must be pure for a fixed constraint epoch: same (t, y)
/// always yields the same answer.
struct PerformanceConstraint {
    std::string name;
    std::function<bool(Tick, std::span<const double>)> admissible;
};

/// An output behavior together with its temporal neighbours. The in-behavior
/// is the behavior immediately before it (source of the must-start window),
/// the out-behavior the one immediately after (source of the stop windows).
struct BehaviorSpec {
    std::string name;
    PerformanceConstraint pc;
    const BehaviorSpec* in_behavior{nullptr};
    const BehaviorSpec* out_behavior{nullptr};
};

/// Per-tick predicates from which the start/stop windows are derived.
/// The plant adapter builds these from a world snapshot:
///  - start_kept_safe(t): transitioning at t (or later... up to t) still
///    leaves the in-behavior's constraint satisfied; its expiry yields the
///    must-start window.
///  - start_feasible(t): the intended behavior, started at t, can satisfy
///    its own constraint throughout; its negation is the must-not-start set.
///  - stop_kept_safe / stop_feasible: the same pair for the stop time,
///    driven by the intended behavior's constraint and the out-behavior's.
struct WindowDerivationInputs {
    std::function<bool(Tick)> start_kept_safe;
    std::function<bool(Tick)> start_feasible;
    std::function<bool(Tick)> stop_kept_safe;
    std::function<bool(Tick)> stop_feasible;
};

struct MustWindowResult {
    WindowSet window;
    /// Set when the predicate is false from the first tick on: the
    /// transition deadline has already lapsed.
    bool doomed{false};
};

/// Derives a must-transition window from a safety-lapse predicate.
/// The window ends at the first tick where keeping safe fails and extends
/// `urgency_margin` ticks backwards (clipped to the horizon). A predicate
/// that never fails within the horizon yields the empty set.
/// Throws std::invalid_argument on an empty horizon or margin < 1.
MustWindowResult derive_must_window(const std::function<bool(Tick)>& kept_safe,
                                    const Interval& horizon, Tick urgency_margin);

/// The must-not window is the exact image of the infeasible ticks.
WindowSet derive_must_not_window(const std::function<bool(Tick)>& feasible,
                                 const Interval& horizon);

/// Window components plus the final feasible sets for one behavior epoch.
struct PrescriptiveConstraints {
    PerformanceConstraint performance;  // Y(t)
    WindowSet start_set;                // ST
    WindowSet stop_set;                 // SP
    Tick derivation_epoch{0};

    WindowSet must_start, must_not_start, can_start;
    WindowSet must_stop, must_not_stop, can_stop;

    /// must-start entirely inside must-not-start (and non-empty).
    bool start_conflict{false};
    /// safety already lapsed before the first tick of the horizon.
    bool start_doomed{false};
    bool stop_conflict{false};
    bool stop_doomed{false};

    bool has_conflict() const {
        return start_conflict || start_doomed || stop_conflict || stop_doomed;
    }
};

/// Full Method-1 derivation for one epoch. The feasible start set is
/// (must ∪ can) ∩ ¬must-not — a boundary tick shared between a permissive
/// and a prohibitive window resolves to prohibitive. The can-window horizon
/// is [now, sup(must)) when a must window exists, otherwise [now, horizon.hi).
PrescriptiveConstraints derive_prescriptive(const WindowDerivationInputs& inputs,
                                            PerformanceConstraint performance,
                                            Tick now, const Interval& horizon,
                                            Tick urgency_margin);

/// An executed behavior: start/stop ticks plus one output sample per tick
/// of [start, stop] inclusive.
struct BehaviorTrace {
    Tick start{0};
    Tick stop{0};
    std::vector<OutputSample> samples;
};

struct ValidationViolation {
    enum class Clause { StartWindow, StopWindow, Performance };
    Clause clause;
    Tick tick;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationViolation> violations;
    bool ok() const { return violations.empty(); }
    /// One violation per line: clause id, tick, detail.
    std::string to_text() const;
};

/// Checks an executed behavior against its prescriptive constraints:
/// start in the start set, stop in the stop set, every sample admissible.
/// At most one violation per clause is reported, carrying the first
/// offending tick. Throws std::invalid_argument when stop <= start or the
/// sample count does not cover [start, stop].
ValidationReport validate_execution(const BehaviorTrace& trace,
                                    const PrescriptiveConstraints& pcs);

}  // namespace stpaplus
