#include "stpaplus/behavior.hpp"

#include <stdexcept>

namespace stpaplus {

MustWindowResult derive_must_window(const std::function<bool(Tick)>& kept_safe,
                                    const Interval& horizon, Tick urgency_margin) {
    if (urgency_margin < 1) {
        throw std::invalid_argument("derive_must_window: urgency margin must be >= 1 tick");
    }
    MustWindowResult out;
    Tick expiry = horizon.hi;
    bool found = false;
    for (Tick t = horizon.lo; t < horizon.hi; ++t) {
        if (!kept_safe(t)) {
            expiry = t;
            found = true;
            break;
        }
    }
    if (!found) {
        return out;  // never expires within the horizon: no must window
    }
    if (expiry == horizon.lo) {
        out.doomed = true;  // already lapsed
        return out;
    }
    out.window = WindowSet::span(std::max(horizon.lo, expiry - urgency_margin), expiry);
    return out;
}

WindowSet derive_must_not_window(const std::function<bool(Tick)>& feasible,
                                 const Interval& horizon) {
    std::vector<std::pair<Tick, Tick>> raw;
    Tick run_start = horizon.lo;
    bool in_run = false;
    for (Tick t = horizon.lo; t < horizon.hi; ++t) {
        bool bad = !feasible(t);
        if (bad && !in_run) {
            run_start = t;
            in_run = true;
        } else if (!bad && in_run) {
            raw.emplace_back(run_start, t);
            in_run = false;
        }
    }
    if (in_run) raw.emplace_back(run_start, horizon.hi);
    return WindowSet::from_pieces(std::move(raw));
}

namespace {

struct SideWindows {
    WindowSet must, must_not, can, feasible;
    bool conflict{false};
    bool doomed{false};
};

SideWindows derive_side(const std::function<bool(Tick)>& kept_safe,
                        const std::function<bool(Tick)>& feasible_pred,
                        Tick now, const Interval& horizon, Tick margin) {
    SideWindows side;
    auto must = derive_must_window(kept_safe, horizon, margin);
    side.must = must.window;
    side.doomed = must.doomed;
    side.must_not = derive_must_not_window(feasible_pred, horizon);

    // The can-window horizon runs until the must window expires; with no
    // must window the whole remaining horizon is open.
    Tick t_sup = side.must.sup().value_or(horizon.hi);
    WindowSet open = WindowSet::span(now, t_sup);
    side.can = can_window(side.must, side.must_not, open);

    side.conflict = !side.must.empty() && is_subset(side.must, side.must_not);
    side.feasible = set_difference(set_union(side.must, side.can), side.must_not);
    return side;
}

}  // namespace

PrescriptiveConstraints derive_prescriptive(const WindowDerivationInputs& inputs,
                                            PerformanceConstraint performance,
                                            Tick now, const Interval& horizon,
                                            Tick urgency_margin) {
    if (now < horizon.lo || now >= horizon.hi) {
        throw std::invalid_argument("derive_prescriptive: now outside horizon");
    }
    PrescriptiveConstraints pcs;
    pcs.performance = std::move(performance);
    pcs.derivation_epoch = now;

    SideWindows start = derive_side(inputs.start_kept_safe, inputs.start_feasible,
                                    now, horizon, urgency_margin);
    pcs.must_start = start.must;
    pcs.must_not_start = start.must_not;
    pcs.can_start = start.can;
    pcs.start_set = start.feasible;
    pcs.start_conflict = start.conflict;
    pcs.start_doomed = start.doomed;

    SideWindows stop = derive_side(inputs.stop_kept_safe, inputs.stop_feasible,
                                   now, horizon, urgency_margin);
    pcs.must_stop = stop.must;
    pcs.must_not_stop = stop.must_not;
    pcs.can_stop = stop.can;
    pcs.stop_set = stop.feasible;
    pcs.stop_conflict = stop.conflict;
    pcs.stop_doomed = stop.doomed;
    return pcs;
}

std::string ValidationReport::to_text() const {
    std::string out;
    for (const auto& v : violations) {
        switch (v.clause) {
            case ValidationViolation::Clause::StartWindow: out += "start_window"; break;
            case ValidationViolation::Clause::StopWindow: out += "stop_window"; break;
            case ValidationViolation::Clause::Performance: out += "performance"; break;
        }
        out += " tick=" + std::to_string(v.tick) + ' ' + v.detail + '\n';
    }
    return out;
}

ValidationReport validate_execution(const BehaviorTrace& trace,
                                    const PrescriptiveConstraints& pcs) {
    if (trace.stop <= trace.start) {
        throw std::invalid_argument("validate_execution: stop must be after start");
    }
    const auto expected = static_cast<std::size_t>(trace.stop - trace.start + 1);
    if (trace.samples.size() != expected) {
        throw std::invalid_argument("validate_execution: need one sample per tick of [start, stop]");
    }

    ValidationReport report;
    if (!pcs.start_set.contains(trace.start)) {
        std::string detail = "start " + std::to_string(trace.start) + " outside ST=" +
                             pcs.start_set.to_string();
        if (pcs.must_not_start.contains(trace.start)) {
            detail += " (inside must-not-start " + pcs.must_not_start.to_string() + ")";
        }
        report.violations.push_back({ValidationViolation::Clause::StartWindow,
                                     trace.start, std::move(detail)});
    }
    if (!pcs.stop_set.contains(trace.stop)) {
        std::string detail = "stop " + std::to_string(trace.stop) + " outside SP=" +
                             pcs.stop_set.to_string();
        if (pcs.must_not_stop.contains(trace.stop)) {
            detail += " (inside must-not-stop " + pcs.must_not_stop.to_string() + ")";
        }
        report.violations.push_back({ValidationViolation::Clause::StopWindow,
                                     trace.stop, std::move(detail)});
    }
    for (Tick t = trace.start; t <= trace.stop; ++t) {
        const auto& sample = trace.samples[static_cast<std::size_t>(t - trace.start)];
        if (!pcs.performance.admissible(t, sample)) {
            std::string observed = sample.empty() ? "<empty>" : std::to_string(sample[0]);
            report.violations.push_back({ValidationViolation::Clause::Performance, t,
                                         "observed y=" + observed + " outside bound [" +
                                             pcs.performance.name + "]"});
            break;  // first offending tick only
        }
    }
    return report;
}

}  // namespace stpaplus
