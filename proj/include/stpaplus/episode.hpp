#pragma once

#include <map>
#include <optional>
#include <string>

#include "stpaplus/config.hpp"
#include "stpaplus/monitor.hpp"
#include "stpaplus/trace.hpp"

namespace stpaplus {

struct EpisodeSummary {
    TerminalKind terminal{TerminalKind::HorizonEnd};
    Tick ticks{0};
    std::vector<ScenarioEvent> events;
    int saturations{0};
    bool fallback_engaged{false};
    std::optional<bool> fallback_margin_ok;
    std::optional<Tick> maneuver_started_at;
    std::vector<double> final_state;
    /// infinity-norm gap between the stored start-state prediction and the
    /// realized state at t3, one entry per adopted reference
    std::vector<double> prediction_gap;
    /// infinity-norm gap between planned and realized state at maneuver onset
    std::optional<double> onset_plan_error;

    bool has_event(Stage stage, ScenarioKind kind) const;
    std::string to_text() const;
};

struct EpisodeResult {
    Trace trace;
    EpisodeSummary summary;
    MonitorVerdict verdict;
};

/// Runs one full episode: tick loop over plant, controller and event script,
/// trace assembly, then the standalone monitor over the finished trace.
/// Config problems that only surface at world construction (for example a
/// scripted traffic index out of range after randomization) throw
/// std::invalid_argument before the first tick.
EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace stpaplus
