#include "stpaplus/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace stpaplus {

using nlohmann::ordered_json;

std::string ParseErrors::to_text() const {
    std::string out;
    for (const auto& e : items) {
        out += (e.path.empty() ? std::string("<document>") : e.path) + ": " + e.message + '\n';
    }
    return out;
}

bool operator==(const PairConfig& a, const PairConfig& b) {
    auto expr_eq = [](const std::optional<AssumptionExpr>& x,
                      const std::optional<AssumptionExpr>& y) {
        if (x.has_value() != y.has_value()) return false;
        if (!x) return true;
        return x->var == y->var && x->op == y->op && x->bound == y->bound;
    };
    return a.name == b.name && a.target == b.target && a.element == b.element &&
           a.constraint == b.constraint && expr_eq(a.assume_system, b.assume_system) &&
           expr_eq(a.assume_env, b.assume_env) && a.arrow == b.arrow &&
           a.justification == b.justification;
}

const BehaviorConfig* ScenarioConfig::find_behavior(const std::string& name) const {
    for (const auto& b : behaviors) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

namespace {

// ---------------------------------------------------------------------------
// Exact duration handling. Config durations are decimal seconds with at most
// nine fractional digits; they are mapped onto a nanosecond lattice and must
// divide exactly into ticks. Mismatches are errors, never silent rounding.
// ---------------------------------------------------------------------------
constexpr double kMaxDurationS = 1.0e5;

std::optional<std::int64_t> to_nanos(double seconds) {
    if (!std::isfinite(seconds) || std::fabs(seconds) > kMaxDurationS) return std::nullopt;
    double scaled = seconds * 1e9;
    double rounded = std::nearbyint(scaled);
    if (std::fabs(scaled - rounded) > 0.01) return std::nullopt;  // off the lattice
    return static_cast<std::int64_t>(rounded);
}

// ---------------------------------------------------------------------------
// Error-collecting JSON walker
// ---------------------------------------------------------------------------
class Ctx {
public:
    explicit Ctx(ParseErrors& errors) : errors_(errors) {}

    void error(const std::string& path, const std::string& message) {
        errors_.items.push_back({path, message});
    }

    bool require_object(const ordered_json& j, const std::string& path) {
        if (!j.is_object()) {
            error(path, "expected an object");
            return false;
        }
        return true;
    }

    void check_keys(const ordered_json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
        if (!j.is_object()) return;
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = std::any_of(allowed.begin(), allowed.end(),
                                     [&](const char* k) { return it.key() == k; });
            if (!known) error(path + '/' + it.key(), "unknown key");
        }
    }

    std::optional<double> num(const ordered_json& j, const std::string& path,
                              const char* key, std::optional<double> fallback) {
        if (!j.is_object() || !j.contains(key)) {
            if (!fallback) error(path + '/' + key, "missing required number");
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_number()) {
            error(path + '/' + key, "expected a number");
            return fallback;
        }
        return v.get<double>();
    }

    std::optional<std::int64_t> integer(const ordered_json& j, const std::string& path,
                                        const char* key, std::optional<std::int64_t> fallback) {
        if (!j.is_object() || !j.contains(key)) {
            if (!fallback) error(path + '/' + key, "missing required integer");
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
            error(path + '/' + key, "expected an integer");
            return fallback;
        }
        return v.get<std::int64_t>();
    }

    std::optional<std::string> str(const ordered_json& j, const std::string& path,
                                   const char* key, std::optional<std::string> fallback) {
        if (!j.is_object() || !j.contains(key)) {
            if (!fallback) error(path + '/' + key, "missing required string");
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_string()) {
            error(path + '/' + key, "expected a string");
            return fallback;
        }
        return v.get<std::string>();
    }

    std::optional<bool> boolean(const ordered_json& j, const std::string& path,
                                const char* key, std::optional<bool> fallback) {
        if (!j.is_object() || !j.contains(key)) {
            if (!fallback) error(path + '/' + key, "missing required boolean");
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_boolean()) {
            error(path + '/' + key, "expected a boolean");
            return fallback;
        }
        return v.get<bool>();
    }

    std::optional<ValueRange> range(const ordered_json& j, const std::string& path,
                                    const char* key, std::optional<ValueRange> fallback) {
        if (!j.is_object() || !j.contains(key)) {
            if (!fallback) error(path + '/' + key, "missing required [lo, hi] pair");
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            error(path + '/' + key, "expected [lo, hi]");
            return fallback;
        }
        ValueRange r{v[0].get<double>(), v[1].get<double>()};
        if (r.lo > r.hi) {
            error(path + '/' + key, "lo exceeds hi");
            return fallback;
        }
        return r;
    }

    /// Duration in seconds, converted exactly to ticks of `dt_nanos`.
    std::optional<Tick> ticks(const ordered_json& j, const std::string& path, const char* key,
                              std::int64_t dt_nanos, std::optional<double> fallback_s,
                              double* seconds_out = nullptr) {
        auto s = num(j, path, key, fallback_s);
        if (!s) return std::nullopt;
        if (seconds_out) *seconds_out = *s;
        auto ns = to_nanos(*s);
        if (!ns) {
            error(path + '/' + key, "duration is not a decimal on the nanosecond lattice");
            return std::nullopt;
        }
        if (*ns < 0) {
            error(path + '/' + key, "duration must be non-negative");
            return std::nullopt;
        }
        if (dt_nanos <= 0) return std::nullopt;  // dt itself was invalid
        if (*ns % dt_nanos != 0) {
            std::ostringstream os;
            os << *s << " s is not an integer multiple of dt";
            error(path + '/' + key, os.str());
            return std::nullopt;
        }
        return *ns / dt_nanos;
    }

private:
    ParseErrors& errors_;
};

std::optional<AssumptionExpr> parse_assumption(Ctx& ctx, const ordered_json& j,
                                               const std::string& path, const char* key,
                                               bool* present) {
    *present = false;
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() == "na") return std::nullopt;
        ctx.error(path + '/' + key, "expected \"na\" or a comparison object");
        return std::nullopt;
    }
    if (!v.is_object()) {
        ctx.error(path + '/' + key, "expected \"na\" or a comparison object");
        return std::nullopt;
    }
    ctx.check_keys(v, path + '/' + key, {"var", "is", "ge", "le"});
    AssumptionExpr expr;
    auto var = ctx.str(v, path + '/' + key, "var", std::nullopt);
    if (!var) return std::nullopt;
    expr.var = *var;
    int forms = 0;
    if (v.contains("is")) {
        ++forms;
        if (!v.at("is").is_boolean()) {
            ctx.error(path + '/' + key + "/is", "expected a boolean");
            return std::nullopt;
        }
        expr.op = v.at("is").get<bool>() ? AssumptionExpr::Op::IsTrue
                                         : AssumptionExpr::Op::IsFalse;
    }
    if (v.contains("ge")) {
        ++forms;
        auto b = ctx.num(v, path + '/' + key, "ge", std::nullopt);
        if (!b) return std::nullopt;
        expr.op = AssumptionExpr::Op::Ge;
        expr.bound = *b;
    }
    if (v.contains("le")) {
        ++forms;
        auto b = ctx.num(v, path + '/' + key, "le", std::nullopt);
        if (!b) return std::nullopt;
        expr.op = AssumptionExpr::Op::Le;
        expr.bound = *b;
    }
    if (forms != 1) {
        ctx.error(path + '/' + key, "exactly one of is/ge/le required");
        return std::nullopt;
    }
    *present = true;
    return expr;
}

PcTemplate parse_pc(Ctx& ctx, const ordered_json& j, const std::string& path,
                    std::int64_t dt_nanos) {
    PcTemplate pc;
    if (!ctx.require_object(j, path)) return pc;
    auto kind = ctx.str(j, path, "template", std::nullopt);
    if (!kind) return pc;
    if (*kind == "interval_bound") {
        ctx.check_keys(j, path, {"template", "state", "range"});
        pc.kind = PcTemplate::Kind::IntervalBound;
        pc.state_name = ctx.str(j, path, "state", std::nullopt).value_or("");
        pc.range = ctx.range(j, path, "range", std::nullopt).value_or(ValueRange{});
    } else if (*kind == "gap_to_traffic") {
        ctx.check_keys(j, path, {"template", "min_gap_m", "entry_speed_mps"});
        pc.kind = PcTemplate::Kind::GapToTraffic;
        pc.min_gap_m = ctx.num(j, path, "min_gap_m", std::nullopt).value_or(0.0);
        if (j.contains("entry_speed_mps")) {
            pc.entry_speed = ctx.range(j, path, "entry_speed_mps", std::nullopt);
        }
    } else if (*kind == "distance_to_lane_end") {
        ctx.check_keys(j, path, {"template", "min_m"});
        pc.kind = PcTemplate::Kind::DistanceToLaneEnd;
        pc.min_m = ctx.num(j, path, "min_m", std::nullopt).value_or(0.0);
    } else if (*kind == "descent_corridor") {
        ctx.check_keys(j, path, {"template"});
        pc.kind = PcTemplate::Kind::DescentCorridor;
    } else if (*kind == "corridor_occupancy") {
        ctx.check_keys(j, path, {"template", "occupied_s"});
        pc.kind = PcTemplate::Kind::CorridorOccupancy;
        if (j.contains("occupied_s") && j.at("occupied_s").is_array()) {
            int i = 0;
            for (const auto& w : j.at("occupied_s")) {
                std::string wpath = path + "/occupied_s/" + std::to_string(i++);
                if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
                    ctx.error(wpath, "expected [start_s, end_s]");
                    continue;
                }
                ordered_json tmp{{"a", w[0]}, {"b", w[1]}};
                auto a = ctx.ticks(tmp, wpath, "a", dt_nanos, std::nullopt);
                auto b = ctx.ticks(tmp, wpath, "b", dt_nanos, std::nullopt);
                if (a && b) pc.occupied.emplace_back(*a, *b);
            }
        } else {
            ctx.error(path + "/occupied_s", "missing occupancy windows");
        }
    } else if (*kind == "linear_inequality") {
        ctx.check_keys(j, path, {"template", "terms", "bound"});
        pc.kind = PcTemplate::Kind::LinearInequality;
        pc.bound = ctx.num(j, path, "bound", std::nullopt).value_or(0.0);
        if (j.contains("terms") && j.at("terms").is_array()) {
            int i = 0;
            for (const auto& t : j.at("terms")) {
                std::string tpath = path + "/terms/" + std::to_string(i++);
                if (!t.is_object()) {
                    ctx.error(tpath, "expected {state, coeff}");
                    continue;
                }
                ctx.check_keys(t, tpath, {"state", "coeff"});
                auto s = ctx.str(t, tpath, "state", std::nullopt);
                auto c = ctx.num(t, tpath, "coeff", std::nullopt);
                if (s && c) pc.terms.emplace_back(*s, *c);
            }
        } else {
            ctx.error(path + "/terms", "missing terms");
        }
    } else {
        ctx.error(path + "/template", "unknown predicate template '" + *kind + "'");
    }
    return pc;
}

PolicyAction parse_policy_action(Ctx& ctx, const ordered_json& j, const std::string& path,
                                 const char* key, PolicyAction fallback) {
    auto s = ctx.str(j, path, key, std::string("?"));
    if (!s || *s == "?") return fallback;
    if (*s == "replan") return PolicyAction::Replan;
    if (*s == "fallback") return PolicyAction::Fallback;
    if (*s == "halt") return PolicyAction::Halt;
    ctx.error(path + '/' + key, "expected replan|fallback|halt");
    return fallback;
}

const char* policy_action_name(PolicyAction a) {
    switch (a) {
        case PolicyAction::Replan: return "replan";
        case PolicyAction::Fallback: return "fallback";
        case PolicyAction::Halt: return "halt";
    }
    return "?";
}

// element names available per plant kind, mirroring the sim-side constructs
struct ElementTable {
    std::vector<std::string> inputs, states, outputs, params;
};

ElementTable element_table(PlantKind kind) {
    if (kind == PlantKind::Merge) {
        return {{"a"}, {"s", "v"}, {"s", "v"}, {"lane_end_m", "d_end_min_m", "d_gap_min_m"}};
    }
    return {{"gamma_cmd"}, {"gamma", "h", "g"}, {"gamma", "h", "g"},
            {"ground_speed_mps", "target_offset_m"}};
}

std::optional<std::size_t> find_name(const std::vector<std::string>& names,
                                     const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

ParseResult parse_config_text(const std::string& text) {
    ParseResult result;
    Ctx ctx(result.errors);

    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        ctx.error("", std::string("not a well-formed document: ") + e.what());
        return result;
    }
    if (!root.is_object()) {
        ctx.error("", "top level must be an object");
        return result;
    }
    ctx.check_keys(root, "", {"plant", "conditions", "behaviors", "intended", "pairs",
                              "delays", "controller", "run", "randomize", "events"});

    ScenarioConfig cfg;

    // ---- run (first: dt anchors every other duration) ----
    std::int64_t dt_nanos = 0;
    {
        const std::string path = "/run";
        if (!root.contains("run") || !root.at("run").is_object()) {
            ctx.error(path, "missing run section");
            return result;
        }
        const auto& j = root.at("run");
        ctx.check_keys(j, path, {"dt_s", "horizon_s", "seed", "visibility"});
        auto dt = ctx.num(j, path, "dt_s", std::nullopt);
        if (dt) {
            cfg.run.dt_s = *dt;
            auto ns = to_nanos(*dt);
            if (!ns || *ns <= 0) {
                ctx.error(path + "/dt_s", "dt must be a positive decimal on the nanosecond lattice");
            } else {
                dt_nanos = *ns;
            }
        }
        if (dt_nanos > 0) {
            auto h = ctx.ticks(j, path, "horizon_s", dt_nanos, std::nullopt, &cfg.run.horizon_s);
            if (h) {
                if (*h < 1) {
                    ctx.error(path + "/horizon_s", "horizon must be at least one tick");
                } else {
                    cfg.run.horizon_ticks = *h;
                }
            }
        }
        auto seed = ctx.integer(j, path, "seed", std::int64_t{0});
        if (seed) cfg.run.seed = static_cast<std::uint64_t>(*seed);
        if (j.contains("visibility")) {
            if (!j.at("visibility").is_array()) {
                ctx.error(path + "/visibility", "expected an array of tokens");
            } else {
                cfg.run.visibility = {false, false, false};
                int i = 0;
                for (const auto& tok : j.at("visibility")) {
                    std::string tpath = path + "/visibility/" + std::to_string(i++);
                    if (!tok.is_string()) {
                        ctx.error(tpath, "expected a string token");
                        continue;
                    }
                    std::string t = tok.get<std::string>();
                    if (t == "traffic") cfg.run.visibility.traffic = true;
                    else if (t == "traffic_speeds") cfg.run.visibility.traffic_speeds = true;
                    else if (t == "conditions") cfg.run.visibility.conditions = true;
                    else ctx.error(tpath, "unknown visibility token '" + t + "'");
                }
            }
        }
    }
    if (dt_nanos <= 0) {
        // nothing downstream can be tick-validated; report what we have
        return result;
    }

    // ---- plant ----
    {
        const std::string path = "/plant";
        if (!root.contains("plant") || !root.at("plant").is_object()) {
            ctx.error(path, "missing plant section");
            return result;
        }
        const auto& j = root.at("plant");
        auto kind = ctx.str(j, path, "kind", std::nullopt);
        if (!kind) return result;
        if (*kind == "merge") {
            cfg.plant_kind = PlantKind::Merge;
            ctx.check_keys(j, path, {"kind", "lane_end_m", "d_end_min_m", "d_gap_min_m",
                                     "t_merge_s", "exec_lead_s", "ego", "traffic"});
            auto& m = cfg.merge;
            m.lane_end_m = ctx.num(j, path, "lane_end_m", std::nullopt).value_or(m.lane_end_m);
            m.d_end_min_m = ctx.num(j, path, "d_end_min_m", std::nullopt).value_or(m.d_end_min_m);
            m.d_gap_min_m = ctx.num(j, path, "d_gap_min_m", std::nullopt).value_or(m.d_gap_min_m);
            auto tm = ctx.ticks(j, path, "t_merge_s", dt_nanos, std::nullopt, &m.t_merge_s);
            if (tm) {
                if (*tm < 1) ctx.error(path + "/t_merge_s", "merge duration must be at least one tick");
                else m.t_merge_ticks = *tm;
            }
            auto el = ctx.ticks(j, path, "exec_lead_s", dt_nanos, 0.0, &m.exec_lead_s);
            if (el) m.exec_lead_ticks = *el;
            if (j.contains("ego") && j.at("ego").is_object()) {
                ctx.check_keys(j.at("ego"), path + "/ego", {"s_m", "v_mps"});
                m.ego_s_m = ctx.num(j.at("ego"), path + "/ego", "s_m", std::nullopt).value_or(0.0);
                m.ego_v_mps = ctx.num(j.at("ego"), path + "/ego", "v_mps", std::nullopt).value_or(0.0);
            } else {
                ctx.error(path + "/ego", "missing ego state");
            }
            if (j.contains("traffic")) {
                if (!j.at("traffic").is_array()) {
                    ctx.error(path + "/traffic", "expected an array");
                } else {
                    int i = 0;
                    for (const auto& t : j.at("traffic")) {
                        std::string tpath = path + "/traffic/" + std::to_string(i++);
                        if (!t.is_object()) {
                            ctx.error(tpath, "expected {p_m, v_mps}");
                            continue;
                        }
                        ctx.check_keys(t, tpath, {"p_m", "v_mps"});
                        TrafficVehicle veh;
                        veh.p_m = ctx.num(t, tpath, "p_m", std::nullopt).value_or(0.0);
                        veh.v_mps = ctx.num(t, tpath, "v_mps", std::nullopt).value_or(0.0);
                        m.traffic.push_back(veh);
                    }
                }
            }
        } else if (*kind == "descent") {
            cfg.plant_kind = PlantKind::Descent;
            ctx.check_keys(j, path, {"kind", "altitude_m", "ground_distance_m",
                                     "ground_speed_mps", "gamma_init_deg",
                                     "corridor_occupied_s", "battery_deadline_s"});
            auto& d = cfg.descent;
            d.altitude_m = ctx.num(j, path, "altitude_m", std::nullopt).value_or(d.altitude_m);
            d.ground_distance_m =
                ctx.num(j, path, "ground_distance_m", std::nullopt).value_or(d.ground_distance_m);
            d.ground_speed_mps =
                ctx.num(j, path, "ground_speed_mps", std::nullopt).value_or(d.ground_speed_mps);
            d.gamma_init_deg = ctx.num(j, path, "gamma_init_deg", 0.0).value_or(0.0);
            if (j.contains("corridor_occupied_s")) {
                if (!j.at("corridor_occupied_s").is_array()) {
                    ctx.error(path + "/corridor_occupied_s", "expected an array of [start_s, end_s]");
                } else {
                    int i = 0;
                    for (const auto& w : j.at("corridor_occupied_s")) {
                        std::string wpath = path + "/corridor_occupied_s/" + std::to_string(i++);
                        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
                            ctx.error(wpath, "expected [start_s, end_s]");
                            continue;
                        }
                        d.corridor_occupied_s.emplace_back(w[0].get<double>(), w[1].get<double>());
                        ordered_json tmp{{"a", w[0]}, {"b", w[1]}};
                        auto a = ctx.ticks(tmp, wpath, "a", dt_nanos, std::nullopt);
                        auto b = ctx.ticks(tmp, wpath, "b", dt_nanos, std::nullopt);
                        if (a && b) {
                            if (*a >= *b) ctx.error(wpath, "window start must precede end");
                            else d.corridor_occupied.emplace_back(*a, *b);
                        }
                    }
                }
            }
            auto bd = ctx.ticks(j, path, "battery_deadline_s", dt_nanos, 0.0,
                                &d.battery_deadline_s);
            if (bd) d.battery_deadline_ticks = *bd;
            if (d.ground_speed_mps <= 0.0) {
                ctx.error(path + "/ground_speed_mps", "must be positive");
            }
        } else {
            ctx.error(path + "/kind", "unknown plant kind '" + *kind + "'");
            return result;
        }
    }

    // ---- conditions ----
    if (root.contains("conditions")) {
        const std::string path = "/conditions";
        const auto& j = root.at("conditions");
        if (!j.is_object()) {
            ctx.error(path, "expected an object of named values");
        } else {
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.value().is_boolean()) {
                    cfg.conditions[it.key()] = it.value().get<bool>() ? 1.0 : 0.0;
                } else if (it.value().is_number()) {
                    cfg.conditions[it.key()] = it.value().get<double>();
                } else {
                    ctx.error(path + '/' + it.key(), "expected a number or boolean");
                }
            }
        }
    }

    // ---- behaviors ----
    {
        const std::string path = "/behaviors";
        if (!root.contains("behaviors") || !root.at("behaviors").is_object()) {
            ctx.error(path, "missing behaviors section");
        } else {
            for (auto it = root.at("behaviors").begin(); it != root.at("behaviors").end(); ++it) {
                std::string bpath = path + '/' + it.key();
                BehaviorConfig b;
                b.name = it.key();
                if (!it.value().is_object()) {
                    ctx.error(bpath, "expected an object");
                    continue;
                }
                ctx.check_keys(it.value(), bpath, {"pc", "in", "out"});
                if (it.value().contains("pc")) {
                    b.pc = parse_pc(ctx, it.value().at("pc"), bpath + "/pc", dt_nanos);
                } else {
                    ctx.error(bpath + "/pc", "missing performance constraint");
                }
                b.in_ref = ctx.str(it.value(), bpath, "in", std::string("")).value_or("");
                b.out_ref = ctx.str(it.value(), bpath, "out", std::string("")).value_or("");
                cfg.behaviors.push_back(std::move(b));
            }
        }
        auto intended = ctx.str(root, "", "intended", std::nullopt);
        if (intended) cfg.intended = *intended;
        // reference resolution
        if (!cfg.intended.empty()) {
            const BehaviorConfig* ib = cfg.find_behavior(cfg.intended);
            if (!ib) {
                ctx.error("/intended", "behavior '" + cfg.intended + "' is not declared");
            } else {
                if (ib->in_ref.empty() || !cfg.find_behavior(ib->in_ref)) {
                    ctx.error(path + '/' + cfg.intended + "/in",
                              "intended behavior needs a declared in-behavior");
                }
                if (ib->out_ref.empty() || !cfg.find_behavior(ib->out_ref)) {
                    ctx.error(path + '/' + cfg.intended + "/out",
                              "intended behavior needs a declared out-behavior");
                }
                if (ib->in_ref == ib->name || ib->out_ref == ib->name) {
                    ctx.error(path + '/' + cfg.intended,
                              "a behavior cannot neighbour itself");
                }
            }
        }
        for (const auto& b : cfg.behaviors) {
            if (!b.in_ref.empty() && !cfg.find_behavior(b.in_ref)) {
                ctx.error(path + '/' + b.name + "/in", "unresolved behavior '" + b.in_ref + "'");
            }
            if (!b.out_ref.empty() && !cfg.find_behavior(b.out_ref)) {
                ctx.error(path + '/' + b.name + "/out", "unresolved behavior '" + b.out_ref + "'");
            }
        }
    }

    const ElementTable table = element_table(cfg.plant_kind);

    // ---- pairs ----
    if (root.contains("pairs")) {
        const std::string path = "/pairs";
        if (!root.at("pairs").is_array()) {
            ctx.error(path, "expected an array of pair declarations");
        } else {
            int i = 0;
            for (const auto& pj : root.at("pairs")) {
                std::string ppath = path + '/' + std::to_string(i++);
                if (!pj.is_object()) {
                    ctx.error(ppath, "expected an object");
                    continue;
                }
                ctx.check_keys(pj, ppath, {"name", "target", "element", "constraint",
                                           "assume_system", "assume_env", "arrow",
                                           "justification"});
                PairConfig p;
                p.name = ctx.str(pj, ppath, "name", std::string("pair" + std::to_string(i)))
                             .value_or("");
                auto target = ctx.str(pj, ppath, "target", std::nullopt);
                const std::vector<std::string>* names = nullptr;
                if (target) {
                    if (*target == "u") { p.target = ElementKind::Input; names = &table.inputs; }
                    else if (*target == "x") { p.target = ElementKind::State; names = &table.states; }
                    else if (*target == "p") { p.target = ElementKind::Param; names = &table.params; }
                    else if (*target == "xdot") { p.target = ElementKind::Derivative; names = &table.states; }
                    else if (*target == "y") { p.target = ElementKind::Output; names = &table.outputs; }
                    else ctx.error(ppath + "/target", "expected u|x|p|xdot|y");
                }
                auto element = ctx.str(pj, ppath, "element", std::nullopt);
                if (element && names) {
                    if (!find_name(*names, *element)) {
                        ctx.error(ppath + "/element",
                                  "no element '" + *element + "' on this plant");
                    }
                    p.element = *element;
                }
                if (pj.contains("constraint") && pj.at("constraint").is_object()) {
                    const auto& cj = pj.at("constraint");
                    ctx.check_keys(cj, ppath + "/constraint", {"interval", "zone_speed_limit", "idle_exempt"});
                    if (cj.contains("interval")) {
                        p.constraint.interval = ctx.range(cj, ppath + "/constraint", "interval",
                                                          std::nullopt);
                    }
                    p.constraint.idle_exempt =
                        ctx.boolean(cj, ppath + "/constraint", "idle_exempt", false).value_or(false);
                    if (cj.contains("zone_speed_limit")) {
                        const auto& zj = cj.at("zone_speed_limit");
                        std::string zpath = ppath + "/constraint/zone_speed_limit";
                        if (!zj.is_object()) {
                            ctx.error(zpath, "expected {zone_m, v_max_mps}");
                        } else {
                            ctx.check_keys(zj, zpath, {"zone_m", "v_max_mps"});
                            ZoneSpeedLimit z;
                            z.zone_m = ctx.range(zj, zpath, "zone_m", std::nullopt)
                                           .value_or(ValueRange{});
                            z.v_max_mps = ctx.num(zj, zpath, "v_max_mps", std::nullopt).value_or(0.0);
                            p.constraint.zone = z;
                        }
                    }
                    if (!p.constraint.interval && !p.constraint.zone) {
                        ctx.error(ppath + "/constraint", "needs interval or zone_speed_limit");
                    }
                } else {
                    ctx.error(ppath + "/constraint", "missing constraint");
                }
                bool sys_present = false, env_present = false;
                p.assume_system = parse_assumption(ctx, pj, ppath, "assume_system", &sys_present);
                p.assume_env = parse_assumption(ctx, pj, ppath, "assume_env", &env_present);
                if (!pj.contains("assume_system")) {
                    ctx.error(ppath + "/assume_system", "missing (use \"na\" when not applicable)");
                }
                if (!pj.contains("assume_env")) {
                    ctx.error(ppath + "/assume_env", "missing (use \"na\" when not applicable)");
                }
                auto arrow = ctx.str(pj, ppath, "arrow", std::nullopt);
                if (arrow) {
                    auto a = arrow_from_name(*arrow);
                    if (!a) ctx.error(ppath + "/arrow", "expected A1..A5");
                    else p.arrow = *a;
                }
                p.justification = ctx.str(pj, ppath, "justification", std::string("")).value_or("");
                if (!p.assume_system && !p.assume_env && p.justification.empty()) {
                    ctx.error(ppath, "constraints and assumptions come in pairs: a pair with "
                                     "no applicable assumption must carry a justification");
                }
                // assumption variables must resolve against the declared conditions
                for (const auto* expr : {&p.assume_system, &p.assume_env}) {
                    if (expr->has_value() && !cfg.conditions.count((*expr)->var)) {
                        ctx.error(ppath, "condition variable '" + (*expr)->var +
                                             "' is not declared under /conditions");
                    }
                }
                cfg.pairs.push_back(std::move(p));
            }
        }
    }

    // ---- delays ----
    if (root.contains("delays")) {
        const std::string path = "/delays";
        const auto& j = root.at("delays");
        if (!j.is_object()) {
            ctx.error(path, "expected an object");
        } else {
            ctx.check_keys(j, path, {"d12_s", "d23_s", "l1_s", "l2_s", "l3_s"});
            auto& d = cfg.delays;
            if (auto v = ctx.ticks(j, path, "d12_s", dt_nanos, 0.0, &d.d12_s)) d.d12 = *v;
            if (auto v = ctx.ticks(j, path, "d23_s", dt_nanos, 0.0, &d.d23_s)) d.d23 = *v;
            if (auto v = ctx.ticks(j, path, "l1_s", dt_nanos, 0.0, &d.l1_s)) d.l1 = *v;
            if (auto v = ctx.ticks(j, path, "l2_s", dt_nanos, 0.0, &d.l2_s)) d.l2 = *v;
            if (auto v = ctx.ticks(j, path, "l3_s", dt_nanos, 0.0, &d.l3_s)) d.l3 = *v;
            if (d.d12 < d.l2) ctx.error(path + "/d12_s", "d12 must cover the stage latency l2");
            if (d.d23 < d.l3) ctx.error(path + "/d23_s", "d23 must cover the stage latency l3");
        }
    }

    // ---- controller ----
    if (root.contains("controller")) {
        const std::string path = "/controller";
        const auto& j = root.at("controller");
        if (!j.is_object()) {
            ctx.error(path, "expected an object");
        } else {
            ctx.check_keys(j, path, {"kind", "urgency_margin_s", "eps_pred",
                                     "compensate_reference", "compensate_action",
                                     "issue", "speed_step_mps", "policy"});
            auto& c = cfg.controller;
            auto kind = ctx.str(j, path, "kind", std::string("stpa"));
            if (kind) {
                if (*kind == "stpa") c.kind = ControllerKind::Stpa;
                else if (*kind == "naive") c.kind = ControllerKind::Naive;
                else ctx.error(path + "/kind", "expected stpa|naive");
            }
            if (auto v = ctx.ticks(j, path, "urgency_margin_s", dt_nanos, 2.0,
                                   &c.urgency_margin_s)) {
                if (*v < 1) ctx.error(path + "/urgency_margin_s", "must be at least one tick");
                else c.urgency_margin = *v;
            }
            c.eps_pred = ctx.num(j, path, "eps_pred", 0.0).value_or(0.0);
            c.compensate_reference =
                ctx.boolean(j, path, "compensate_reference", true).value_or(true);
            c.compensate_action = ctx.boolean(j, path, "compensate_action", true).value_or(true);
            auto issue = ctx.str(j, path, "issue", std::string("per_tick"));
            if (issue) {
                if (*issue == "per_tick") c.issue_all = false;
                else if (*issue == "all") c.issue_all = true;
                else ctx.error(path + "/issue", "expected per_tick|all");
            }
            c.speed_step_mps = ctx.num(j, path, "speed_step_mps", 0.5).value_or(0.5);
            if (c.speed_step_mps <= 0.0) ctx.error(path + "/speed_step_mps", "must be positive");
            if (j.contains("policy")) {
                const auto& pj = j.at("policy");
                std::string ppath = path + "/policy";
                if (!pj.is_object()) {
                    ctx.error(ppath, "expected an object");
                } else {
                    ctx.check_keys(pj, ppath, {"no_decision", "previously_safe",
                                               "unsafe_timing", "d3_no_decision"});
                    c.policy.no_decision = parse_policy_action(ctx, pj, ppath, "no_decision",
                                                                  PolicyAction::Fallback);
                    c.policy.previously_safe = parse_policy_action(ctx, pj, ppath, "previously_safe",
                                                                   PolicyAction::Replan);
                    c.policy.unsafe_timing = parse_policy_action(ctx, pj, ppath, "unsafe_timing",
                                                                 PolicyAction::Fallback);
                    c.policy.d3_no_decision = parse_policy_action(ctx, pj, ppath, "d3_no_decision",
                                                                  PolicyAction::Fallback);
                }
            }
        }
    }

    // ---- randomize ----
    if (root.contains("randomize")) {
        const std::string path = "/randomize";
        const auto& j = root.at("randomize");
        if (cfg.plant_kind != PlantKind::Merge) {
            ctx.error(path, "randomization is only defined for the merge plant");
        } else if (!j.is_object()) {
            ctx.error(path, "expected an object");
        } else {
            ctx.check_keys(j, path, {"traffic_count", "gap_m", "speed_mps", "first_position_m"});
            RandomizeConfig r;
            if (auto v = ctx.range(j, path, "traffic_count", ValueRange{4, 8})) {
                r.traffic_count_lo = static_cast<int>(v->lo);
                r.traffic_count_hi = static_cast<int>(v->hi);
                if (r.traffic_count_lo < 0 || v->lo != r.traffic_count_lo ||
                    v->hi != r.traffic_count_hi) {
                    ctx.error(path + "/traffic_count", "expected non-negative integers");
                }
            }
            if (auto v = ctx.range(j, path, "gap_m", ValueRange{15, 60})) {
                r.gap_lo_m = v->lo;
                r.gap_hi_m = v->hi;
                if (v->lo <= 0) ctx.error(path + "/gap_m", "gaps must be positive");
            }
            if (auto v = ctx.range(j, path, "speed_mps", ValueRange{18, 22})) {
                r.speed_lo_mps = v->lo;
                r.speed_hi_mps = v->hi;
            }
            r.first_position_m = ctx.num(j, path, "first_position_m", 20.0).value_or(20.0);
            cfg.randomize = r;
        }
    }

    // ---- events ----
    if (root.contains("events")) {
        const std::string path = "/events";
        if (!root.at("events").is_array()) {
            ctx.error(path, "expected an array");
        } else {
            int i = 0;
            Tick prev = -1;
            for (const auto& ej : root.at("events")) {
                std::string epath = path + '/' + std::to_string(i++);
                if (!ej.is_object()) {
                    ctx.error(epath, "expected an object");
                    continue;
                }
                ctx.check_keys(ej, epath, {"at_s", "jitter_s", "set_condition", "set_traffic",
                                           "add_traffic", "set_param", "nudge_ego",
                                           "set_pair_interval"});
                EventConfig ev;
                auto at = ctx.ticks(ej, epath, "at_s", dt_nanos, std::nullopt, &ev.at_s);
                if (!at) continue;
                ev.at = *at;
                if (ev.at <= prev) {
                    ctx.error(epath + "/at_s", "event ticks must be strictly increasing");
                }
                prev = ev.at;
                if (ej.contains("jitter_s")) {
                    ev.jitter_s = ctx.range(ej, epath, "jitter_s", std::nullopt);
                }
                int mutations = 0;
                if (ej.contains("set_condition")) {
                    const auto& mj = ej.at("set_condition");
                    std::string mpath = epath + "/set_condition";
                    ctx.check_keys(mj, mpath, {"var", "value"});
                    EventMutation::SetCondition m;
                    m.var = ctx.str(mj, mpath, "var", std::nullopt).value_or("");
                    if (mj.contains("value") && mj.at("value").is_boolean()) {
                        m.value = mj.at("value").get<bool>() ? 1.0 : 0.0;
                    } else {
                        m.value = ctx.num(mj, mpath, "value", std::nullopt).value_or(0.0);
                    }
                    if (!m.var.empty() && !cfg.conditions.count(m.var)) {
                        ctx.error(mpath + "/var",
                                  "condition variable '" + m.var + "' is not declared");
                    }
                    ev.mutation.set_condition = m;
                    ++mutations;
                }
                if (ej.contains("set_traffic")) {
                    const auto& mj = ej.at("set_traffic");
                    std::string mpath = epath + "/set_traffic";
                    ctx.check_keys(mj, mpath, {"index", "p_m", "v_mps"});
                    EventMutation::SetTraffic m;
                    m.index = static_cast<int>(
                        ctx.integer(mj, mpath, "index", std::nullopt).value_or(0));
                    if (mj.contains("p_m")) m.p_m = ctx.num(mj, mpath, "p_m", std::nullopt);
                    if (mj.contains("v_mps")) m.v_mps = ctx.num(mj, mpath, "v_mps", std::nullopt);
                    if (cfg.plant_kind != PlantKind::Merge) {
                        ctx.error(mpath, "set_traffic applies to the merge plant only");
                    } else if (!cfg.randomize && (m.index < 0 ||
                               m.index >= static_cast<int>(cfg.merge.traffic.size()))) {
                        ctx.error(mpath + "/index", "traffic index out of range");
                    }
                    ev.mutation.set_traffic = m;
                    ++mutations;
                }
                if (ej.contains("add_traffic")) {
                    const auto& mj = ej.at("add_traffic");
                    std::string mpath = epath + "/add_traffic";
                    ctx.check_keys(mj, mpath, {"p_m", "v_mps"});
                    EventMutation::AddTraffic m;
                    m.p_m = ctx.num(mj, mpath, "p_m", std::nullopt).value_or(0.0);
                    m.v_mps = ctx.num(mj, mpath, "v_mps", std::nullopt).value_or(0.0);
                    if (cfg.plant_kind != PlantKind::Merge) {
                        ctx.error(mpath, "add_traffic applies to the merge plant only");
                    }
                    ev.mutation.add_traffic = m;
                    ++mutations;
                }
                if (ej.contains("set_param")) {
                    const auto& mj = ej.at("set_param");
                    std::string mpath = epath + "/set_param";
                    ctx.check_keys(mj, mpath, {"name", "value"});
                    EventMutation::SetParam m;
                    m.name = ctx.str(mj, mpath, "name", std::nullopt).value_or("");
                    m.value = ctx.num(mj, mpath, "value", std::nullopt).value_or(0.0);
                    if (!find_name(table.params, m.name)) {
                        ctx.error(mpath + "/name",
                                  "'" + m.name + "' is not an editable parameter of this plant");
                    }
                    ev.mutation.set_param = m;
                    ++mutations;
                }
                if (ej.contains("nudge_ego")) {
                    const auto& mj = ej.at("nudge_ego");
                    std::string mpath = epath + "/nudge_ego";
                    ctx.check_keys(mj, mpath, {"ds_m", "dv_mps"});
                    EventMutation::NudgeEgo m;
                    m.ds_m = ctx.num(mj, mpath, "ds_m", 0.0).value_or(0.0);
                    m.dv_mps = ctx.num(mj, mpath, "dv_mps", 0.0).value_or(0.0);
                    ev.mutation.nudge_ego = m;
                    ++mutations;
                }
                if (ej.contains("set_pair_interval")) {
                    const auto& mj = ej.at("set_pair_interval");
                    std::string mpath = epath + "/set_pair_interval";
                    ctx.check_keys(mj, mpath, {"pair", "interval"});
                    EventMutation::SetPairInterval m;
                    m.pair = ctx.str(mj, mpath, "pair", std::nullopt).value_or("");
                    m.interval = ctx.range(mj, mpath, "interval", std::nullopt)
                                     .value_or(ValueRange{});
                    bool found = std::any_of(cfg.pairs.begin(), cfg.pairs.end(),
                                             [&](const PairConfig& p) { return p.name == m.pair; });
                    if (!found) {
                        ctx.error(mpath + "/pair", "no pair named '" + m.pair + "'");
                    }
                    ev.mutation.set_pair_interval = m;
                    ++mutations;
                }
                if (mutations == 0) {
                    ctx.error(epath, "event carries no mutation");
                }
                cfg.events.push_back(std::move(ev));
            }
        }
    }

    if (result.errors.ok()) {
        result.config = std::move(cfg);
    }
    return result;
}

ParseResult parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ParseResult r;
        r.errors.items.push_back({"", "cannot open '" + path + "'"});
        return r;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------
// Re-emit
// ---------------------------------------------------------------------------
namespace {

ordered_json emit_assumption(const std::optional<AssumptionExpr>& e) {
    if (!e) return "na";
    ordered_json j;
    j["var"] = e->var;
    switch (e->op) {
        case AssumptionExpr::Op::IsTrue: j["is"] = true; break;
        case AssumptionExpr::Op::IsFalse: j["is"] = false; break;
        case AssumptionExpr::Op::Ge: j["ge"] = e->bound; break;
        case AssumptionExpr::Op::Le: j["le"] = e->bound; break;
    }
    return j;
}

ordered_json emit_pc(const PcTemplate& pc, double dt_s) {
    ordered_json j;
    switch (pc.kind) {
        case PcTemplate::Kind::IntervalBound:
            j["template"] = "interval_bound";
            j["state"] = pc.state_name;
            j["range"] = {pc.range.lo, pc.range.hi};
            break;
        case PcTemplate::Kind::GapToTraffic:
            j["template"] = "gap_to_traffic";
            j["min_gap_m"] = pc.min_gap_m;
            if (pc.entry_speed) j["entry_speed_mps"] = {pc.entry_speed->lo, pc.entry_speed->hi};
            break;
        case PcTemplate::Kind::DistanceToLaneEnd:
            j["template"] = "distance_to_lane_end";
            j["min_m"] = pc.min_m;
            break;
        case PcTemplate::Kind::DescentCorridor:
            j["template"] = "descent_corridor";
            break;
        case PcTemplate::Kind::CorridorOccupancy: {
            j["template"] = "corridor_occupancy";
            ordered_json arr = ordered_json::array();
            for (const auto& [a, b] : pc.occupied) {
                arr.push_back({static_cast<double>(a) * dt_s, static_cast<double>(b) * dt_s});
            }
            j["occupied_s"] = arr;
            break;
        }
        case PcTemplate::Kind::LinearInequality: {
            j["template"] = "linear_inequality";
            ordered_json arr = ordered_json::array();
            for (const auto& [state, coeff] : pc.terms) {
                arr.push_back({{"state", state}, {"coeff", coeff}});
            }
            j["terms"] = arr;
            j["bound"] = pc.bound;
            break;
        }
    }
    return j;
}

const char* target_name(ElementKind k) {
    switch (k) {
        case ElementKind::Input: return "u";
        case ElementKind::State: return "x";
        case ElementKind::Param: return "p";
        case ElementKind::Derivative: return "xdot";
        case ElementKind::Output: return "y";
    }
    return "?";
}

}  // namespace

std::string emit_config(const ScenarioConfig& cfg) {
    ordered_json root;
    ordered_json plant;
    if (cfg.plant_kind == PlantKind::Merge) {
        const auto& m = cfg.merge;
        plant["kind"] = "merge";
        plant["lane_end_m"] = m.lane_end_m;
        plant["d_end_min_m"] = m.d_end_min_m;
        plant["d_gap_min_m"] = m.d_gap_min_m;
        plant["t_merge_s"] = m.t_merge_s;
        plant["exec_lead_s"] = m.exec_lead_s;
        plant["ego"] = {{"s_m", m.ego_s_m}, {"v_mps", m.ego_v_mps}};
        ordered_json traffic = ordered_json::array();
        for (const auto& t : m.traffic) {
            traffic.push_back({{"p_m", t.p_m}, {"v_mps", t.v_mps}});
        }
        plant["traffic"] = traffic;
    } else {
        const auto& d = cfg.descent;
        plant["kind"] = "descent";
        plant["altitude_m"] = d.altitude_m;
        plant["ground_distance_m"] = d.ground_distance_m;
        plant["ground_speed_mps"] = d.ground_speed_mps;
        plant["gamma_init_deg"] = d.gamma_init_deg;
        ordered_json occ = ordered_json::array();
        for (const auto& [a, b] : d.corridor_occupied_s) occ.push_back({a, b});
        plant["corridor_occupied_s"] = occ;
        plant["battery_deadline_s"] = d.battery_deadline_s;
    }
    root["plant"] = plant;

    ordered_json conditions = ordered_json::object();
    for (const auto& [k, v] : cfg.conditions) conditions[k] = v;
    root["conditions"] = conditions;

    ordered_json behaviors = ordered_json::object();
    for (const auto& b : cfg.behaviors) {
        ordered_json bj;
        bj["pc"] = emit_pc(b.pc, cfg.run.dt_s);
        if (!b.in_ref.empty()) bj["in"] = b.in_ref;
        if (!b.out_ref.empty()) bj["out"] = b.out_ref;
        behaviors[b.name] = bj;
    }
    root["behaviors"] = behaviors;
    root["intended"] = cfg.intended;

    ordered_json pairs = ordered_json::array();
    for (const auto& p : cfg.pairs) {
        ordered_json pj;
        pj["name"] = p.name;
        pj["target"] = target_name(p.target);
        pj["element"] = p.element;
        ordered_json cj;
        if (p.constraint.interval) {
            cj["interval"] = {p.constraint.interval->lo, p.constraint.interval->hi};
        }
        if (p.constraint.idle_exempt) cj["idle_exempt"] = true;
        if (p.constraint.zone) {
            cj["zone_speed_limit"] = {{"zone_m", {p.constraint.zone->zone_m.lo,
                                                  p.constraint.zone->zone_m.hi}},
                                      {"v_max_mps", p.constraint.zone->v_max_mps}};
        }
        pj["constraint"] = cj;
        pj["assume_system"] = emit_assumption(p.assume_system);
        pj["assume_env"] = emit_assumption(p.assume_env);
        pj["arrow"] = arrow_name(p.arrow);
        pj["justification"] = p.justification;
        pairs.push_back(pj);
    }
    root["pairs"] = pairs;

    root["delays"] = {{"d12_s", cfg.delays.d12_s}, {"d23_s", cfg.delays.d23_s},
                      {"l1_s", cfg.delays.l1_s}, {"l2_s", cfg.delays.l2_s},
                      {"l3_s", cfg.delays.l3_s}};

    ordered_json controller;
    controller["kind"] = cfg.controller.kind == ControllerKind::Stpa ? "stpa" : "naive";
    controller["urgency_margin_s"] = cfg.controller.urgency_margin_s;
    controller["eps_pred"] = cfg.controller.eps_pred;
    controller["compensate_reference"] = cfg.controller.compensate_reference;
    controller["compensate_action"] = cfg.controller.compensate_action;
    controller["issue"] = cfg.controller.issue_all ? "all" : "per_tick";
    controller["speed_step_mps"] = cfg.controller.speed_step_mps;
    controller["policy"] = {{"no_decision", policy_action_name(cfg.controller.policy.no_decision)},
                            {"previously_safe", policy_action_name(cfg.controller.policy.previously_safe)},
                            {"unsafe_timing", policy_action_name(cfg.controller.policy.unsafe_timing)},
                            {"d3_no_decision", policy_action_name(cfg.controller.policy.d3_no_decision)}};
    root["controller"] = controller;

    ordered_json run;
    run["dt_s"] = cfg.run.dt_s;
    run["horizon_s"] = cfg.run.horizon_s;
    run["seed"] = cfg.run.seed;
    ordered_json vis = ordered_json::array();
    if (cfg.run.visibility.traffic) vis.push_back("traffic");
    if (cfg.run.visibility.traffic_speeds) vis.push_back("traffic_speeds");
    if (cfg.run.visibility.conditions) vis.push_back("conditions");
    run["visibility"] = vis;
    root["run"] = run;

    if (cfg.randomize) {
        const auto& r = *cfg.randomize;
        root["randomize"] = {{"traffic_count", {static_cast<double>(r.traffic_count_lo),
                                                static_cast<double>(r.traffic_count_hi)}},
                             {"gap_m", {r.gap_lo_m, r.gap_hi_m}},
                             {"speed_mps", {r.speed_lo_mps, r.speed_hi_mps}},
                             {"first_position_m", r.first_position_m}};
    }

    ordered_json events = ordered_json::array();
    for (const auto& e : cfg.events) {
        ordered_json ej;
        ej["at_s"] = e.at_s;
        if (e.jitter_s) ej["jitter_s"] = {e.jitter_s->lo, e.jitter_s->hi};
        const auto& m = e.mutation;
        if (m.set_condition) {
            ej["set_condition"] = {{"var", m.set_condition->var}, {"value", m.set_condition->value}};
        }
        if (m.set_traffic) {
            ordered_json mj{{"index", m.set_traffic->index}};
            if (m.set_traffic->p_m) mj["p_m"] = *m.set_traffic->p_m;
            if (m.set_traffic->v_mps) mj["v_mps"] = *m.set_traffic->v_mps;
            ej["set_traffic"] = mj;
        }
        if (m.add_traffic) {
            ej["add_traffic"] = {{"p_m", m.add_traffic->p_m}, {"v_mps", m.add_traffic->v_mps}};
        }
        if (m.set_param) {
            ej["set_param"] = {{"name", m.set_param->name}, {"value", m.set_param->value}};
        }
        if (m.nudge_ego) {
            ej["nudge_ego"] = {{"ds_m", m.nudge_ego->ds_m}, {"dv_mps", m.nudge_ego->dv_mps}};
        }
        if (m.set_pair_interval) {
            ej["set_pair_interval"] = {{"pair", m.set_pair_interval->pair},
                                       {"interval", {m.set_pair_interval->interval.lo,
                                                     m.set_pair_interval->interval.hi}}};
        }
        events.push_back(ej);
    }
    root["events"] = events;

    return root.dump(2) + "\n";
}

const char* config_schema_json() {
    // Kept in sync with docs/scenario_config.schema.json (unit-tested).
    static const char* schema = R"SCHEMA({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "scenario config",
  "type": "object",
  "required": ["plant", "behaviors", "intended", "run"],
  "additionalProperties": false,
  "properties": {
    "plant": {
      "type": "object",
      "required": ["kind"],
      "properties": {
        "kind": {"enum": ["merge", "descent"]},
        "lane_end_m": {"type": "number"},
        "d_end_min_m": {"type": "number"},
        "d_gap_min_m": {"type": "number"},
        "t_merge_s": {"type": "number"},
        "exec_lead_s": {"type": "number"},
        "ego": {"type": "object", "properties": {"s_m": {"type": "number"}, "v_mps": {"type": "number"}}},
        "traffic": {"type": "array", "items": {"type": "object", "properties": {"p_m": {"type": "number"}, "v_mps": {"type": "number"}}}},
        "altitude_m": {"type": "number"},
        "ground_distance_m": {"type": "number"},
        "ground_speed_mps": {"type": "number"},
        "gamma_init_deg": {"type": "number"},
        "corridor_occupied_s": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
        "battery_deadline_s": {"type": "number"}
      }
    },
    "conditions": {"type": "object", "additionalProperties": {"type": ["number", "boolean"]}},
    "behaviors": {
      "type": "object",
      "additionalProperties": {
        "type": "object",
        "required": ["pc"],
        "properties": {
          "pc": {
            "type": "object",
            "required": ["template"],
            "properties": {
              "template": {"enum": ["interval_bound", "gap_to_traffic", "distance_to_lane_end", "descent_corridor", "corridor_occupancy", "linear_inequality"]},
              "state": {"type": "string"},
              "range": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
              "min_gap_m": {"type": "number"},
              "entry_speed_mps": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
              "min_m": {"type": "number"},
              "occupied_s": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
              "terms": {"type": "array", "items": {"type": "object", "properties": {"state": {"type": "string"}, "coeff": {"type": "number"}}}},
              "bound": {"type": "number"}
            }
          },
          "in": {"type": "string"},
          "out": {"type": "string"}
        }
      }
    },
    "intended": {"type": "string"},
    "pairs": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["name", "target", "element", "constraint", "assume_system", "assume_env", "arrow"],
        "properties": {
          "name": {"type": "string"},
          "target": {"enum": ["u", "x", "p", "xdot", "y"]},
          "element": {"type": "string"},
          "constraint": {
            "type": "object",
            "properties": {
              "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
              "zone_speed_limit": {"type": "object", "properties": {"zone_m": {"type": "array", "items": {"type": "number"}}, "v_max_mps": {"type": "number"}}},
              "idle_exempt": {"type": "boolean"}
            }
          },
          "assume_system": {"oneOf": [{"const": "na"}, {"type": "object", "properties": {"var": {"type": "string"}, "is": {"type": "boolean"}, "ge": {"type": "number"}, "le": {"type": "number"}}}]},
          "assume_env": {"oneOf": [{"const": "na"}, {"type": "object", "properties": {"var": {"type": "string"}, "is": {"type": "boolean"}, "ge": {"type": "number"}, "le": {"type": "number"}}}]},
          "arrow": {"enum": ["A1", "A2", "A3", "A4", "A5"]},
          "justification": {"type": "string"}
        }
      }
    },
    "delays": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "d12_s": {"type": "number"}, "d23_s": {"type": "number"},
        "l1_s": {"type": "number"}, "l2_s": {"type": "number"}, "l3_s": {"type": "number"}
      }
    },
    "controller": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["stpa", "naive"]},
        "urgency_margin_s": {"type": "number"},
        "eps_pred": {"type": "number"},
        "compensate_reference": {"type": "boolean"},
        "compensate_action": {"type": "boolean"},
        "issue": {"enum": ["per_tick", "all"]},
        "speed_step_mps": {"type": "number"},
        "policy": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "no_decision": {"enum": ["replan", "fallback", "halt"]},
            "previously_safe": {"enum": ["replan", "fallback", "halt"]},
            "unsafe_timing": {"enum": ["replan", "fallback", "halt"]},
            "d3_no_decision": {"enum": ["replan", "fallback", "halt"]}
          }
        }
      }
    },
    "run": {
      "type": "object",
      "required": ["dt_s", "horizon_s"],
      "additionalProperties": false,
      "properties": {
        "dt_s": {"type": "number", "exclusiveMinimum": 0},
        "horizon_s": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "visibility": {"type": "array", "items": {"enum": ["traffic", "traffic_speeds", "conditions"]}}
      }
    },
    "randomize": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "traffic_count": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "gap_m": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "speed_mps": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "first_position_m": {"type": "number"}
      }
    },
    "events": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["at_s"],
        "additionalProperties": false,
        "properties": {
          "at_s": {"type": "number"},
          "jitter_s": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
          "set_condition": {"type": "object", "properties": {"var": {"type": "string"}, "value": {"type": ["number", "boolean"]}}},
          "set_traffic": {"type": "object", "properties": {"index": {"type": "integer"}, "p_m": {"type": "number"}, "v_mps": {"type": "number"}}},
          "add_traffic": {"type": "object", "properties": {"p_m": {"type": "number"}, "v_mps": {"type": "number"}}},
          "set_param": {"type": "object", "properties": {"name": {"type": "string"}, "value": {"type": "number"}}},
          "nudge_ego": {"type": "object", "properties": {"ds_m": {"type": "number"}, "dv_mps": {"type": "number"}}},
          "set_pair_interval": {"type": "object", "properties": {"pair": {"type": "string"}, "interval": {"type": "array", "items": {"type": "number"}}}}
        }
      }
    }
  }
}
)SCHEMA";
    return schema;
}

}  // namespace stpaplus
