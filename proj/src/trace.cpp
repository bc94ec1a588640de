#include "stpaplus/trace.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace stpaplus {

using nlohmann::ordered_json;

namespace {

ordered_json record_to_json(const TraceRecord& r) {
    ordered_json j;
    j["tick"] = r.tick;
    j["state"] = r.state;
    j["xdot"] = r.xdot;
    j["y"] = r.y;
    j["u_req"] = r.u_requested;
    j["u"] = r.u_applied;
    j["sat"] = r.saturated;
    j["params"] = r.params;
    if (r.traffic_visible) {
        ordered_json t = ordered_json::array();
        for (const auto& veh : r.traffic) t.push_back({veh.p_m, veh.v_mps});
        j["traffic"] = t;
        j["traffic_speeds_visible"] = r.traffic_speeds_visible;
    }
    if (r.conditions_visible) {
        ordered_json c = ordered_json::object();
        for (const auto& [k, v] : r.conditions) c[k] = v;
        j["cond"] = c;
    }
    ordered_json at = ordered_json::array();
    for (bool b : r.assumption_truth) at.push_back(b);
    j["assume"] = at;
    j["win"] = {{"mst", r.w_mst}, {"nst", r.w_nst}, {"cst", r.w_cst},
                {"msp", r.w_msp}, {"nsp", r.w_nsp}, {"csp", r.w_csp},
                {"st", r.w_st},   {"sp", r.w_sp}};
    j["conflict"] = r.start_conflict;
    j["doomed"] = r.start_doomed;
    j["phase"] = r.phase;
    if (r.has_reference) {
        ordered_json ref;
        ref["start"] = r.ref_start;
        ref["stop"] = r.ref_stop;
        ref["target"] = r.ref_target;
        ref["t1"] = r.ref_t1;
        ref["t2"] = r.ref_t2;
        ref["t3"] = r.ref_t3;
        ref["epoch"] = r.ref_epoch;
        ref["invalidated"] = r.ref_invalidated;
        ref["xhat"] = r.ref_xhat;
        j["ref"] = ref;
    }
    if (r.xhat_generated) j["xhat_generated"] = *r.xhat_generated;
    j["begin"] = r.begin_maneuver;
    j["fallback"] = r.fallback;
    ordered_json ev = ordered_json::array();
    for (const auto& e : r.events) {
        ev.push_back({{"tick", e.tick}, {"stage", stage_name(e.stage)},
                      {"kind", scenario_kind_name(e.kind)}, {"cause", e.cause}});
    }
    j["events"] = ev;
    return j;
}

template <typename T>
std::vector<double> doubles(const T& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.template get<double>());
    return out;
}

TraceRecord record_from_json(const ordered_json& j) {
    TraceRecord r;
    r.tick = j.at("tick").get<Tick>();
    r.state = doubles(j.at("state"));
    r.xdot = doubles(j.at("xdot"));
    r.y = doubles(j.at("y"));
    r.u_requested = j.at("u_req").get<double>();
    r.u_applied = j.at("u").get<double>();
    r.saturated = j.at("sat").get<bool>();
    r.params = doubles(j.at("params"));
    if (j.contains("traffic")) {
        r.traffic_visible = true;
        r.traffic_speeds_visible = j.at("traffic_speeds_visible").get<bool>();
        for (const auto& t : j.at("traffic")) {
            r.traffic.push_back({t[0].get<double>(), t[1].get<double>()});
        }
    } else {
        r.traffic_visible = false;
        r.traffic_speeds_visible = false;
    }
    if (j.contains("cond")) {
        for (auto it = j.at("cond").begin(); it != j.at("cond").end(); ++it) {
            r.conditions[it.key()] = it.value().get<double>();
        }
    } else {
        r.conditions_visible = false;
    }
    for (const auto& b : j.at("assume")) r.assumption_truth.push_back(b.get<bool>());
    const auto& w = j.at("win");
    r.w_mst = w.at("mst").get<std::string>();
    r.w_nst = w.at("nst").get<std::string>();
    r.w_cst = w.at("cst").get<std::string>();
    r.w_msp = w.at("msp").get<std::string>();
    r.w_nsp = w.at("nsp").get<std::string>();
    r.w_csp = w.at("csp").get<std::string>();
    r.w_st = w.at("st").get<std::string>();
    r.w_sp = w.at("sp").get<std::string>();
    r.start_conflict = j.at("conflict").get<bool>();
    r.start_doomed = j.at("doomed").get<bool>();
    r.phase = j.at("phase").get<std::string>();
    if (j.contains("ref")) {
        const auto& ref = j.at("ref");
        r.has_reference = true;
        r.ref_start = ref.at("start").get<Tick>();
        r.ref_stop = ref.at("stop").get<Tick>();
        r.ref_target = ref.at("target").get<double>();
        r.ref_t1 = ref.at("t1").get<Tick>();
        r.ref_t2 = ref.at("t2").get<Tick>();
        r.ref_t3 = ref.at("t3").get<Tick>();
        r.ref_epoch = ref.at("epoch").get<Tick>();
        r.ref_invalidated = ref.at("invalidated").get<bool>();
        r.ref_xhat = doubles(ref.at("xhat"));
    }
    if (j.contains("xhat_generated")) r.xhat_generated = doubles(j.at("xhat_generated"));
    r.begin_maneuver = j.at("begin").get<bool>();
    r.fallback = j.at("fallback").get<bool>();
    for (const auto& e : j.at("events")) {
        auto stage = stage_from_name(e.at("stage").get<std::string>());
        auto kind = scenario_kind_from_name(e.at("kind").get<std::string>());
        if (!stage || !kind) throw std::runtime_error("unknown stage/kind in event");
        r.events.push_back(ScenarioEvent::make(e.at("tick").get<Tick>(), *stage, *kind,
                                               e.at("cause").get<std::string>()));
    }
    return r;
}

}  // namespace

std::string write_trace(const Trace& trace) {
    std::string out;
    ordered_json h;
    h["format"] = "stpaplus-trace";
    h["version"] = trace.header.version;
    h["plant"] = trace.header.plant;
    h["dt_s"] = trace.header.dt_s;
    h["horizon_ticks"] = trace.header.horizon_ticks;
    h["seed"] = trace.header.seed;
    out += h.dump() + "\n";
    for (const auto& r : trace.records) {
        out += record_to_json(r).dump() + "\n";
    }
    ordered_json f;
    f["terminal"] = trace.footer.terminal;
    f["ticks"] = trace.footer.ticks;
    out += f.dump() + "\n";
    return out;
}

void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
    out << write_trace(trace);
}

TraceReadResult read_trace(const std::string& text) {
    TraceReadResult result;
    Trace trace;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_header = false;
    bool have_footer = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            result.error = "line " + std::to_string(line_no) + ": malformed record: " + e.what();
            result.error_line = line_no;
            return result;
        }
        try {
            if (!have_header) {
                if (!j.is_object() || j.value("format", "") != "stpaplus-trace") {
                    result.error = "line 1: not a trace header";
                    result.error_line = line_no;
                    return result;
                }
                trace.header.version = j.at("version").get<int>();
                trace.header.plant = j.at("plant").get<std::string>();
                trace.header.dt_s = j.at("dt_s").get<double>();
                trace.header.horizon_ticks = j.at("horizon_ticks").get<Tick>();
                trace.header.seed = j.at("seed").get<std::uint64_t>();
                have_header = true;
                continue;
            }
            if (j.contains("terminal")) {
                trace.footer.terminal = j.at("terminal").get<std::string>();
                trace.footer.ticks = j.at("ticks").get<Tick>();
                have_footer = true;
                continue;
            }
            if (have_footer) {
                result.error = "line " + std::to_string(line_no) + ": record after the closing line";
                result.error_line = line_no;
                return result;
            }
            TraceRecord r = record_from_json(j);
            Tick expected = static_cast<Tick>(trace.records.size());
            if (r.tick != expected) {
                result.error = "line " + std::to_string(line_no) + ": expected tick " +
                               std::to_string(expected) + ", found " + std::to_string(r.tick);
                result.error_line = line_no;
                return result;
            }
            trace.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            result.error = "line " + std::to_string(line_no) + ": malformed record: " + e.what();
            result.error_line = line_no;
            return result;
        }
    }
    if (!have_header) {
        result.error = "empty input: missing trace header";
        return result;
    }
    if (!have_footer) {
        result.error = "truncated trace: ends at tick " +
                       std::to_string(static_cast<Tick>(trace.records.size()) - 1) +
                       " with no closing line (first missing tick " +
                       std::to_string(trace.records.size()) + ")";
        result.error_line = line_no;
        return result;
    }
    if (trace.footer.ticks != static_cast<Tick>(trace.records.size())) {
        result.error = "truncated trace: closing line declares " +
                       std::to_string(trace.footer.ticks) + " ticks but " +
                       std::to_string(trace.records.size()) + " are present (first missing tick " +
                       std::to_string(trace.records.size()) + ")";
        result.error_line = line_no;
        return result;
    }
    result.trace = std::move(trace);
    return result;
}

TraceReadResult read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        TraceReadResult r;
        r.error = "cannot open '" + path + "'";
        return r;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_trace(buf.str());
}

}  // namespace stpaplus
