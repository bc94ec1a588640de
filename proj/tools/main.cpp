#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stpaplus/episode.hpp"
#include "stpaplus/monitor.hpp"
#include "stpaplus/trace.hpp"

namespace fs = std::filesystem;
using namespace stpaplus;

namespace {

constexpr const char* kVersion = "stpaplus 0.1.0";

int load_config(const std::string& path, ScenarioConfig& cfg) {
    ParseResult parsed = parse_config_file(path);
    if (!parsed.ok()) {
        std::cerr << "config errors in " << path << ":\n" << parsed.errors.to_text();
        return 1;
    }
    cfg = std::move(*parsed.config);
    return 0;
}

fs::path output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("STPAPLUS_OUT")) return env;
    return "out";
}

int run_one(const ScenarioConfig& cfg, std::uint64_t seed, const fs::path& dir,
            const std::string& stem, bool quiet) {
    EpisodeResult result = run_episode(cfg, seed);
    fs::create_directories(dir);
    fs::path trace_path = dir / (stem + "_seed" + std::to_string(seed) + ".trace.jsonl");
    write_trace_file(result.trace, trace_path.string());
    fs::path verdict_path = dir / (stem + "_seed" + std::to_string(seed) + ".verdict.txt");
    {
        std::ofstream out(verdict_path);
        out << result.verdict.to_text();
    }
    if (!quiet) {
        std::cout << "trace: " << trace_path.string() << '\n'
                  << result.summary.to_text() << result.verdict.to_text();
    }
    return result.verdict.events.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hazard-derived time windows, constrained process models and a "
                 "three-decision safe controller over deterministic plants"};
    app.set_version_flag("--version", kVersion);
    bool print_schema = false;
    app.add_flag("--schema", print_schema, "print the scenario config schema and exit");

    std::string config_path, out_flag, trace_path;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    std::string seeds_range;

    auto* run = app.add_subcommand("run", "run an episode: trace + verdict + summary");
    run->add_option("config", config_path, "scenario config")->required();
    auto* seed_opt = run->add_option("--seed", seed_flag, "override the config seed");
    run->add_option("--seeds", seeds_range, "run a seed range A..B, one episode each");
    run->add_option("--out", out_flag, "output directory (default $STPAPLUS_OUT or ./out)");

    auto* check = app.add_subcommand("check",
                                     "validate a config, sample the dynamics against the "
                                     "aggregated sets, preview the windows at tick 0");
    check->add_option("config", config_path, "scenario config")->required();

    auto* monitor_cmd = app.add_subcommand("monitor",
                                           "classify a recorded trace against a config");
    monitor_cmd->add_option("trace", trace_path, "trace file")->required();
    monitor_cmd->add_option("config", config_path, "scenario config")->required();

    auto* report = app.add_subcommand("report", "summarize a recorded trace");
    report->add_option("trace", trace_path, "trace file")->required();

    CLI11_PARSE(app, argc, argv);

    if (print_schema) {
        std::cout << config_schema_json();
        return 0;
    }

    try {
        if (*run) {
            ScenarioConfig cfg;
            if (load_config(config_path, cfg)) return 1;
            seed_given = seed_opt->count() > 0;
            fs::path dir = output_dir(out_flag);
            std::string stem = fs::path(config_path).stem().string();
            if (!seeds_range.empty()) {
                auto sep = seeds_range.find("..");
                if (sep == std::string::npos) {
                    std::cerr << "--seeds expects A..B\n";
                    return 1;
                }
                std::uint64_t a = std::stoull(seeds_range.substr(0, sep));
                std::uint64_t b = std::stoull(seeds_range.substr(sep + 2));
                int status = 0;
                for (std::uint64_t s = a; s <= b; ++s) {
                    int rc = run_one(cfg, s, dir / ("seed" + std::to_string(s)), stem, true);
                    status = std::max(status, rc);
                }
                std::cout << "ran " << (b - a + 1) << " episodes\n";
                return status;
            }
            std::uint64_t seed = seed_given ? seed_flag : cfg.run.seed;
            return run_one(cfg, seed, dir, stem, false);
        }

        if (*check) {
            ScenarioConfig cfg;
            if (load_config(config_path, cfg)) return 1;
            ProcessModel model = make_process_model(cfg);
            World world(cfg, cfg.run.seed);
            world.apply_events(0, model);
            WorldSnapshot snap = world.observe(0);
            const ConditionSnapshot& conditions =
                snap.conditions_visible ? snap.conditions : cfg.conditions;
            DescriptiveConstraints dcs = model.aggregate(conditions);

            auto report_consistency = model.check_consistency(10000, cfg.run.seed, conditions);
            std::cout << "consistency: " << report_consistency.to_text(model.construct());

            auto pcs = derive_prescriptive(derivation_inputs_for(cfg, snap, dcs,
                                                                  cfg.run.horizon_ticks),
                                           performance_for(cfg, snap, dcs), 0,
                                           Interval(0, cfg.run.horizon_ticks),
                                           cfg.controller.urgency_margin);
            std::cout << "windows at tick 0:\n"
                      << "  must_start     " << pcs.must_start.to_string() << '\n'
                      << "  must_not_start " << pcs.must_not_start.to_string() << '\n'
                      << "  can_start      " << pcs.can_start.to_string() << '\n'
                      << "  start_set      " << pcs.start_set.to_string() << '\n'
                      << "  must_stop      " << pcs.must_stop.to_string() << '\n'
                      << "  must_not_stop  " << pcs.must_not_stop.to_string() << '\n'
                      << "  can_stop       " << pcs.can_stop.to_string() << '\n'
                      << "  stop_set       " << pcs.stop_set.to_string() << '\n';
            if (pcs.has_conflict()) std::cout << "  (window conflict at tick 0)\n";
            return report_consistency.consistent() ? 0 : 2;
        }

        if (*monitor_cmd) {
            ScenarioConfig cfg;
            if (load_config(config_path, cfg)) return 1;
            TraceReadResult read = read_trace_file(trace_path);
            if (!read.ok()) {
                std::cerr << "trace error: " << read.error << '\n';
                return 1;
            }
            MonitorVerdict verdict = monitor_trace(*read.trace, cfg);
            std::cout << verdict.to_text();
            return verdict.clean() ? 0 : 2;
        }

        if (*report) {
            TraceReadResult read = read_trace_file(trace_path);
            if (!read.ok()) {
                std::cerr << "trace error: " << read.error << '\n';
                return 1;
            }
            const Trace& trace = *read.trace;
            std::cout << "plant=" << trace.header.plant << " dt_s=" << trace.header.dt_s
                      << " seed=" << trace.header.seed << '\n'
                      << "ticks=" << trace.footer.ticks << " terminal=" << trace.footer.terminal
                      << '\n';
            std::map<std::string, int> counts;
            int saturations = 0;
            for (const auto& r : trace.records) {
                if (r.saturated) ++saturations;
                for (const auto& e : r.events) {
                    counts[std::string(stage_name(e.stage)) + '/' +
                           scenario_kind_name(e.kind)]++;
                }
            }
            std::cout << "scenario events by stage/kind:\n";
            if (counts.empty()) std::cout << "  (none)\n";
            for (const auto& [key, n] : counts) std::cout << "  " << key << " x" << n << '\n';
            std::cout << "input saturations=" << saturations << '\n';
            if (!trace.records.empty()) {
                const auto& last = trace.records.back();
                std::cout << "final state:";
                for (double v : last.state) std::cout << ' ' << v;
                std::cout << '\n';
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    std::cout << app.help();
    return 1;
}
