// elzsim command-line front end: run scenarios or presets, list the preset
// catalog, validate scenario files.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical divergence,
// 3 constraint violation in strict mode.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "elzsim/engine.hpp"
#include "elzsim/scenario.hpp"
#include "elzsim/trace_io.hpp"

namespace {

using namespace elzsim;

struct RunRequest {
    std::string preset;
    std::string scenario_path;
    std::string out_dir;
    std::string format = "csv";
    bool strict = false;
    double dt_override = 0.0;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string default_out_dir() {
    if (const char* env = std::getenv("ELZSIM_OUT_DIR"); env && *env) return env;
    return "elzsim-out";
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void print_summary(const Scenario& sc, const RunSummary& sum) {
    std::printf("scenario: %s (%s)  t_end=%g s  dt=%g s\n",
                sc.name.empty() ? "<unnamed>" : sc.name.c_str(), to_string(sc.topology),
                sum.t_end, sum.dt);
    int idx = 0;
    for (const auto& seg : sum.segments) {
        ++idx;
        const auto& ch = seg.metrics.channels;
        auto mean = [&](const char* name) {
            const auto it = ch.find(name);
            return it == ch.end() ? 0.0 : it->second.mean;
        };
        std::printf("segment %d [%s, %s] s:", idx, fmt("%.4f", seg.t_start).c_str(),
                    fmt("%.4f", seg.t_end).c_str());
        if (sc.topology == Topology::GridSupport) {
            std::printf(" p_gen=%.2f kW  p_load=%.2f kW  p_elz=%.2f kW  f=%.4f Hz\n",
                        mean("p_gen_W") / 1e3, mean("p_load_W") / 1e3, mean("p_elz_W") / 1e3,
                        mean("f_Hz"));
        } else {
            std::printf(" P=%.2f kW  Q=%.2f kVAr  v_dc=%.2f V  v_stack=%.2f V  i_stack=%.1f A",
                        mean("p_ac_W") / 1e3, mean("q_ac_var") / 1e3, mean("v_dc_V"),
                        mean("v_stack_V"), mean("i_stack_A"));
            if (seg.metrics.has_efficiency)
                std::printf("  efficiency=%.3f %%", 100.0 * seg.metrics.efficiency);
            std::printf("\n");
        }
    }
    for (const auto& st : sum.settlings) {
        if (st.result.settled)
            std::printf("settling (%s, %.0f%% band) after t=%g s: %.3f ms\n", st.channel.c_str(),
                        100.0 * st.band, st.t_event, 1e3 * st.result.time);
        else
            std::printf("settling (%s, %.0f%% band) after t=%g s: not settled within the trace\n",
                        st.channel.c_str(), 100.0 * st.band, st.t_event);
    }
    if (sum.violations.any()) {
        std::printf("violations:%s%s", sum.violations.boost ? " boost-limit" : "",
                    sum.violations.reference_clamped ? " reference-clamped" : "");
        if (sum.violations.current_limit_hits > 0)
            std::printf(" current-limit(x%ld)", sum.violations.current_limit_hits);
        std::printf("\n");
    } else {
        std::printf("violations: none\n");
    }
}

int do_run(const RunRequest& req) {
    if (req.preset.empty() == req.scenario_path.empty()) {
        std::cerr << "run: give exactly one of --preset or --scenario\n";
        return 1;
    }
    Scenario sc =
        req.preset.empty() ? parse_scenario(read_file(req.scenario_path)) : preset_scenario(req.preset);
    if (req.dt_override > 0.0) {
        sc.solver.dt = req.dt_override;
        validate_scenario(sc);
    }

    const SimOutput out = simulate(sc, req.strict);
    const RunSummary sum = summarize_run(sc, out);

    namespace fs = std::filesystem;
    fs::create_directories(req.out_dir);
    const fs::path dir(req.out_dir);
    write_trace_csv(out.trace, (dir / "trace.csv").string());
    if (req.format == "json")
        std::ofstream((dir / "trace.json").string(), std::ios::binary) << trace_to_json(out.trace);
    std::ofstream((dir / "metrics.json").string(), std::ios::binary) << summary_to_json(sum);
    write_panels(sc, out.trace, dir.string());

    print_summary(sc, sum);
    std::printf("wrote: %s/trace.csv %s/metrics.json %s/panels/\n", req.out_dir.c_str(),
                req.out_dir.c_str(), req.out_dir.c_str());
    return 0;
}

int do_list(const std::string& format) {
    if (format == "json") {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& info : preset_catalog()) {
            const Scenario sc = preset_scenario(info.name);
            j.push_back({{"name", info.name},
                         {"description", info.description},
                         {"scenario", nlohmann::ordered_json::parse(serialize_scenario(sc))}});
        }
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& info : preset_catalog())
            std::printf("%-6s %s\n", info.name.c_str(), info.description.c_str());
    }
    return 0;
}

int do_validate(const std::string& path) {
    const Scenario sc = parse_scenario(read_file(path));
    std::printf("OK: %s (%s), %zu events, t_end=%g s\n",
                sc.name.empty() ? "<unnamed>" : sc.name.c_str(), to_string(sc.topology),
                sc.events.size(), sc.solver.t_end);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elzsim: grid-connected PEM electrolyzer power-conversion simulator"};
    app.require_subcommand(1);

    RunRequest req;
    req.out_dir = default_out_dir();

    auto* run = app.add_subcommand("run", "simulate a scenario and write trace/metrics");
    run->add_option("--preset", req.preset, "preset name (see list-presets)");
    run->add_option("--scenario", req.scenario_path, "scenario JSON file");
    run->add_option("--out", req.out_dir, "output directory (default $ELZSIM_OUT_DIR)");
    run->add_option("--dt", req.dt_override, "override the solver step [s]");
    run->add_flag("--strict", req.strict, "abort on constraint violations (exit 3)");
    run->add_option("--format", req.format, "trace format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));

    std::string list_format = "text";
    auto* list = app.add_subcommand("list-presets", "print the preset catalog");
    list->add_option("--format", list_format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "check a scenario file");
    val->add_option("file", validate_path, "scenario JSON file")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return do_run(req);
        if (list->parsed()) return do_list(list_format);
        if (val->parsed()) return do_validate(validate_path);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical divergence: " << e.what() << "\n";
        return 2;
    } catch (const ConstraintViolationError& e) {
        std::cerr << "constraint violation: " << e.what() << "\n";
        return 3;
    } catch (const InfeasibleReferenceError& e) {
        std::cerr << "infeasible reference: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
