#include "elzsim/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "elzsim/control.hpp"

namespace elzsim {

namespace {

void append_g17(std::string& out, double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    f << content;
    if (!f) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace

std::string trace_to_csv(const Trace& t) {
    std::string out = "time_s";
    for (const auto& n : t.channel_names) {
        out += ',';
        out += n;
    }
    out += '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        append_g17(out, t.time[i]);
        for (const auto& ch : t.channels) {
            out += ',';
            append_g17(out, ch[i]);
        }
        out += '\n';
    }
    return out;
}

void write_trace_csv(const Trace& t, const std::string& path) {
    write_file(path, trace_to_csv(t));
}

std::string trace_to_json(const Trace& t) {
    nlohmann::ordered_json j;
    j["time_s"] = t.time;
    for (std::size_t c = 0; c < t.channel_names.size(); ++c)
        j[t.channel_names[c]] = t.channels[c];
    return j.dump() + "\n";
}

Trace read_trace_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw ConfigError("empty trace file '" + path + "'");
    Trace t;
    {
        std::stringstream ss(line);
        std::string field;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first) {
                if (field != "time_s") throw ConfigError("trace header must start with time_s");
                first = false;
            } else {
                t.channel_names.push_back(field);
            }
        }
    }
    t.channels.resize(t.channel_names.size());
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t col = 0;
        while (std::getline(ss, field, ',')) {
            const double x = std::strtod(field.c_str(), nullptr);
            if (col == 0)
                t.time.push_back(x);
            else if (col - 1 < t.channels.size())
                t.channels[col - 1].push_back(x);
            ++col;
        }
        if (col != t.channel_names.size() + 1)
            throw ConfigError("trace row with wrong column count in '" + path + "'");
    }
    return t;
}

RunSummary summarize_run(const Scenario& s, const SimOutput& out) {
    RunSummary sum;
    sum.scenario_name = s.name;
    sum.topology = s.topology;
    sum.dt = s.solver.dt;
    sum.t_end = s.solver.t_end;
    sum.violations = out.violations;
    const Trace& t = out.trace;
    if (t.size() == 0) return sum;

    // Segment boundaries: start, each reference event, end of trace.
    std::vector<double> bounds{t.time.front()};
    for (const Event& e : t.markers)
        if (e.t > bounds.back()) bounds.push_back(e.t);
    bounds.push_back(t.time.back());

    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double span = bounds[i + 1] - bounds[i];
        if (span < 4.0 * s.solver.dt * s.recording.decimation) continue;
        RunSummary::Segment seg;
        seg.t_start = bounds[i];
        seg.t_end = bounds[i + 1];
        const double w1 = bounds[i + 1] - 0.4 * span;
        seg.metrics = extract_steady_state(t, w1, bounds[i + 1]);
        sum.segments.push_back(seg);
    }

    const std::string step_channel =
        s.topology == Topology::GridSupport ? "p_elz_W" : "p_ac_W";
    if (t.has_channel(step_channel)) {
        for (const Event& e : t.markers) {
            if (e.kind != EventKind::SetP && e.kind != EventKind::SetLoad) continue;
            RunSummary::Settling st;
            st.channel = s.topology == Topology::GridSupport ? "p_elz_W" : step_channel;
            st.t_event = e.t;
            st.band = 0.02;
            st.result = settling_time(t, st.channel, e.t, st.band);
            sum.settlings.push_back(st);
        }
    }
    return sum;
}

std::string summary_to_json(const RunSummary& s) {
    nlohmann::ordered_json j;
    j["scenario"] = s.scenario_name;
    j["topology"] = to_string(s.topology);
    j["dt_s"] = s.dt;
    j["t_end_s"] = s.t_end;
    j["segments"] = nlohmann::ordered_json::array();
    for (const auto& seg : s.segments) {
        nlohmann::ordered_json js;
        js["t_start_s"] = seg.t_start;
        js["t_end_s"] = seg.t_end;
        js["window"] = {seg.metrics.t1, seg.metrics.t2};
        if (seg.metrics.has_efficiency) js["efficiency"] = seg.metrics.efficiency;
        nlohmann::ordered_json ch;
        for (const auto& [name, st] : seg.metrics.channels)
            ch[name] = {{"mean", st.mean}, {"max_dev", st.max_dev}};
        js["channels"] = std::move(ch);
        j["segments"].push_back(std::move(js));
    }
    j["settling"] = nlohmann::ordered_json::array();
    for (const auto& st : s.settlings) {
        j["settling"].push_back({{"channel", st.channel},
                                 {"t_event_s", st.t_event},
                                 {"band", st.band},
                                 {"settled", st.result.settled},
                                 {"time_s", st.result.time}});
    }
    j["violations"] = {{"boost", s.violations.boost},
                       {"reference_clamped", s.violations.reference_clamped},
                       {"current_limit_hits", s.violations.current_limit_hits}};
    return j.dump(2) + "\n";
}

namespace {

std::string columns_csv(const Trace& t, const std::vector<std::string>& cols) {
    std::string out = "time_s";
    for (const auto& c : cols) out += "," + c;
    out += '\n';
    std::vector<const std::vector<double>*> data;
    for (const auto& c : cols) data.push_back(&t.channel(c));
    for (std::size_t i = 0; i < t.size(); ++i) {
        append_g17(out, t.time[i]);
        for (const auto* ch : data) {
            out += ',';
            append_g17(out, (*ch)[i]);
        }
        out += '\n';
    }
    return out;
}

std::string phase_currents_csv(const Scenario& s, const Trace& t) {
    // Reconstruct the instantaneous phase currents from the dq channels and
    // the grid angle omega*t (the converter scenarios run on a stiff grid).
    const double omega = s.rectifier.ac.omega_nominal();
    const auto& id = t.channel("i_d_A");
    const auto& iq = t.channel("i_q_A");
    std::string out = "time_s,i_a_A,i_b_A,i_c_A\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Abc abc = dq_to_abc(wrap_angle(omega * t.time[i]), {id[i], iq[i]});
        append_g17(out, t.time[i]);
        out += ',';
        append_g17(out, abc.a);
        out += ',';
        append_g17(out, abc.b);
        out += ',';
        append_g17(out, abc.c);
        out += '\n';
    }
    return out;
}

}  // namespace

void write_panels(const Scenario& s, const Trace& t, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base = fs::path(dir) / "panels";
    fs::create_directories(base);
    auto put = [&](const char* name, const std::string& content) {
        write_file((base / name).string(), content);
    };
    switch (s.topology) {
        case Topology::NoDcDc:
            put("power.csv", columns_csv(t, {"p_ac_W", "q_ac_var"}));
            put("dc_side.csv", columns_csv(t, {"v_dc_V", "i_stack_A"}));
            put("ac_currents.csv", phase_currents_csv(s, t));
            break;
        case Topology::WithDcDc:
            put("power.csv", columns_csv(t, {"p_ac_W", "q_ac_var"}));
            put("link.csv", columns_csv(t, {"v_dc_V"}));
            put("stack.csv", columns_csv(t, {"v_stack_V", "i_stack_A"}));
            put("ac_currents.csv", phase_currents_csv(s, t));
            break;
        case Topology::GridSupport:
            put("powers.csv", columns_csv(t, {"p_load_W", "p_elz_W", "p_gen_W"}));
            put("frequency.csv", columns_csv(t, {"f_Hz"}));
            break;
    }
}

}  // namespace elzsim
