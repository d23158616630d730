#pragma once

// Trace and metrics serialization: CSV traces (full-precision decimal
// floats, fixed header contract), metrics/summary JSON, and the per-figure
// panel bundles for external plotting.

#include <string>

#include "elzsim/engine.hpp"

namespace elzsim {

/// CSV with one header row: time_s plus the channel names, "%.17g" floats.
std::string trace_to_csv(const Trace& t);
void write_trace_csv(const Trace& t, const std::string& path);

/// Same data as a JSON document (arrays per channel).
std::string trace_to_json(const Trace& t);

/// Parse a CSV produced by trace_to_csv (used by tests and post-processing).
Trace read_trace_csv(const std::string& path);

/// Steady-state windows, settling measurements and violations of one run.
struct RunSummary {
    std::string scenario_name;
    Topology topology = Topology::NoDcDc;
    double dt = 0.0;
    double t_end = 0.0;

    struct Segment {
        double t_start = 0.0, t_end = 0.0;  //!< span between reference events
        Metrics metrics;                     //!< over the trailing window of the span
    };
    std::vector<Segment> segments;

    struct Settling {
        std::string channel;
        double t_event = 0.0;
        double band = 0.02;
        SettlingResult result;
    };
    std::vector<Settling> settlings;

    Violations violations;
};

/// Segment the run at its events, extract steady windows (trailing 40 % of
/// each segment) and settling times for step events.
RunSummary summarize_run(const Scenario& s, const SimOutput& out);

std::string summary_to_json(const RunSummary& s);

/// Panel CSV bundle mirroring the figure layout for the topology; files are
/// written under <dir>/panels/.
void write_panels(const Scenario& s, const Trace& t, const std::string& dir);

}  // namespace elzsim
