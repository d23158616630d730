#pragma once

// Deterministic fixed-step simulation: component wiring per topology,
// event schedule, trapezoidal integration with exact power bookkeeping,
// trace recording and metric extraction.

#include <map>
#include <string>
#include <vector>

#include "elzsim/scenario.hpp"

namespace elzsim {

struct Trace {
    std::vector<double> time;
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;  //!< one vector per name, same order
    std::vector<Event> markers;                 //!< applied events

    std::size_t size() const { return time.size(); }
    bool has_channel(const std::string& name) const;
    const std::vector<double>& channel(const std::string& name) const;
};

struct Violations {
    bool boost = false;              //!< DC voltage fell below sqrt(2)*v_ll
    bool reference_clamped = false;  //!< an infeasible reference was clamped to its floor
    long current_limit_hits = 0;     //!< steps on the current-reference limit
    bool any() const { return boost || reference_clamped || current_limit_hits > 0; }
};

struct SimOutput {
    Trace trace;
    Violations violations;
};

struct ChannelStats {
    double mean = 0.0;
    double max_dev = 0.0;  //!< max |x - mean| over the window
};

struct Metrics {
    double t1 = 0.0, t2 = 0.0;
    std::map<std::string, ChannelStats> channels;
    bool has_efficiency = false;
    double efficiency = 0.0;  //!< mean(p_stack_W)/mean(p_ac_W) over the window
};

struct SettlingResult {
    bool settled = false;
    double time = 0.0;  //!< [s] from the event until the channel stays in band
};

/// Run a scenario. Deterministic: the same scenario on the same build gives a
/// bit-identical trace. In strict mode constraint violations (boost limit,
/// current limit, infeasible reference) abort with ConstraintViolationError.
SimOutput simulate(const Scenario& s, bool strict = false);

/// Per-channel mean and max deviation over [t1, t2], plus conversion
/// efficiency where the power channels exist.
Metrics extract_steady_state(const Trace& t, double t1, double t2);

/// Time from t_event until the channel enters and remains within +/-band
/// (relative to its final steady value). A channel that never settles inside
/// the trace reports settled = false rather than an error.
SettlingResult settling_time(const Trace& t, const std::string& channel, double t_event,
                             double band);

}  // namespace elzsim
