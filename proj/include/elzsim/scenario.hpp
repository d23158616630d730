#pragma once

// Scenario definition: topology selection, fully materialized parameter set,
// reference/control configuration, event schedule and solver settings, plus
// JSON (de)serialization, validation, and the preset library.

#include <string>
#include <vector>

#include "elzsim/control.hpp"
#include "elzsim/converter.hpp"
#include "elzsim/grid.hpp"
#include "elzsim/stack.hpp"

namespace elzsim {

enum class Topology { NoDcDc, WithDcDc, GridSupport };

/// Stack representation inside the engine: the reduced static law
/// v_rev + r_total*i (instant settling, matches the reported steady points)
/// or the full RC-branch dynamic form.
enum class StackModelKind { Static, Dynamic };

enum class EventKind { SetP, SetQ, SetVdc, SetIdc, SetLoad };

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::SetP;
    double value = 0.0;
    bool operator==(const Event&) const = default;
};

struct SolverSettings {
    double dt = 1e-5;    //!< [s] fixed step
    double t_end = 0.05; //!< [s]
    std::string method = "trapezoidal";
    bool operator==(const SolverSettings&) const = default;
};

struct RecordingSettings {
    int decimation = 1;                 //!< record every n-th step
    std::vector<std::string> channels;  //!< empty = all channels of the topology
    bool operator==(const RecordingSettings&) const = default;
};

/// Rectifier outer-loop selection and initial references. Fields that do not
/// apply to the chosen mode/topology are carried but ignored.
struct ControlRefs {
    OuterMode mode = OuterMode::ActiveReactive;
    double p_ref = 0.0;      //!< [W]
    double q_ref = 0.0;      //!< [VAr]
    double vdc_ref = 0.0;    //!< [V] for DcVoltageReactive
    double idc_ref = 0.0;    //!< [A] for DcCurrentReactive
    double vlink_ref = 0.0;  //!< [V] DC-link target (DC/DC topology)
    bool operator==(const ControlRefs&) const = default;
};

/// All controller gains, materialized so a scenario file pins them exactly.
struct ControlGains {
    PiGains current;       //!< inner dq current loops
    PiGains dc_voltage;    //!< Vdc-Q outer loop
    PiGains dc_current;    //!< Idc-Q outer loop
    PiGains link_voltage;  //!< link-voltage outer loop (DC/DC topology)
    PiGains buck_current;  //!< buck inductor current loop
    PiGains power_trim;    //!< grid-power trim cascaded on the buck loop
    PllGains pll;
    double i_limit = 0.0;      //!< [A] AC current-reference limit
    double i_ref_slew = 1e6;   //!< [A/s] AC current-reference ramp limit
    double buck_i_ref_slew = 0.5e6;  //!< [A/s] buck current-reference ramp limit
    double trim_limit = 500.0; //!< [A] authority of the power trim
    bool operator==(const ControlGains&) const = default;
};

/// Grid-support section: generator, line, dynamic load and the aggregated
/// electrolyzer converter (first-order response fitted from the EMT runs).
struct GridSection {
    GeneratorParams generator;
    double line_r = 4e-3;             //!< [ohm]
    double line_l = 44e-6;            //!< [H]
    double load_nominal_va = 1e6;     //!< [VA] dynamic-load base
    double load_ramp_pu_per_s = 100.0;//!< [pu/s] on the load base
    double load_p0 = 600e3;           //!< [W] initial dynamic load
    double elz_response_time = 1.5e-4;//!< [s] converter closed-loop fit
    double elz_transformer_ratio = 480.0 / 64.0;
    bool operator==(const GridSection&) const = default;
};

struct Scenario {
    std::string name;
    std::string description;
    Topology topology = Topology::NoDcDc;
    SolverSettings solver;
    RecordingSettings recording;
    ControlRefs control;
    std::vector<Event> events;

    StackParams stack;
    StackModelKind stack_model = StackModelKind::Static;
    RectifierParams rectifier;
    BuckParams buck;
    LossModel rectifier_loss;
    LossModel buck_loss;
    ControlGains gains;
    SupervisorConfig supervisor;
    GridSection grid;

    bool operator==(const Scenario&) const = default;
};

inline bool operator==(const PiGains& a, const PiGains& b) {
    return a.kp == b.kp && a.ki == b.ki;
}
inline bool operator==(const PllGains& a, const PllGains& b) {
    return a.kp == b.kp && a.ki == b.ki && a.omega_ff == b.omega_ff;
}
inline bool operator==(const StackParams& a, const StackParams& b) {
    return a.v_rev == b.v_rev && a.r_total == b.r_total && a.r1_s == b.r1_s &&
           a.c1_s == b.c1_s && a.i_rated == b.i_rated && a.p_rated == b.p_rated;
}
inline bool operator==(const AcSideParams& a, const AcSideParams& b) {
    return a.r_ac == b.r_ac && a.l_ac == b.l_ac && a.v_ll_secondary == b.v_ll_secondary &&
           a.f_nominal == b.f_nominal && a.turns_ratio == b.turns_ratio;
}
inline bool operator==(const RectifierParams& a, const RectifierParams& b) {
    return a.ac == b.ac && a.c_dc == b.c_dc;
}
inline bool operator==(const BuckParams& a, const BuckParams& b) {
    return a.l_dc == b.l_dc && a.r_dc == b.r_dc && a.c_out == b.c_out;
}
inline bool operator==(const LossModel& a, const LossModel& b) {
    return a.v_sw == b.v_sw && a.v_d == b.v_d && a.k_cond == b.k_cond && a.p_fixed == b.p_fixed;
}
inline bool operator==(const SupervisorConfig& a, const SupervisorConfig& b) {
    return a.p_net_target == b.p_net_target && a.telemetry_delay == b.telemetry_delay &&
           a.p_min == b.p_min && a.p_max == b.p_max && a.ramp_limit == b.ramp_limit &&
           a.droop_gain == b.droop_gain && a.response_time == b.response_time &&
           a.f_nominal == b.f_nominal;
}
inline bool operator==(const GeneratorParams& a, const GeneratorParams& b) {
    return a.s_rated == b.s_rated && a.v_ll == b.v_ll && a.f_nominal == b.f_nominal &&
           a.j_g == b.j_g && a.kp_speed == b.kp_speed && a.ki_speed == b.ki_speed &&
           a.r_s == b.r_s && a.l_s == b.l_s;
}

/// Materialized defaults for a topology: Appendix-style parameter set,
/// calibrated loss models, and gains derived from the plant values.
Scenario default_scenario(Topology topology);

/// Channel names (with unit suffixes) recorded for a topology, in trace order.
const std::vector<std::string>& topology_channels(Topology topology);

/// Structural validation; throws ConfigError naming the offending field.
/// Events are expected sorted (parse_scenario sorts them).
void validate_scenario(const Scenario& s);

/// Parse a scenario from JSON text: topology defaults overlaid with the
/// fields present in the document. Unknown keys are errors.
Scenario parse_scenario(const std::string& json_text);

/// Serialize every field; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

struct PresetInfo {
    std::string name;
    std::string description;
};

/// The preset catalog (fig8, fig9, fig11, fig12, fig14).
const std::vector<PresetInfo>& preset_catalog();

/// Build a preset scenario by name; throws ConfigError for unknown names.
Scenario preset_scenario(const std::string& name);

const char* to_string(Topology t);
const char* to_string(EventKind k);
const char* to_string(OuterMode m);

}  // namespace elzsim
