#include "elzsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>

#include <json.hpp>

namespace elzsim {

using json = nlohmann::ordered_json;

namespace {

// Calibration targets for the conduction-loss models: measured conversion
// efficiencies of the reference system at known operating points.
struct CalTargets {
    // Single-stage build on the 480/75 secondary.
    static constexpr double single_p1 = 200e3, single_q1 = 50e3, single_loss1 = 5244.0;
    static constexpr double single_p2 = 500e3, single_q2 = 50e3, single_loss2 = 12500.0;
    // Two-stage build on the 480/125 secondary with a 250 V link.
    static constexpr double two_p1 = 2e3, two_q1 = 0.0, two_loss1 = 100.0;
    static constexpr double two_p2 = 500e3, two_q2 = 50e3, two_loss2 = 20e3;
};

LossModel calibrated_single_stage_loss(const AcSideParams& ac) {
    LossModel base;
    const double v_d = ac.v_phase_peak();
    auto point = [&](double p, double q, double target) {
        const double amp = dq_current_amplitude(p, q, v_d);
        const double resistive = 1.5 * ac.r_ac * amp * amp;
        return std::pair{conduction_base(amp, base), target - resistive};
    };
    const auto [u1, y1] = point(CalTargets::single_p1, CalTargets::single_q1, CalTargets::single_loss1);
    const auto [u2, y2] = point(CalTargets::single_p2, CalTargets::single_q2, CalTargets::single_loss2);
    const auto [k, pf] = fit_conduction_two_point(u1, y1, u2, y2);
    base.k_cond = k;
    base.p_fixed = pf;
    return base;
}

std::pair<LossModel, LossModel> calibrated_two_stage_loss(const AcSideParams& ac,
                                                          const BuckParams& buck,
                                                          const StackParams& stack,
                                                          double v_link) {
    LossModel base;
    const double v_d = ac.v_phase_peak();
    // Conduction bases at a self-consistent operating point: the stack
    // absorbs the grid power minus the target loss.
    auto point = [&](double p, double q, double target) {
        const double amp = dq_current_amplitude(p, q, v_d);
        const double i_st = current_for_power(stack, p - target);
        const double v_st = static_voltage(stack, i_st);
        const double duty = (v_st + buck.r_dc * i_st) / v_link;
        const double cond = conduction_base(amp, base) +
                            i_st * (duty * base.v_sw + (1.0 - duty) * base.v_d);
        const double resistive = 1.5 * ac.r_ac * amp * amp + buck.r_dc * i_st * i_st;
        return std::pair{cond, target - resistive};
    };
    const auto [u1, y1] = point(CalTargets::two_p1, CalTargets::two_q1, CalTargets::two_loss1);
    const auto [u2, y2] = point(CalTargets::two_p2, CalTargets::two_q2, CalTargets::two_loss2);
    const auto [k, pf] = fit_conduction_two_point(u1, y1, u2, y2);
    LossModel rect = base, dcdc = base;
    rect.k_cond = dcdc.k_cond = k;
    rect.p_fixed = dcdc.p_fixed = 0.5 * pf;  // floor split across the stages
    return {rect, dcdc};
}

ControlGains default_gains(const StackParams& stack, const RectifierParams& rect,
                           const BuckParams& buck, double v_link_ref) {
    ControlGains g;
    const double v_g = rect.ac.v_phase_peak();

    // Inner current loops: pole-zero cancellation against l_ac/r_ac at 1 kHz,
    // which makes the closed loop first order with tau = 1/wc.
    const double wc_i = two_pi * 1000.0;
    g.current = {wc_i * rect.ac.l_ac, wc_i * rect.ac.r_ac};

    // PLL at 50 Hz, damping 0.707, on the normalized q-axis voltage.
    const double wn = two_pi * 50.0;
    g.pll = {2.0 * 0.707 * wn, wn * wn, rect.ac.omega_nominal()};

    // DC-voltage loop at 100 Hz. The stack self-regulates the link with a
    // pole at 1/(r_total*C) well above the target bandwidth, so the loop is
    // integral-dominant: Ki places unity gain at wc, Kp is a small assist
    // (large sampled P-gain against the fast pole goes discretely unstable).
    const double wc_v = two_pi * 100.0;
    const double pole = 1.0 / (stack.r_total * rect.c_dc);
    const double v_op = static_voltage(stack, 0.5 * stack.i_rated);
    const double plant_v = 1.5 * v_g / (v_op * rect.c_dc);
    const double mag_at_wc = std::sqrt(wc_v * wc_v + pole * pole) / plant_v;
    g.dc_voltage = {0.1 * mag_at_wc, wc_v * mag_at_wc};

    // Stack-current loop: same plant scaled by the incremental resistance.
    g.dc_current = {g.dc_voltage.kp * stack.r_total, g.dc_voltage.ki * stack.r_total};

    // Link-voltage loop (DC/DC topology): near-pure integrator plant.
    const double v_lk = v_link_ref > 0.0 ? v_link_ref : 250.0;
    const double plant_lk = 1.5 * v_g / (v_lk * rect.c_dc);
    g.link_voltage = {wc_v / plant_lk, 0.0};
    g.link_voltage.ki = g.link_voltage.kp * wc_v / 5.0;

    // Buck current loop at 200 Hz on the big DC inductor.
    const double wc_b = two_pi * 200.0;
    g.buck_current = {wc_b * buck.l_dc, wc_b * buck.l_dc * wc_b / 5.0};

    // Grid-power trim: pure integral at 50 Hz through the stack's W-per-A.
    const double w_per_a = static_voltage(stack, 0.5 * stack.i_rated);
    g.power_trim = {0.0, (two_pi * 50.0) / w_per_a};

    g.i_limit = stack.p_rated / (1.5 * v_g) * 1.05;
    // Reference slew sized so L*di/dt stays inside the modulation margin and
    // the link is never drained to magnetize the AC inductors.
    g.i_ref_slew = 0.3 * v_g / rect.ac.l_ac;
    g.buck_i_ref_slew = 0.5e6;
    g.trim_limit = 500.0;
    return g;
}

}  // namespace

Scenario default_scenario(Topology topology) {
    Scenario s;
    s.topology = topology;

    s.stack = scale_stack(CellGroupParams{}, 3, 35, 70, 145.5, 0.02);

    switch (topology) {
        case Topology::NoDcDc: {
            s.rectifier.ac.v_ll_secondary = 75.0;
            s.rectifier.ac.turns_ratio = 480.0 / 75.0;
            s.rectifier_loss = calibrated_single_stage_loss(s.rectifier.ac);
            s.control.mode = OuterMode::ActiveReactive;
            s.control.p_ref = 200e3;
            s.control.q_ref = 50e3;
            break;
        }
        case Topology::WithDcDc: {
            s.rectifier.ac.v_ll_secondary = 125.0;
            s.rectifier.ac.turns_ratio = 480.0 / 125.0;
            s.control.mode = OuterMode::LinkVoltageReactive;
            s.control.vlink_ref = 250.0;
            s.control.p_ref = 200e3;
            s.control.q_ref = 50e3;
            std::tie(s.rectifier_loss, s.buck_loss) =
                calibrated_two_stage_loss(s.rectifier.ac, s.buck, s.stack, s.control.vlink_ref);
            break;
        }
        case Topology::GridSupport: {
            s.solver.dt = 1e-4;
            s.solver.t_end = 10.0;
            s.rectifier.ac.v_ll_secondary = 64.0;
            s.rectifier.ac.turns_ratio = 480.0 / 64.0;
            s.rectifier_loss = calibrated_single_stage_loss(AcSideParams{
                .v_ll_secondary = 75.0, .turns_ratio = 480.0 / 75.0});
            s.supervisor.p_net_target = 1150e3;
            break;
        }
    }
    s.gains = default_gains(s.stack, s.rectifier, s.buck, s.control.vlink_ref);
    return s;
}

const std::vector<std::string>& topology_channels(Topology topology) {
    static const std::vector<std::string> no_dcdc{
        "p_ac_W",  "q_ac_var", "p_stack_W", "p_loss_W", "v_dc_V",
        "v_stack_V", "i_stack_A", "i_d_A",   "i_q_A",    "m_d",
        "m_q",     "f_pll_Hz", "eta",       "boost_violation", "residual_W"};
    static const std::vector<std::string> with_dcdc{
        "p_ac_W",  "q_ac_var", "p_stack_W", "p_loss_W", "v_dc_V",
        "v_stack_V", "i_stack_A", "i_l_A",  "duty",     "i_d_A",
        "i_q_A",   "m_d",      "m_q",       "f_pll_Hz", "eta",
        "boost_violation", "residual_W"};
    static const std::vector<std::string> grid_support{
        "p_gen_W", "p_mech_W", "p_load_W", "p_elz_W", "p_elz_ref_W",
        "f_Hz",    "p_net_W",  "v_bus_V",  "residual_W"};
    switch (topology) {
        case Topology::NoDcDc: return no_dcdc;
        case Topology::WithDcDc: return with_dcdc;
        case Topology::GridSupport: return grid_support;
    }
    return no_dcdc;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void validate_event_kind(const Scenario& s, const Event& e) {
    const std::string where = "event at t=" + std::to_string(e.t);
    switch (s.topology) {
        case Topology::NoDcDc: {
            const bool pq = s.control.mode == OuterMode::ActiveReactive;
            const bool vdc = s.control.mode == OuterMode::DcVoltageReactive;
            const bool idc = s.control.mode == OuterMode::DcCurrentReactive;
            switch (e.kind) {
                case EventKind::SetP: require(pq, where + ": set_p needs P-Q mode"); break;
                case EventKind::SetQ: break;
                case EventKind::SetVdc: require(vdc, where + ": set_vdc needs Vdc-Q mode"); break;
                case EventKind::SetIdc: require(idc, where + ": set_idc needs Idc-Q mode"); break;
                case EventKind::SetLoad:
                    throw ConfigError(where + ": set_load is grid-support only");
            }
            break;
        }
        case Topology::WithDcDc:
            require(e.kind == EventKind::SetP || e.kind == EventKind::SetQ ||
                        e.kind == EventKind::SetVdc,
                    where + ": only set_p/set_q/set_vdc apply to the DC/DC topology");
            break;
        case Topology::GridSupport:
            require(e.kind == EventKind::SetLoad, where + ": only set_load applies to grid support");
            break;
    }
    if (e.kind == EventKind::SetP || e.kind == EventKind::SetIdc || e.kind == EventKind::SetLoad)
        require(e.value >= 0.0, where + ": value must be >= 0");
    if (e.kind == EventKind::SetVdc) require(e.value > 0.0, where + ": voltage must be > 0");
}

}  // namespace

void validate_scenario(const Scenario& s) {
    require(s.solver.dt > 0.0, "solver.dt must be > 0");
    require(s.solver.t_end > s.solver.dt, "solver.t_end must exceed dt");
    require(s.solver.method == "trapezoidal", "solver.method: only 'trapezoidal' is available");
    require(s.recording.decimation >= 1, "recording.decimation must be >= 1");

    const auto& known = topology_channels(s.topology);
    for (const auto& ch : s.recording.channels)
        require(std::find(known.begin(), known.end(), ch) != known.end(),
                "recording.channels: '" + ch + "' does not exist for topology " +
                    to_string(s.topology));

    require(s.stack.v_rev > 0.0 && s.stack.r_total > 0.0, "stack parameters must be positive");
    require(s.stack.r1_s > 0.0 && s.stack.c1_s > 0.0, "stack RC branch must be positive");
    require(s.stack.r_int() > 0.0, "stack r_total must exceed the RC branch resistance");
    require(s.rectifier.ac.l_ac > 0.0 && s.rectifier.ac.r_ac >= 0.0, "ac parameters must be physical");
    require(s.rectifier.ac.v_ll_secondary > 0.0 && s.rectifier.ac.turns_ratio > 0.0,
            "transformer parameters must be positive");
    require(s.rectifier.c_dc > 0.0, "c_dc must be > 0");
    require(s.buck.l_dc > 0.0 && s.buck.c_out > 0.0 && s.buck.r_dc >= 0.0,
            "buck parameters must be physical");
    for (const LossModel* lm : {&s.rectifier_loss, &s.buck_loss}) {
        require(lm->v_sw >= 0.0 && lm->v_d >= 0.0, "device drops must be >= 0");
        require(lm->k_cond > 0.0 && lm->p_fixed >= 0.0, "loss calibration must be physical");
    }
    require(s.gains.i_limit > 0.0, "gains.i_limit must be > 0");
    require(s.gains.i_ref_slew > 0.0, "gains.i_ref_slew must be > 0");
    require(s.gains.buck_i_ref_slew > 0.0, "gains.buck_i_ref_slew must be > 0");
    require(s.supervisor.p_min <= s.supervisor.p_max, "supervisor.p_min must be <= p_max");
    require(s.supervisor.telemetry_delay >= 0.0 && s.supervisor.ramp_limit >= 0.0 &&
                s.supervisor.response_time >= 0.0,
            "supervisor delays and limits must be >= 0");
    require(s.grid.generator.j_g > 0.0 && s.grid.generator.s_rated > 0.0,
            "generator parameters must be positive");

    switch (s.topology) {
        case Topology::NoDcDc:
            require(s.control.mode != OuterMode::LinkVoltageReactive,
                    "control.mode: link mode requires the DC/DC topology");
            if (s.control.mode == OuterMode::ActiveReactive)
                require(s.control.p_ref >= 0.0, "control.p_ref must be >= 0");
            if (s.control.mode == OuterMode::DcVoltageReactive)
                require(s.control.vdc_ref > 0.0, "control.vdc_ref must be > 0");
            if (s.control.mode == OuterMode::DcCurrentReactive)
                require(s.control.idc_ref >= 0.0, "control.idc_ref must be >= 0");
            break;
        case Topology::WithDcDc:
            require(s.control.mode == OuterMode::LinkVoltageReactive,
                    "control.mode: the DC/DC topology uses the link-voltage mode");
            require(s.control.vlink_ref > 0.0, "control.vlink_ref must be > 0");
            require(s.control.p_ref >= 0.0, "control.p_ref must be >= 0");
            break;
        case Topology::GridSupport:
            require(s.grid.load_p0 >= 0.0, "grid.load_p0 must be >= 0");
            require(s.supervisor.p_net_target > 0.0, "supervisor.p_net_target must be > 0");
            break;
    }

    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const Event& e = s.events[i];
        require(e.t >= 0.0 && e.t < s.solver.t_end,
                "event at t=" + std::to_string(e.t) + " outside [0, t_end)");
        if (i > 0) require(s.events[i - 1].t <= e.t, "events must be sorted by time");
        validate_event_kind(s, e);
    }
}

const char* to_string(Topology t) {
    switch (t) {
        case Topology::NoDcDc: return "no_dcdc";
        case Topology::WithDcDc: return "with_dcdc";
        case Topology::GridSupport: return "grid_support";
    }
    return "?";
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::SetP: return "p";
        case EventKind::SetQ: return "q";
        case EventKind::SetVdc: return "vdc";
        case EventKind::SetIdc: return "idc";
        case EventKind::SetLoad: return "load";
    }
    return "?";
}

const char* to_string(OuterMode m) {
    switch (m) {
        case OuterMode::ActiveReactive: return "pq";
        case OuterMode::DcVoltageReactive: return "vdc_q";
        case OuterMode::DcCurrentReactive: return "idc_q";
        case OuterMode::LinkVoltageReactive: return "link";
    }
    return "?";
}

namespace {

Topology topology_from_string(const std::string& s) {
    if (s == "no_dcdc") return Topology::NoDcDc;
    if (s == "with_dcdc") return Topology::WithDcDc;
    if (s == "grid_support") return Topology::GridSupport;
    throw ConfigError("topology: unknown value '" + s + "'");
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "p") return EventKind::SetP;
    if (s == "q") return EventKind::SetQ;
    if (s == "vdc") return EventKind::SetVdc;
    if (s == "idc") return EventKind::SetIdc;
    if (s == "load") return EventKind::SetLoad;
    throw ConfigError("events[].set: unknown value '" + s + "'");
}

OuterMode mode_from_string(const std::string& s) {
    if (s == "pq") return OuterMode::ActiveReactive;
    if (s == "vdc_q") return OuterMode::DcVoltageReactive;
    if (s == "idc_q") return OuterMode::DcCurrentReactive;
    if (s == "link") return OuterMode::LinkVoltageReactive;
    throw ConfigError("control.mode: unknown value '" + s + "'");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& item : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* k) { return item.key() == k; }))
            throw ConfigError(path + "." + item.key() + ": unknown field");
    }
}

double read_num(const json& j, const std::string& path, const char* key, double cur) {
    if (!j.contains(key)) return cur;
    if (!j[key].is_number()) throw ConfigError(path + "." + std::string(key) + ": expected a number");
    return j[key].get<double>();
}

int read_int(const json& j, const std::string& path, const char* key, int cur) {
    if (!j.contains(key)) return cur;
    if (!j[key].is_number_integer())
        throw ConfigError(path + "." + std::string(key) + ": expected an integer");
    return j[key].get<int>();
}

std::string read_str(const json& j, const std::string& path, const char* key, std::string cur) {
    if (!j.contains(key)) return cur;
    if (!j[key].is_string()) throw ConfigError(path + "." + std::string(key) + ": expected a string");
    return j[key].get<std::string>();
}

void overlay_pi(const json& j, const std::string& path, PiGains& g) {
    check_keys(j, path, {"kp", "ki"});
    g.kp = read_num(j, path, "kp", g.kp);
    g.ki = read_num(j, path, "ki", g.ki);
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario JSON: ") + e.what());
    }
    check_keys(j, "$", {"name", "description", "topology", "solver", "recording", "control",
                        "events", "params"});
    if (!j.contains("topology")) throw ConfigError("$.topology: required");

    Scenario s = default_scenario(topology_from_string(read_str(j, "$", "topology", "")));
    s.name = read_str(j, "$", "name", s.name);
    s.description = read_str(j, "$", "description", s.description);

    if (j.contains("solver")) {
        const auto& js = j["solver"];
        check_keys(js, "$.solver", {"dt", "t_end", "method"});
        s.solver.dt = read_num(js, "$.solver", "dt", s.solver.dt);
        s.solver.t_end = read_num(js, "$.solver", "t_end", s.solver.t_end);
        s.solver.method = read_str(js, "$.solver", "method", s.solver.method);
    }
    if (j.contains("recording")) {
        const auto& jr = j["recording"];
        check_keys(jr, "$.recording", {"decimation", "channels"});
        s.recording.decimation = read_int(jr, "$.recording", "decimation", s.recording.decimation);
        if (jr.contains("channels")) {
            if (!jr["channels"].is_array())
                throw ConfigError("$.recording.channels: expected an array of strings");
            s.recording.channels.clear();
            for (const auto& c : jr["channels"]) {
                if (!c.is_string()) throw ConfigError("$.recording.channels: expected strings");
                s.recording.channels.push_back(c.get<std::string>());
            }
        }
    }
    if (j.contains("control")) {
        const auto& jc = j["control"];
        check_keys(jc, "$.control", {"mode", "p_ref", "q_ref", "vdc_ref", "idc_ref", "vlink_ref"});
        if (jc.contains("mode")) s.control.mode = mode_from_string(read_str(jc, "$.control", "mode", ""));
        s.control.p_ref = read_num(jc, "$.control", "p_ref", s.control.p_ref);
        s.control.q_ref = read_num(jc, "$.control", "q_ref", s.control.q_ref);
        s.control.vdc_ref = read_num(jc, "$.control", "vdc_ref", s.control.vdc_ref);
        s.control.idc_ref = read_num(jc, "$.control", "idc_ref", s.control.idc_ref);
        s.control.vlink_ref = read_num(jc, "$.control", "vlink_ref", s.control.vlink_ref);
    }
    if (j.contains("events")) {
        if (!j["events"].is_array()) throw ConfigError("$.events: expected an array");
        s.events.clear();
        for (std::size_t i = 0; i < j["events"].size(); ++i) {
            const auto& je = j["events"][i];
            const std::string path = "$.events[" + std::to_string(i) + "]";
            check_keys(je, path, {"t", "set", "value"});
            Event e;
            e.t = read_num(je, path, "t", -1.0);
            if (!je.contains("set")) throw ConfigError(path + ".set: required");
            e.kind = event_kind_from_string(read_str(je, path, "set", ""));
            if (!je.contains("value")) throw ConfigError(path + ".value: required");
            e.value = read_num(je, path, "value", 0.0);
            s.events.push_back(e);
        }
        std::stable_sort(s.events.begin(), s.events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
    }
    if (j.contains("params")) {
        const auto& jp = j["params"];
        check_keys(jp, "$.params",
                   {"stack", "ac", "c_dc", "buck", "rectifier_loss", "buck_loss", "gains",
                    "supervisor", "grid"});
        if (jp.contains("stack")) {
            const auto& x = jp["stack"];
            check_keys(x, "$.params.stack",
                       {"model", "v_rev", "r_total", "r1_s", "c1_s", "i_rated", "p_rated"});
            if (x.contains("model")) {
                const std::string m = read_str(x, "$.params.stack", "model", "static");
                if (m == "static")
                    s.stack_model = StackModelKind::Static;
                else if (m == "dynamic")
                    s.stack_model = StackModelKind::Dynamic;
                else
                    throw ConfigError("$.params.stack.model: unknown value '" + m + "'");
            }
            s.stack.v_rev = read_num(x, "$.params.stack", "v_rev", s.stack.v_rev);
            s.stack.r_total = read_num(x, "$.params.stack", "r_total", s.stack.r_total);
            s.stack.r1_s = read_num(x, "$.params.stack", "r1_s", s.stack.r1_s);
            s.stack.c1_s = read_num(x, "$.params.stack", "c1_s", s.stack.c1_s);
            s.stack.i_rated = read_num(x, "$.params.stack", "i_rated", s.stack.i_rated);
            s.stack.p_rated = read_num(x, "$.params.stack", "p_rated", s.stack.p_rated);
        }
        if (jp.contains("ac")) {
            const auto& x = jp["ac"];
            check_keys(x, "$.params.ac",
                       {"r_ac", "l_ac", "v_ll_secondary", "f_nominal", "turns_ratio"});
            auto& ac = s.rectifier.ac;
            ac.r_ac = read_num(x, "$.params.ac", "r_ac", ac.r_ac);
            ac.l_ac = read_num(x, "$.params.ac", "l_ac", ac.l_ac);
            ac.v_ll_secondary = read_num(x, "$.params.ac", "v_ll_secondary", ac.v_ll_secondary);
            ac.f_nominal = read_num(x, "$.params.ac", "f_nominal", ac.f_nominal);
            ac.turns_ratio = read_num(x, "$.params.ac", "turns_ratio", ac.turns_ratio);
        }
        s.rectifier.c_dc = read_num(jp, "$.params", "c_dc", s.rectifier.c_dc);
        if (jp.contains("buck")) {
            const auto& x = jp["buck"];
            check_keys(x, "$.params.buck", {"l_dc", "r_dc", "c_out"});
            s.buck.l_dc = read_num(x, "$.params.buck", "l_dc", s.buck.l_dc);
            s.buck.r_dc = read_num(x, "$.params.buck", "r_dc", s.buck.r_dc);
            s.buck.c_out = read_num(x, "$.params.buck", "c_out", s.buck.c_out);
        }
        auto overlay_loss = [&](const char* key, LossModel& lm) {
            if (!jp.contains(key)) return;
            const auto& x = jp[key];
            const std::string path = std::string("$.params.") + key;
            check_keys(x, path, {"v_sw", "v_d", "k_cond", "p_fixed"});
            lm.v_sw = read_num(x, path, "v_sw", lm.v_sw);
            lm.v_d = read_num(x, path, "v_d", lm.v_d);
            lm.k_cond = read_num(x, path, "k_cond", lm.k_cond);
            lm.p_fixed = read_num(x, path, "p_fixed", lm.p_fixed);
        };
        overlay_loss("rectifier_loss", s.rectifier_loss);
        overlay_loss("buck_loss", s.buck_loss);
        if (jp.contains("gains")) {
            const auto& x = jp["gains"];
            check_keys(x, "$.params.gains",
                       {"current", "dc_voltage", "dc_current", "link_voltage", "buck_current",
                        "power_trim", "pll", "i_limit", "i_ref_slew", "buck_i_ref_slew",
                        "trim_limit"});
            if (x.contains("current")) overlay_pi(x["current"], "$.params.gains.current", s.gains.current);
            if (x.contains("dc_voltage"))
                overlay_pi(x["dc_voltage"], "$.params.gains.dc_voltage", s.gains.dc_voltage);
            if (x.contains("dc_current"))
                overlay_pi(x["dc_current"], "$.params.gains.dc_current", s.gains.dc_current);
            if (x.contains("link_voltage"))
                overlay_pi(x["link_voltage"], "$.params.gains.link_voltage", s.gains.link_voltage);
            if (x.contains("buck_current"))
                overlay_pi(x["buck_current"], "$.params.gains.buck_current", s.gains.buck_current);
            if (x.contains("power_trim"))
                overlay_pi(x["power_trim"], "$.params.gains.power_trim", s.gains.power_trim);
            if (x.contains("pll")) {
                const auto& xp = x["pll"];
                check_keys(xp, "$.params.gains.pll", {"kp", "ki", "omega_ff"});
                s.gains.pll.kp = read_num(xp, "$.params.gains.pll", "kp", s.gains.pll.kp);
                s.gains.pll.ki = read_num(xp, "$.params.gains.pll", "ki", s.gains.pll.ki);
                s.gains.pll.omega_ff =
                    read_num(xp, "$.params.gains.pll", "omega_ff", s.gains.pll.omega_ff);
            }
            s.gains.i_limit = read_num(x, "$.params.gains", "i_limit", s.gains.i_limit);
            s.gains.i_ref_slew = read_num(x, "$.params.gains", "i_ref_slew", s.gains.i_ref_slew);
            s.gains.buck_i_ref_slew =
                read_num(x, "$.params.gains", "buck_i_ref_slew", s.gains.buck_i_ref_slew);
            s.gains.trim_limit = read_num(x, "$.params.gains", "trim_limit", s.gains.trim_limit);
        }
        if (jp.contains("supervisor")) {
            const auto& x = jp["supervisor"];
            check_keys(x, "$.params.supervisor",
                       {"p_net_target", "telemetry_delay", "p_min", "p_max", "ramp_limit",
                        "droop_gain", "response_time", "f_nominal"});
            auto& sv = s.supervisor;
            sv.p_net_target = read_num(x, "$.params.supervisor", "p_net_target", sv.p_net_target);
            sv.telemetry_delay = read_num(x, "$.params.supervisor", "telemetry_delay", sv.telemetry_delay);
            sv.p_min = read_num(x, "$.params.supervisor", "p_min", sv.p_min);
            sv.p_max = read_num(x, "$.params.supervisor", "p_max", sv.p_max);
            sv.ramp_limit = read_num(x, "$.params.supervisor", "ramp_limit", sv.ramp_limit);
            sv.droop_gain = read_num(x, "$.params.supervisor", "droop_gain", sv.droop_gain);
            sv.response_time = read_num(x, "$.params.supervisor", "response_time", sv.response_time);
            sv.f_nominal = read_num(x, "$.params.supervisor", "f_nominal", sv.f_nominal);
        }
        if (jp.contains("grid")) {
            const auto& x = jp["grid"];
            check_keys(x, "$.params.grid",
                       {"generator", "line_r", "line_l", "load_nominal_va", "load_ramp_pu_per_s",
                        "load_p0", "elz_response_time", "elz_transformer_ratio"});
            if (x.contains("generator")) {
                const auto& xg = x["generator"];
                check_keys(xg, "$.params.grid.generator",
                           {"s_rated", "v_ll", "f_nominal", "j_g", "kp_speed", "ki_speed", "r_s",
                            "l_s"});
                auto& gp = s.grid.generator;
                gp.s_rated = read_num(xg, "$.params.grid.generator", "s_rated", gp.s_rated);
                gp.v_ll = read_num(xg, "$.params.grid.generator", "v_ll", gp.v_ll);
                gp.f_nominal = read_num(xg, "$.params.grid.generator", "f_nominal", gp.f_nominal);
                gp.j_g = read_num(xg, "$.params.grid.generator", "j_g", gp.j_g);
                gp.kp_speed = read_num(xg, "$.params.grid.generator", "kp_speed", gp.kp_speed);
                gp.ki_speed = read_num(xg, "$.params.grid.generator", "ki_speed", gp.ki_speed);
                gp.r_s = read_num(xg, "$.params.grid.generator", "r_s", gp.r_s);
                gp.l_s = read_num(xg, "$.params.grid.generator", "l_s", gp.l_s);
            }
            auto& g = s.grid;
            g.line_r = read_num(x, "$.params.grid", "line_r", g.line_r);
            g.line_l = read_num(x, "$.params.grid", "line_l", g.line_l);
            g.load_nominal_va = read_num(x, "$.params.grid", "load_nominal_va", g.load_nominal_va);
            g.load_ramp_pu_per_s =
                read_num(x, "$.params.grid", "load_ramp_pu_per_s", g.load_ramp_pu_per_s);
            g.load_p0 = read_num(x, "$.params.grid", "load_p0", g.load_p0);
            g.elz_response_time =
                read_num(x, "$.params.grid", "elz_response_time", g.elz_response_time);
            g.elz_transformer_ratio =
                read_num(x, "$.params.grid", "elz_transformer_ratio", g.elz_transformer_ratio);
        }
    }
    validate_scenario(s);
    return s;
}

std::string serialize_scenario(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["description"] = s.description;
    j["topology"] = to_string(s.topology);
    j["solver"] = {{"dt", s.solver.dt}, {"t_end", s.solver.t_end}, {"method", s.solver.method}};
    j["recording"] = {{"decimation", s.recording.decimation}, {"channels", s.recording.channels}};
    j["control"] = {{"mode", to_string(s.control.mode)}, {"p_ref", s.control.p_ref},
                    {"q_ref", s.control.q_ref},          {"vdc_ref", s.control.vdc_ref},
                    {"idc_ref", s.control.idc_ref},      {"vlink_ref", s.control.vlink_ref}};
    j["events"] = json::array();
    for (const Event& e : s.events)
        j["events"].push_back({{"t", e.t}, {"set", to_string(e.kind)}, {"value", e.value}});

    json p;
    p["stack"] = {{"model", s.stack_model == StackModelKind::Static ? "static" : "dynamic"},
                  {"v_rev", s.stack.v_rev},     {"r_total", s.stack.r_total},
                  {"r1_s", s.stack.r1_s},       {"c1_s", s.stack.c1_s},
                  {"i_rated", s.stack.i_rated}, {"p_rated", s.stack.p_rated}};
    p["ac"] = {{"r_ac", s.rectifier.ac.r_ac},
               {"l_ac", s.rectifier.ac.l_ac},
               {"v_ll_secondary", s.rectifier.ac.v_ll_secondary},
               {"f_nominal", s.rectifier.ac.f_nominal},
               {"turns_ratio", s.rectifier.ac.turns_ratio}};
    p["c_dc"] = s.rectifier.c_dc;
    p["buck"] = {{"l_dc", s.buck.l_dc}, {"r_dc", s.buck.r_dc}, {"c_out", s.buck.c_out}};
    auto loss_json = [](const LossModel& lm) {
        return json{{"v_sw", lm.v_sw}, {"v_d", lm.v_d}, {"k_cond", lm.k_cond},
                    {"p_fixed", lm.p_fixed}};
    };
    p["rectifier_loss"] = loss_json(s.rectifier_loss);
    p["buck_loss"] = loss_json(s.buck_loss);
    auto pi_json = [](const PiGains& g) { return json{{"kp", g.kp}, {"ki", g.ki}}; };
    p["gains"] = {{"current", pi_json(s.gains.current)},
                  {"dc_voltage", pi_json(s.gains.dc_voltage)},
                  {"dc_current", pi_json(s.gains.dc_current)},
                  {"link_voltage", pi_json(s.gains.link_voltage)},
                  {"buck_current", pi_json(s.gains.buck_current)},
                  {"power_trim", pi_json(s.gains.power_trim)},
                  {"pll", {{"kp", s.gains.pll.kp}, {"ki", s.gains.pll.ki},
                           {"omega_ff", s.gains.pll.omega_ff}}},
                  {"i_limit", s.gains.i_limit},
                  {"i_ref_slew", s.gains.i_ref_slew},
                  {"buck_i_ref_slew", s.gains.buck_i_ref_slew},
                  {"trim_limit", s.gains.trim_limit}};
    p["supervisor"] = {{"p_net_target", s.supervisor.p_net_target},
                       {"telemetry_delay", s.supervisor.telemetry_delay},
                       {"p_min", s.supervisor.p_min},
                       {"p_max", s.supervisor.p_max},
                       {"ramp_limit", s.supervisor.ramp_limit},
                       {"droop_gain", s.supervisor.droop_gain},
                       {"response_time", s.supervisor.response_time},
                       {"f_nominal", s.supervisor.f_nominal}};
    p["grid"] = {{"generator",
                  {{"s_rated", s.grid.generator.s_rated},
                   {"v_ll", s.grid.generator.v_ll},
                   {"f_nominal", s.grid.generator.f_nominal},
                   {"j_g", s.grid.generator.j_g},
                   {"kp_speed", s.grid.generator.kp_speed},
                   {"ki_speed", s.grid.generator.ki_speed},
                   {"r_s", s.grid.generator.r_s},
                   {"l_s", s.grid.generator.l_s}}},
                 {"line_r", s.grid.line_r},
                 {"line_l", s.grid.line_l},
                 {"load_nominal_va", s.grid.load_nominal_va},
                 {"load_ramp_pu_per_s", s.grid.load_ramp_pu_per_s},
                 {"load_p0", s.grid.load_p0},
                 {"elz_response_time", s.grid.elz_response_time},
                 {"elz_transformer_ratio", s.grid.elz_transformer_ratio}};
    j["params"] = std::move(p);
    return j.dump(2) + "\n";
}

const std::vector<PresetInfo>& preset_catalog() {
    static const std::vector<PresetInfo> catalog{
        {"fig8", "Single-stage rectifier idling at a 2 kW reference just above the stack "
                 "reversible voltage (480/75 secondary)"},
        {"fig9", "Single-stage rectifier, active power stepped 200 kW -> 500 kW at t=25 ms "
                 "with 50 kVAr reactive"},
        {"fig11", "Two-stage system holding the DC link at 250 V with a 2 kW reference"},
        {"fig12", "Two-stage system, DC link held at 250 V, power stepped 200 kW -> 500 kW "
                  "at t=25 ms with 50 kVAr"},
        {"fig14", "Scaled grid with a +400 kW dynamic-load step at t=1 s; the electrolyzer "
                  "compensates to hold 1150 kW at the generation bus"},
    };
    return catalog;
}

Scenario preset_scenario(const std::string& name) {
    Scenario s;
    if (name == "fig8") {
        s = default_scenario(Topology::NoDcDc);
        s.control.p_ref = 2e3;
        s.control.q_ref = 0.0;
    } else if (name == "fig9") {
        s = default_scenario(Topology::NoDcDc);
        s.events.push_back({0.025, EventKind::SetP, 500e3});
    } else if (name == "fig11") {
        s = default_scenario(Topology::WithDcDc);
        s.control.p_ref = 2e3;
        s.control.q_ref = 0.0;
    } else if (name == "fig12") {
        s = default_scenario(Topology::WithDcDc);
        s.events.push_back({0.025, EventKind::SetP, 500e3});
    } else if (name == "fig14") {
        s = default_scenario(Topology::GridSupport);
        s.events.push_back({1.0, EventKind::SetLoad, 1000e3});
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    s.name = name;
    for (const auto& info : preset_catalog())
        if (info.name == name) s.description = info.description;
    validate_scenario(s);
    return s;
}

}  // namespace elzsim
