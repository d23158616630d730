#include "elzsim/engine.hpp"

#include <algorithm>
#include <cmath>

namespace elzsim {

bool Trace::has_channel(const std::string& name) const {
    return std::find(channel_names.begin(), channel_names.end(), name) != channel_names.end();
}

const std::vector<double>& Trace::channel(const std::string& name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name) return channels[i];
    throw ConfigError("trace has no channel '" + name + "'");
}

namespace {

constexpr int kMaxCoupling = 24;      // fixed-point cap on the interface current
constexpr double kCouplingTol = 1e-10;

long steps_for(const SolverSettings& s) {
    return static_cast<long>(std::ceil(s.t_end / s.dt - 1e-9));
}

long event_step(double t_event, double dt) {
    return static_cast<long>(std::ceil(t_event / dt - 1e-9));
}

struct Recorder {
    Trace trace;
    std::vector<std::size_t> picks;
    int decimation = 1;

    Recorder(const Scenario& s) {
        const auto& all = topology_channels(s.topology);
        const auto& wanted = s.recording.channels.empty() ? all : s.recording.channels;
        for (const auto& name : wanted) {
            const auto it = std::find(all.begin(), all.end(), name);
            picks.push_back(static_cast<std::size_t>(it - all.begin()));
        }
        trace.channel_names = wanted;
        trace.channels.resize(wanted.size());
        decimation = s.recording.decimation;
    }

    void record(double t, long step, const std::vector<double>& full_row) {
        if (step % decimation != 0) return;
        trace.time.push_back(t);
        for (std::size_t k = 0; k < picks.size(); ++k)
            trace.channels[k].push_back(full_row[picks[k]]);
    }
};

void check_finite_row(const std::vector<std::string>& names, const std::vector<double>& row,
                      double t) {
    for (std::size_t i = 0; i < row.size(); ++i)
        if (!std::isfinite(row[i])) throw DivergenceError(names[i], t);
}

/// Measurement path grid frame -> abc -> controller (PLL) frame.
Dq to_pll_frame(double theta_pll, double theta_grid, const Dq& x_grid) {
    return abc_to_dq(theta_pll, dq_to_abc(theta_grid, x_grid));
}

// ---------------------------------------------------------------------------
// Converter topologies (EMT in the dq frame)
// ---------------------------------------------------------------------------

struct ConverterCommon {
    const Scenario& sc;
    bool strict;
    Violations viol;

    double v_g_peak;
    double omega_grid;
    double theta_grid = 0.0;

    PllState pll;
    CurrentLoopState iloop;
    PiState outer_pi;
    OuterLoopConfig outer_cfg;

    ConverterCommon(const Scenario& s, bool strict_mode) : sc(s), strict(strict_mode) {
        v_g_peak = s.rectifier.ac.v_phase_peak();
        omega_grid = s.rectifier.ac.omega_nominal();
        pll.theta = 0.0;
        pll.omega_hat = omega_grid;
        pll.integrator = 0.0;
        outer_cfg.dc_voltage = s.gains.dc_voltage;
        outer_cfg.dc_current = s.gains.dc_current;
        outer_cfg.link_voltage = s.gains.link_voltage;
        outer_cfg.i_limit = s.gains.i_limit;
        outer_cfg.v_dc_floor =
            std::max(min_dc_link(s.rectifier.ac.v_ll_secondary), s.stack.v_rev);
        outer_cfg.i_dc_max = s.stack.i_rated;
    }

    /// Clamp a DC-side reference to its feasibility floor (strict: abort).
    double feasible_dc_ref(double ref, double floor, const char* what) {
        if (ref >= floor) return ref;
        if (strict)
            throw InfeasibleReferenceError(std::string(what) + " reference " +
                                           std::to_string(ref) + " below the physical floor " +
                                           std::to_string(floor));
        viol.reference_clamped = true;
        return floor;
    }

    void note_current_limit(const Dq& i_ref, double t) {
        if (std::hypot(i_ref.d, i_ref.q) >= sc.gains.i_limit * (1.0 - 1e-9)) {
            ++viol.current_limit_hits;
            if (strict)
                throw ConstraintViolationError("current-reference limit reached at t=" +
                                               std::to_string(t) + " s");
        }
    }

    void note_boost(bool flag, double t) {
        if (!flag) return;
        viol.boost = true;
        if (strict)
            throw ConstraintViolationError("DC voltage below the boost limit at t=" +
                                           std::to_string(t) + " s");
    }

    /// Current-loop integrators that hold (m_d, m_q) at zero error.
    void init_current_loop(const Dq& i0, double m_d, double m_q, double v_dc0) {
        const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
        iloop.d.integrator = v_g_peak + omega_grid * sc.rectifier.ac.l_ac * i0.q -
                             m_d * v_dc0 * inv_sqrt3;
        iloop.q.integrator =
            -omega_grid * sc.rectifier.ac.l_ac * i0.d - m_q * v_dc0 * inv_sqrt3;
    }

    /// Steady modulation that holds i0 against the grid EMF at v_dc0.
    Dq steady_modulation(const Dq& i0, double v_dc0) const {
        const double r = sc.rectifier.ac.r_ac;
        const double wl = omega_grid * sc.rectifier.ac.l_ac;
        const double sqrt3 = std::sqrt(3.0);
        return {sqrt3 * (v_g_peak - r * i0.d + wl * i0.q) / v_dc0,
                sqrt3 * (-r * i0.q - wl * i0.d) / v_dc0};
    }
};

/// Rectifier losses at a steady operating point (for equilibrium init).
double rectifier_point_loss(const AcSideParams& ac, const LossModel& loss, double amp) {
    return 1.5 * ac.r_ac * amp * amp + loss.k_cond * conduction_base(amp, loss) + loss.p_fixed;
}

SimOutput run_no_dcdc(const Scenario& sc, bool strict) {
    const double dt = sc.solver.dt;
    ConverterCommon cc(sc, strict);

    OuterRefs refs{sc.control.mode, 0.0, sc.control.q_ref};
    switch (sc.control.mode) {
        case OuterMode::ActiveReactive: refs.ref = sc.control.p_ref; break;
        case OuterMode::DcVoltageReactive:
            refs.ref = cc.feasible_dc_ref(sc.control.vdc_ref, cc.outer_cfg.v_dc_floor, "Vdc");
            break;
        case OuterMode::DcCurrentReactive:
            refs.ref = std::clamp(sc.control.idc_ref, 0.0, sc.stack.i_rated);
            break;
        case OuterMode::LinkVoltageReactive: break;  // rejected by validation
    }

    // --- analytic equilibrium at the initial references ---
    double i_stk0 = 0.0;
    double p_ac0 = 0.0;
    if (refs.mode == OuterMode::ActiveReactive) {
        p_ac0 = refs.ref;
        const double amp = dq_current_amplitude(p_ac0, refs.q_ref, cc.v_g_peak);
        const double p_dc0 = std::max(0.0, p_ac0 - rectifier_point_loss(sc.rectifier.ac,
                                                                        sc.rectifier_loss, amp));
        i_stk0 = current_for_power(sc.stack, p_dc0);
    } else {
        if (refs.mode == OuterMode::DcVoltageReactive)
            i_stk0 = std::max(0.0, (refs.ref - sc.stack.v_rev) / sc.stack.r_total);
        else
            i_stk0 = refs.ref;
        const double p_dc0 = static_voltage(sc.stack, i_stk0) * i_stk0;
        p_ac0 = p_dc0;
        for (int it = 0; it < 20; ++it) {
            const double amp = dq_current_amplitude(p_ac0, refs.q_ref, cc.v_g_peak);
            p_ac0 = p_dc0 + rectifier_point_loss(sc.rectifier.ac, sc.rectifier_loss, amp);
        }
    }
    const double v_dc0 = static_voltage(sc.stack, i_stk0);

    Dq i0{p_ac0 / (1.5 * cc.v_g_peak), -refs.q_ref / (1.5 * cc.v_g_peak)};
    i0 = clamp_magnitude(i0, sc.gains.i_limit);

    RectifierState rect;
    rect.i_d = i0.d;
    rect.i_q = i0.q;
    rect.v_dc = v_dc0;
    rect.p_ac_in = p_ac0;
    rect.p_dc_out = v_dc0 * i_stk0;
    rect.p_loss = p_ac0 - rect.p_dc_out;

    StackState stack{i_stk0 * sc.stack.r1_s, i_stk0};

    const Dq m0 = cc.steady_modulation(i0, v_dc0);
    cc.init_current_loop(i0, m0.d, m0.q, v_dc0);
    if (refs.mode != OuterMode::ActiveReactive) cc.outer_pi.integrator = i0.d;

    Recorder rec(sc);
    const long n_steps = steps_for(sc.solver);
    std::vector<std::pair<long, Event>> schedule;
    for (const Event& e : sc.events) schedule.emplace_back(event_step(e.t, dt), e);

    double i_draw_prev = i_stk0;
    double residual = 0.0;
    double q_book = -1.5 * cc.v_g_peak * i0.q;
    ModulationCmd mod_cmd{m0.d, m0.q, false};
    Dq i_ref_state = i0;
    const bool stack_dynamic = sc.stack_model == StackModelKind::Dynamic;

    const auto& names = topology_channels(Topology::NoDcDc);
    auto make_row = [&](const RectifierState& r, const StackState& st,
                        const ModulationCmd& m) {
        const double eta = r.p_ac_in > 1e-9 ? r.p_dc_out / r.p_ac_in : 0.0;
        return std::vector<double>{r.p_ac_in, q_book, r.p_dc_out, r.p_loss, r.v_dc,
                                   r.v_dc, st.i_dc, r.i_d, r.i_q, m.m_d,
                                   m.m_q, cc.pll.omega_hat / two_pi, eta,
                                   r.boost_violation ? 1.0 : 0.0, std::abs(residual)};
    };
    rec.record(0.0, 0, make_row(rect, stack, mod_cmd));

    std::size_t next_event = 0;
    for (long k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        while (next_event < schedule.size() && schedule[next_event].first <= k) {
            const Event& e = schedule[next_event].second;
            switch (e.kind) {
                case EventKind::SetP: refs.ref = e.value; break;
                case EventKind::SetQ: refs.q_ref = e.value; break;
                case EventKind::SetVdc:
                    refs.ref = cc.feasible_dc_ref(e.value, cc.outer_cfg.v_dc_floor, "Vdc");
                    break;
                case EventKind::SetIdc:
                    refs.ref = std::clamp(e.value, 0.0, sc.stack.i_rated);
                    break;
                case EventKind::SetLoad: break;
            }
            rec.trace.markers.push_back(e);
            ++next_event;
        }

        // measurements -> outer loop -> inner loop (controller frame)
        if (!(rect.v_dc > 0.0)) throw DivergenceError("v_dc_V", t);
        const Abc v_abc = dq_to_abc(cc.theta_grid, {cc.v_g_peak, 0.0});
        const Dq v_pll = abc_to_dq(cc.pll.theta, v_abc);
        const Dq i_pll = to_pll_frame(cc.pll.theta, cc.theta_grid, {rect.i_d, rect.i_q});
        const OuterMeasurements om{v_pll.d, rect.v_dc, stack.i_dc, rect.v_dc};

        const Dq i_ref_raw = outer_loop_step(refs, om, cc.outer_pi, cc.outer_cfg, dt);
        cc.note_current_limit(i_ref_raw, t);
        i_ref_state.d = slew_toward(i_ref_state.d, i_ref_raw.d, sc.gains.i_ref_slew, dt);
        i_ref_state.q = slew_toward(i_ref_state.q, i_ref_raw.q, sc.gains.i_ref_slew, dt);

        mod_cmd = current_loop_step(i_ref_state, i_pll, cc.iloop, sc.gains.current,
                                    cc.pll.omega_hat, sc.rectifier.ac.l_ac, v_pll, rect.v_dc, dt);
        const Dq m_grid = rotate_frame({mod_cmd.m_d, mod_cmd.m_q}, cc.theta_grid - cc.pll.theta);

        // plant: rectifier + stack coupled through the midpoint draw current
        RectifierInputs in{m_grid.d, m_grid.q, cc.v_g_peak, 0.0, cc.omega_grid, i_draw_prev};
        RectifierState rect_next;
        StackState stack_next;
        double i_draw = i_draw_prev;
        try {
            for (int it = 0; it < kMaxCoupling; ++it) {
                in.i_dc_draw = i_draw;
                rect_next = rectifier_step(in, rect, sc.rectifier, sc.rectifier_loss, dt);
                const double v_mid = std::max(0.5 * (rect.v_dc + rect_next.v_dc), 0.0);
                double i_m = 0.0;
                if (stack_dynamic) {
                    stack_next = dynamic_step(sc.stack, stack, v_mid, dt);
                    i_m = step_midpoint_current(sc.stack, stack, stack_next, v_mid);
                } else {
                    i_m = std::max(0.0, (v_mid - sc.stack.v_rev) / sc.stack.r_total);
                }
                const bool done = std::abs(i_m - i_draw) <= kCouplingTol * std::max(1.0, std::abs(i_m));
                i_draw = i_m;
                if (done) break;
            }
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.channel(), t);
        }
        if (!stack_dynamic) {
            const double i_end =
                std::max(0.0, (rect_next.v_dc - sc.stack.v_rev) / sc.stack.r_total);
            stack_next = StackState{i_end * sc.stack.r1_s, i_end};
        }
        i_draw_prev = i_draw;

        const double i_qm = 0.5 * (rect.i_q + rect_next.i_q);
        q_book = -1.5 * cc.v_g_peak * i_qm;
        const double de = rectifier_stored_energy(rect_next, sc.rectifier) -
                          rectifier_stored_energy(rect, sc.rectifier);
        residual = rect_next.p_ac_in - rect_next.p_loss - rect_next.p_dc_out - de / dt;

        rect = rect_next;
        stack = stack_next;
        cc.note_boost(rect.boost_violation, t);

        cc.pll = pll_step(v_abc, cc.pll, sc.gains.pll, dt);
        cc.theta_grid = wrap_angle(cc.theta_grid + cc.omega_grid * dt);

        const auto row = make_row(rect, stack, mod_cmd);
        check_finite_row(names, row, (k + 1) * dt);
        rec.record((k + 1) * dt, k + 1, row);
    }

    return {std::move(rec.trace), cc.viol};
}

SimOutput run_with_dcdc(const Scenario& sc, bool strict) {
    const double dt = sc.solver.dt;
    ConverterCommon cc(sc, strict);

    double p_ref = sc.control.p_ref;
    double q_ref = sc.control.q_ref;
    double vlink_ref =
        cc.feasible_dc_ref(sc.control.vlink_ref, min_dc_link(sc.rectifier.ac.v_ll_secondary),
                           "link voltage");

    // --- analytic equilibrium: grid power p_ref, link at vlink_ref ---
    double p_stack0 = p_ref * 0.96;
    double i_stk0 = 0.0, duty0 = 0.0, p_dev_b0 = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double amp = dq_current_amplitude(p_ref, q_ref, cc.v_g_peak);
        const double loss_r = rectifier_point_loss(sc.rectifier.ac, sc.rectifier_loss, amp);
        i_stk0 = current_for_power(sc.stack, std::max(0.0, p_stack0));
        duty0 = std::clamp((static_voltage(sc.stack, i_stk0) + sc.buck.r_dc * i_stk0) / vlink_ref,
                           0.0, 1.0);
        p_dev_b0 = sc.buck_loss.k_cond * i_stk0 *
                       (duty0 * sc.buck_loss.v_sw + (1.0 - duty0) * sc.buck_loss.v_d) +
                   sc.buck_loss.p_fixed;
        const double loss_b = p_dev_b0 + sc.buck.r_dc * i_stk0 * i_stk0;
        p_stack0 = std::max(0.0, p_ref - loss_r - loss_b);
    }
    const double v_st0 = static_voltage(sc.stack, i_stk0);

    Dq i0{p_ref / (1.5 * cc.v_g_peak), -q_ref / (1.5 * cc.v_g_peak)};
    i0 = clamp_magnitude(i0, sc.gains.i_limit);

    RectifierState rect;
    rect.i_d = i0.d;
    rect.i_q = i0.q;
    rect.v_dc = vlink_ref;
    rect.p_ac_in = p_ref;
    rect.p_dc_out = duty0 * vlink_ref * i_stk0 + p_dev_b0;
    rect.p_loss = 0.0;
    {
        const double amp = std::hypot(i0.d, i0.q);
        rect.p_loss = rectifier_point_loss(sc.rectifier.ac, sc.rectifier_loss, amp);
    }

    BuckState buck{i_stk0, v_st0, duty0};
    StackState stack{i_stk0 * sc.stack.r1_s, i_stk0};

    const Dq m0 = cc.steady_modulation(i0, vlink_ref);
    cc.init_current_loop(i0, m0.d, m0.q, vlink_ref);
    // Link PI holds the residual between i_d and the draw feedforward.
    const double i_d_ff0 = duty0 * vlink_ref * i_stk0 / (1.5 * cc.v_g_peak);
    cc.outer_pi.integrator = i0.d - i_d_ff0;

    PiState buck_pi;   // duty*vlink = ff at zero error, so the integrator rests
    PiState trim_pi;
    trim_pi.integrator = i_stk0 - current_for_power(sc.stack, p_ref);
    double i_ref_buck_state = i_stk0;

    Recorder rec(sc);
    const long n_steps = steps_for(sc.solver);
    std::vector<std::pair<long, Event>> schedule;
    for (const Event& e : sc.events) schedule.emplace_back(event_step(e.t, dt), e);

    double i_draw_prev = duty0 * i_stk0 + p_dev_b0 / vlink_ref;
    double residual = 0.0;
    double q_book = -1.5 * cc.v_g_peak * i0.q;
    ModulationCmd mod_cmd{m0.d, m0.q, false};
    Dq i_ref_state = i0;
    const bool stack_dynamic = sc.stack_model == StackModelKind::Dynamic;
    BuckStepResult br;
    br.buck = buck;
    br.stack = stack;
    br.p_loss = p_dev_b0 + sc.buck.r_dc * i_stk0 * i_stk0;
    br.p_to_stack = v_st0 * i_stk0;

    const auto& names = topology_channels(Topology::WithDcDc);
    auto make_row = [&](const RectifierState& r, const BuckStepResult& bres) {
        const double p_loss_total = r.p_loss + bres.p_loss;
        const double eta = r.p_ac_in > 1e-9 ? bres.p_to_stack / r.p_ac_in : 0.0;
        return std::vector<double>{r.p_ac_in, q_book, bres.p_to_stack, p_loss_total, r.v_dc,
                                   bres.buck.v_out, bres.stack.i_dc, bres.buck.i_l,
                                   bres.buck.duty, r.i_d, r.i_q, mod_cmd.m_d, mod_cmd.m_q,
                                   cc.pll.omega_hat / two_pi, eta,
                                   r.boost_violation ? 1.0 : 0.0, std::abs(residual)};
    };
    rec.record(0.0, 0, make_row(rect, br));

    std::size_t next_event = 0;
    for (long k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        while (next_event < schedule.size() && schedule[next_event].first <= k) {
            const Event& e = schedule[next_event].second;
            switch (e.kind) {
                case EventKind::SetP: p_ref = e.value; break;
                case EventKind::SetQ: q_ref = e.value; break;
                case EventKind::SetVdc:
                    vlink_ref = cc.feasible_dc_ref(
                        e.value, min_dc_link(sc.rectifier.ac.v_ll_secondary), "link voltage");
                    break;
                default: break;
            }
            rec.trace.markers.push_back(e);
            ++next_event;
        }

        if (!(rect.v_dc > 0.0)) throw DivergenceError("v_dc_V", t);
        const Abc v_abc = dq_to_abc(cc.theta_grid, {cc.v_g_peak, 0.0});
        const Dq v_pll = abc_to_dq(cc.pll.theta, v_abc);
        const Dq i_pll = to_pll_frame(cc.pll.theta, cc.theta_grid, {rect.i_d, rect.i_q});
        const double p_meas = 1.5 * (v_pll.d * i_pll.d + v_pll.q * i_pll.q);

        const OuterRefs link_refs{OuterMode::LinkVoltageReactive, vlink_ref, q_ref};
        const OuterMeasurements om{v_pll.d, rect.v_dc, stack.i_dc, rect.v_dc};
        // Measured DC/DC draw fed forward so the rectifier supplies the buck
        // without waiting for the link voltage to sag.
        const double i_d_ff = buck.duty * rect.v_dc * buck.i_l / (1.5 * std::max(v_pll.d, 1.0));
        const Dq i_ref_raw = outer_loop_step(link_refs, om, cc.outer_pi, cc.outer_cfg, dt, i_d_ff);
        cc.note_current_limit(i_ref_raw, t);
        i_ref_state.d = slew_toward(i_ref_state.d, i_ref_raw.d, sc.gains.i_ref_slew, dt);
        i_ref_state.q = slew_toward(i_ref_state.q, i_ref_raw.q, sc.gains.i_ref_slew, dt);

        // buck chain: feedforward through the static model plus grid-power trim
        const double trim = pi_step(sc.gains.power_trim, trim_pi, p_ref - p_meas, dt,
                                    -sc.gains.trim_limit, sc.gains.trim_limit);
        double i_ref_buck = current_for_power(sc.stack, p_ref) + trim;
        if (i_ref_buck > sc.stack.i_rated) {
            i_ref_buck = sc.stack.i_rated;
            ++cc.viol.current_limit_hits;
            if (strict)
                throw ConstraintViolationError("stack current limit reached at t=" +
                                               std::to_string(t) + " s");
        }
        i_ref_buck = std::max(0.0, i_ref_buck);
        i_ref_buck_state =
            slew_toward(i_ref_buck_state, i_ref_buck, sc.gains.buck_i_ref_slew, dt);
        const double duty = buck_current_loop_step(i_ref_buck_state, buck.i_l, buck_pi,
                                                   sc.gains.buck_current, rect.v_dc, buck.v_out,
                                                   sc.buck.r_dc, dt);

        mod_cmd = current_loop_step(i_ref_state, i_pll, cc.iloop, sc.gains.current,
                                    cc.pll.omega_hat, sc.rectifier.ac.l_ac, v_pll, rect.v_dc, dt);
        const Dq m_grid = rotate_frame({mod_cmd.m_d, mod_cmd.m_q}, cc.theta_grid - cc.pll.theta);

        RectifierInputs in{m_grid.d, m_grid.q, cc.v_g_peak, 0.0, cc.omega_grid, i_draw_prev};
        RectifierState rect_next;
        double i_draw = i_draw_prev;
        try {
            for (int it = 0; it < kMaxCoupling; ++it) {
                in.i_dc_draw = i_draw;
                rect_next = rectifier_step(in, rect, sc.rectifier, sc.rectifier_loss, dt);
                const double v_mid = std::max(0.5 * (rect.v_dc + rect_next.v_dc), 1e-6);
                br = buck_step(duty, v_mid, buck, sc.stack, stack, sc.buck, sc.buck_loss, dt,
                               stack_dynamic);
                const bool done = std::abs(br.i_link_mid - i_draw) <=
                                  kCouplingTol * std::max(1.0, std::abs(br.i_link_mid));
                i_draw = br.i_link_mid;
                if (done) break;
            }
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.channel(), t);
        }
        i_draw_prev = i_draw;

        const double i_qm = 0.5 * (rect.i_q + rect_next.i_q);
        q_book = -1.5 * cc.v_g_peak * i_qm;
        const double de = (rectifier_stored_energy(rect_next, sc.rectifier) +
                           buck_stored_energy(br.buck, sc.buck)) -
                          (rectifier_stored_energy(rect, sc.rectifier) +
                           buck_stored_energy(buck, sc.buck));
        residual = rect_next.p_ac_in - rect_next.p_loss - br.p_loss - br.p_to_stack - de / dt;

        rect = rect_next;
        buck = br.buck;
        stack = br.stack;
        cc.note_boost(rect.boost_violation, t);

        cc.pll = pll_step(v_abc, cc.pll, sc.gains.pll, dt);
        cc.theta_grid = wrap_angle(cc.theta_grid + cc.omega_grid * dt);

        const auto row = make_row(rect, br);
        check_finite_row(names, row, (k + 1) * dt);
        rec.record((k + 1) * dt, k + 1, row);
    }

    return {std::move(rec.trace), cc.viol};
}

// ---------------------------------------------------------------------------
// Grid-support scenario (quasi-static phasor coupling)
// ---------------------------------------------------------------------------

SimOutput run_grid_support(const Scenario& sc, bool strict) {
    (void)strict;  // no converter constraints in the phasor model
    const double dt = sc.solver.dt;
    const GridSection& g = sc.grid;
    const GeneratorParams& gp = g.generator;

    auto line_loss = [&](double p_recv) {
        const double i = p_recv / (std::sqrt(3.0) * gp.v_ll);
        return 3.0 * g.line_r * i * i;
    };

    // Power-flow init: electrolyzer absorbs whatever keeps the generation bus
    // at the supervisor target with the initial load.
    double elz0 = std::max(0.0, sc.supervisor.p_net_target - g.load_p0);
    for (int it = 0; it < 50; ++it)
        elz0 = std::max(0.0, sc.supervisor.p_net_target - g.load_p0 - line_loss(g.load_p0 + elz0));

    DynamicLoadState load{g.load_p0, g.load_p0, 0.0};
    double load_cmd = g.load_p0;
    const double load_ramp = g.load_ramp_pu_per_s * g.load_nominal_va;

    double p_elz = elz0;
    SupervisorState sup{elz0};
    GeneratorState gen;
    gen.omega = gp.omega_nominal();
    const double p_gen0 = g.load_p0 + elz0 + line_loss(g.load_p0 + elz0);
    gen.governor_integrator = p_gen0 / gp.s_rated;
    gen.p_elec = p_gen0;
    gen.p_mech = p_gen0;

    DelayLine gen_delay(sc.supervisor.telemetry_delay, dt, p_gen0);
    DelayLine f_delay(sc.supervisor.telemetry_delay, dt, gp.f_nominal);

    Recorder rec(sc);
    const long n_steps = steps_for(sc.solver);
    std::vector<std::pair<long, Event>> schedule;
    for (const Event& e : sc.events) schedule.emplace_back(event_step(e.t, dt), e);

    double residual = 0.0;
    const auto& names = topology_channels(Topology::GridSupport);
    auto make_row = [&]() {
        const double loads_now[] = {load.p_actual};
        const double p_net = bus_power_balance(gen.p_elec, loads_now, p_elz);
        const double recv = load.p_actual + p_elz;
        const double i_line = recv / (std::sqrt(3.0) * gp.v_ll);
        const double v_ph = gp.v_ll / std::sqrt(3.0);
        const double v_bus =
            std::sqrt(3.0) * std::hypot(v_ph - i_line * g.line_r, i_line * gen.omega * g.line_l);
        return std::vector<double>{gen.p_elec, gen.p_mech, load.p_actual, p_elz, sup.p_ref,
                                   gen.omega / two_pi, p_net, v_bus, std::abs(residual)};
    };
    rec.record(0.0, 0, make_row());

    std::size_t next_event = 0;
    for (long k = 0; k < n_steps; ++k) {
        while (next_event < schedule.size() && schedule[next_event].first <= k) {
            const Event& e = schedule[next_event].second;
            if (e.kind == EventKind::SetLoad) load_cmd = e.value;
            rec.trace.markers.push_back(e);
            ++next_event;
        }

        // measurements (start-of-step values) through the telemetry delay
        const double g_meas = gen_delay.push(gen.p_elec);
        const double f_meas = f_delay.push(gen.omega / two_pi);
        supervisor_step(sc.supervisor, sup, g_meas, f_meas, p_elz, dt);

        // dynamic load ramp and electrolyzer first-order response (trapezoidal)
        const DynamicLoadState load_next = load_step(load, load_cmd, load_ramp, dt);
        const double h = dt / std::max(g.elz_response_time, 0.5 * dt);
        const double p_elz_next =
            std::max(0.0, (p_elz * (1.0 - 0.5 * h) + h * sup.p_ref) / (1.0 + 0.5 * h));

        // swing dynamics fed with the midpoint consumption
        const double load_m = 0.5 * (load.p_actual + load_next.p_actual);
        const double elz_m = 0.5 * (p_elz + p_elz_next);
        const double recv_m = load_m + elz_m;
        const double demand = recv_m + line_loss(recv_m);

        const GeneratorState gen_prev = gen;
        try {
            gen = generator_step(gp, gen, demand, dt);
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.channel(), k * dt);
        }
        load = load_next;
        p_elz = p_elz_next;

        const double de_kin = 0.5 * gp.j_g * (gen.omega * gen.omega -
                                              gen_prev.omega * gen_prev.omega);
        residual = gen.p_mech - demand - de_kin / dt;

        const auto row = make_row();
        check_finite_row(names, row, (k + 1) * dt);
        rec.record((k + 1) * dt, k + 1, row);
    }

    Violations none;
    return {std::move(rec.trace), none};
}

}  // namespace

SimOutput simulate(const Scenario& s, bool strict) {
    validate_scenario(s);
    switch (s.topology) {
        case Topology::NoDcDc: return run_no_dcdc(s, strict);
        case Topology::WithDcDc: return run_with_dcdc(s, strict);
        case Topology::GridSupport: return run_grid_support(s, strict);
    }
    throw ConfigError("unknown topology");
}

Metrics extract_steady_state(const Trace& t, double t1, double t2) {
    if (t.size() == 0) throw ConfigError("empty trace");
    if (!(t1 < t2) || t1 < t.time.front() - 1e-12 || t2 > t.time.back() + 1e-12)
        throw ConfigError("steady-state window [" + std::to_string(t1) + ", " +
                          std::to_string(t2) + "] outside the trace");
    const auto lo = std::lower_bound(t.time.begin(), t.time.end(), t1 - 1e-12);
    const auto hi = std::upper_bound(t.time.begin(), t.time.end(), t2 + 1e-12);
    const std::size_t i0 = static_cast<std::size_t>(lo - t.time.begin());
    const std::size_t i1 = static_cast<std::size_t>(hi - t.time.begin());
    if (i1 <= i0) throw ConfigError("steady-state window contains no samples");

    Metrics m;
    m.t1 = t1;
    m.t2 = t2;
    for (std::size_t c = 0; c < t.channel_names.size(); ++c) {
        const auto& x = t.channels[c];
        double sum = 0.0;
        for (std::size_t i = i0; i < i1; ++i) sum += x[i];
        ChannelStats st;
        st.mean = sum / static_cast<double>(i1 - i0);
        for (std::size_t i = i0; i < i1; ++i)
            st.max_dev = std::max(st.max_dev, std::abs(x[i] - st.mean));
        m.channels[t.channel_names[c]] = st;
    }
    if (m.channels.count("p_ac_W") && m.channels.count("p_stack_W")) {
        const double p_ac = m.channels["p_ac_W"].mean;
        if (p_ac > 0.0) {
            m.efficiency = efficiency(p_ac, m.channels["p_stack_W"].mean);
            m.has_efficiency = true;
        }
    }
    return m;
}

SettlingResult settling_time(const Trace& t, const std::string& channel, double t_event,
                             double band) {
    if (t.size() == 0) throw ConfigError("empty trace");
    if (t_event < t.time.front() - 1e-12 || t_event > t.time.back() + 1e-12)
        throw ConfigError("settling event time outside the trace");
    const auto& x = t.channel(channel);
    const auto ev = std::lower_bound(t.time.begin(), t.time.end(), t_event - 1e-12);
    const std::size_t ie = static_cast<std::size_t>(ev - t.time.begin());
    const std::size_t n = t.size();

    // Final steady value: mean of the trailing 5 % of the post-event span.
    const std::size_t tail = std::max<std::size_t>(1, (n - ie) / 20);
    double final_val = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) final_val += x[i];
    final_val /= static_cast<double>(tail);
    const double tol = band * std::max(std::abs(final_val), 1e-12);

    std::size_t last_out = ie;  // index *after* which everything is in band
    bool any_out = false;
    for (std::size_t i = n; i-- > ie;) {
        if (std::abs(x[i] - final_val) > tol) {
            last_out = i;
            any_out = true;
            break;
        }
    }
    SettlingResult r;
    if (!any_out) {
        r.settled = true;
        r.time = 0.0;
        return r;
    }
    if (last_out + 1 >= n) {
        r.settled = false;
        r.time = t.time.back() - t_event;
        return r;
    }
    r.settled = true;
    r.time = t.time[last_out + 1] - t_event;
    return r;
}

}  // namespace elzsim
