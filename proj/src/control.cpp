#include "elzsim/control.hpp"

#include <cmath>

namespace elzsim {

namespace {
constexpr double k23 = 2.0 / 3.0;
constexpr double rad120 = two_pi / 3.0;
}  // namespace

Dq abc_to_dq(double theta, const Abc& x) {
    const double ca = std::cos(theta), cb = std::cos(theta - rad120), cc = std::cos(theta + rad120);
    const double sa = std::sin(theta), sb = std::sin(theta - rad120), sc = std::sin(theta + rad120);
    return {k23 * (x.a * ca + x.b * cb + x.c * cc), -k23 * (x.a * sa + x.b * sb + x.c * sc)};
}

Abc dq_to_abc(double theta, const Dq& x) {
    const double ca = std::cos(theta), cb = std::cos(theta - rad120), cc = std::cos(theta + rad120);
    const double sa = std::sin(theta), sb = std::sin(theta - rad120), sc = std::sin(theta + rad120);
    return {x.d * ca - x.q * sa, x.d * cb - x.q * sb, x.d * cc - x.q * sc};
}

Dq rotate_frame(const Dq& x, double delta) {
    const double c = std::cos(delta), s = std::sin(delta);
    return {x.d * c + x.q * s, -x.d * s + x.q * c};
}

Dq clamp_magnitude(const Dq& x, double limit) {
    const double mag = std::hypot(x.d, x.q);
    if (mag <= limit || mag == 0.0) return x;
    const double f = limit / mag;
    return {x.d * f, x.q * f};
}

PllState pll_step(const Abc& v_abc, const PllState& s, const PllGains& g, double dt) {
    if (dt <= 0.0) throw ConfigError("pll_step needs dt > 0");
    const Dq v = abc_to_dq(s.theta, v_abc);
    const double mag = std::hypot(v.d, v.q);
    const double e = mag > 1e-9 ? v.q / mag : 0.0;

    PllState next;
    next.integrator = s.integrator + g.ki * e * dt;
    next.omega_hat = g.omega_ff + next.integrator + g.kp * e;
    next.theta = wrap_angle(s.theta + next.omega_hat * dt);
    return next;
}

Dq pq_to_idq_refs(double p_ref, double q_ref, double v_d, double i_limit) {
    if (!(v_d > 0.0)) throw DomainError("grid lost: d-axis voltage must be > 0");
    const double denom = 1.5 * v_d;
    return clamp_magnitude({p_ref / denom, -q_ref / denom}, i_limit);
}

ModulationCmd current_loop_step(const Dq& i_ref, const Dq& i_meas, CurrentLoopState& s,
                                const PiGains& g, double omega, double l_ac, const Dq& v_ff,
                                double v_dc, double dt) {
    if (!(v_dc > 0.0)) throw DomainError("current loop needs v_dc > 0");
    const double e_d = i_ref.d - i_meas.d;
    const double e_q = i_ref.q - i_meas.q;

    const double integ_d_prev = s.d.integrator;
    const double integ_q_prev = s.q.integrator;
    double integ_d = integ_d_prev + g.ki * e_d * dt;
    double integ_q = integ_q_prev + g.ki * e_q * dt;

    const double v_cmd_d = v_ff.d + omega * l_ac * i_meas.q - (g.kp * e_d + integ_d);
    const double v_cmd_q = v_ff.q - omega * l_ac * i_meas.d - (g.kp * e_q + integ_q);

    // Phase-voltage normalization v_dc/sqrt(3): the unit circle is the
    // linear range whose floor is the sqrt(2)*v_ll boost limit.
    ModulationCmd cmd;
    const double sqrt3 = std::sqrt(3.0);
    cmd.m_d = sqrt3 * v_cmd_d / v_dc;
    cmd.m_q = sqrt3 * v_cmd_q / v_dc;
    const double mag = std::hypot(cmd.m_d, cmd.m_q);
    if (mag > 1.0) {
        cmd.m_d /= mag;
        cmd.m_q /= mag;
        cmd.clamped = true;
        // Freeze both integrators while the vector is clamped.
        integ_d = integ_d_prev;
        integ_q = integ_q_prev;
    }
    s.d.integrator = integ_d;
    s.q.integrator = integ_q;
    s.d.saturated = cmd.clamped;
    s.q.saturated = cmd.clamped;
    return cmd;
}

Dq outer_loop_step(const OuterRefs& refs, const OuterMeasurements& m, PiState& s,
                   const OuterLoopConfig& cfg, double dt, double i_d_feedforward) {
    if (!all_finite({m.v_d, m.v_dc, m.i_dc, m.v_link}))
        throw DivergenceError("outer loop measurements", 0.0);

    double i_d_ref = 0.0;
    switch (refs.mode) {
        case OuterMode::ActiveReactive:
            return pq_to_idq_refs(refs.ref, refs.q_ref, m.v_d, cfg.i_limit);
        case OuterMode::DcVoltageReactive:
            if (refs.ref < cfg.v_dc_floor)
                throw InfeasibleReferenceError("Vdc reference " + std::to_string(refs.ref) +
                                               " V below floor " + std::to_string(cfg.v_dc_floor) +
                                               " V");
            i_d_ref = pi_step(cfg.dc_voltage, s, refs.ref - m.v_dc, dt, 0.0, cfg.i_limit);
            break;
        case OuterMode::DcCurrentReactive:
            if (refs.ref < 0.0 || refs.ref > cfg.i_dc_max)
                throw InfeasibleReferenceError("Idc reference " + std::to_string(refs.ref) +
                                               " A outside [0, " + std::to_string(cfg.i_dc_max) +
                                               "] A");
            i_d_ref = pi_step(cfg.dc_current, s, refs.ref - m.i_dc, dt, 0.0, cfg.i_limit);
            break;
        case OuterMode::LinkVoltageReactive:
            if (refs.ref < cfg.v_dc_floor)
                throw InfeasibleReferenceError("link voltage reference " +
                                               std::to_string(refs.ref) + " V below floor " +
                                               std::to_string(cfg.v_dc_floor) + " V");
            i_d_ref = pi_step(cfg.link_voltage, s, refs.ref - m.v_link, dt, 0.0, cfg.i_limit,
                              i_d_feedforward);
            break;
    }
    if (!(m.v_d > 0.0)) throw DomainError("grid lost: d-axis voltage must be > 0");
    const double i_q_ref = -refs.q_ref / (1.5 * m.v_d);
    return clamp_magnitude({i_d_ref, i_q_ref}, cfg.i_limit);
}

double buck_current_loop_step(double i_ref, double i_l, PiState& s, const PiGains& g,
                              double v_link, double v_out_meas, double r_dc, double dt) {
    if (!(v_link > 0.0)) throw DomainError("buck loop needs v_link > 0");
    const double ff = v_out_meas + r_dc * i_ref;
    const double u = pi_step(g, s, i_ref - i_l, dt, 0.0, v_link, ff);
    return u / v_link;
}

double supervisor_step(const SupervisorConfig& cfg, SupervisorState& s, double p_gen_measured,
                       double f_measured, double p_elz_current, double dt) {
    if (dt <= 0.0) throw ConfigError("supervisor_step needs dt > 0");
    const double target = p_elz_current + (cfg.p_net_target - p_gen_measured) +
                          cfg.droop_gain * (f_measured - cfg.f_nominal);
    const double tau = std::max(cfg.response_time, dt);
    double step = (target - s.p_ref) * dt / tau;
    step = std::clamp(step, -cfg.ramp_limit * dt, cfg.ramp_limit * dt);
    s.p_ref = std::clamp(s.p_ref + step, cfg.p_min, cfg.p_max);
    return s.p_ref;
}

}  // namespace elzsim
