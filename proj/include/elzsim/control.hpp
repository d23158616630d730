#pragma once

// Control stack of the converter system: Park transforms, SRF-PLL, inner
// dq current control with decoupling and modulation clamping, selectable
// outer loops (P-Q, Vdc-Q, Idc-Q, link-voltage-Q), buck current control,
// and the grid-services supervisor.
//
// Conventions: amplitude-invariant Park transform, q axis lagging d by 90
// degrees. AC currents are taken positive into the converter, so active
// power p = 1.5*(v_d*i_d + v_q*i_q) is positive when the electrolyzer
// consumes, and the reactive channel q = 1.5*(v_q*i_d - v_d*i_q) tracks
// q_ref through i_q_ref = -q_ref/(1.5*v_d); positive q_ref draws lagging
// current. Both signs of q_ref are symmetric (two-quadrant operation).

#include "elzsim/common.hpp"

namespace elzsim {

struct Abc {
    double a = 0.0, b = 0.0, c = 0.0;
};

struct Dq {
    double d = 0.0, q = 0.0;
};

/// Amplitude-invariant Park transform at angle theta.
Dq abc_to_dq(double theta, const Abc& x);

/// Inverse Park transform; exact round trip for zero-sequence-free signals.
Abc dq_to_abc(double theta, const Dq& x);

/// Re-express a dq vector in a frame whose angle leads the current one by delta.
Dq rotate_frame(const Dq& x, double delta);

/// Scale the vector down to |x| <= limit, preserving its angle.
Dq clamp_magnitude(const Dq& x, double limit);

struct PllGains {
    double kp = 0.0;        //!< [rad/s per normalized v_q]
    double ki = 0.0;        //!< [rad/s^2 per normalized v_q]
    double omega_ff = two_pi * 60.0;  //!< [rad/s] center frequency
};

struct PllState {
    double theta = 0.0;               //!< [rad] in [0, 2*pi)
    double omega_hat = two_pi * 60.0; //!< [rad/s]
    double integrator = 0.0;          //!< [rad/s] deviation from omega_ff
};

/// One SRF-PLL update: drives the q-axis voltage to zero; omega_hat tracks
/// the grid frequency for balanced input.
PllState pll_step(const Abc& v_abc, const PllState& s, const PllGains& g, double dt);

/// Current references carrying (p_ref, q_ref) at d-axis voltage v_d,
/// magnitude-limited to i_limit with the angle preserved.
Dq pq_to_idq_refs(double p_ref, double q_ref, double v_d, double i_limit);

struct CurrentLoopState {
    PiState d;
    PiState q;
};

struct ModulationCmd {
    double m_d = 0.0;
    double m_q = 0.0;
    bool clamped = false;  //!< magnitude hit the unit circle this step
};

/// Inner current loop: per-axis PI with +/- omega*l_ac cross decoupling and
/// grid-voltage feedforward. The modulation vector is clamped to magnitude 1
/// (angle preserved); while clamped both integrators are frozen.
ModulationCmd current_loop_step(const Dq& i_ref, const Dq& i_meas, CurrentLoopState& s,
                                const PiGains& g, double omega, double l_ac, const Dq& v_ff,
                                double v_dc, double dt);

enum class OuterMode {
    ActiveReactive,    //!< P_ref / Q_ref feedforward through the current loop
    DcVoltageReactive, //!< PI on the rectifier DC voltage
    DcCurrentReactive, //!< PI on the stack DC current
    LinkVoltageReactive //!< PI on the DC-link voltage (DC/DC topology)
};

struct OuterRefs {
    OuterMode mode = OuterMode::ActiveReactive;
    double ref = 0.0;    //!< P [W], Vdc [V], Idc [A] or Vlink [V] depending on mode
    double q_ref = 0.0;  //!< [VAr]
};

struct OuterMeasurements {
    double v_d = 0.0;    //!< [V] PLL-frame grid voltage
    double v_dc = 0.0;   //!< [V] rectifier DC voltage
    double i_dc = 0.0;   //!< [A] stack current
    double v_link = 0.0; //!< [V] DC-link voltage (DC/DC topology)
};

struct OuterLoopConfig {
    PiGains dc_voltage;
    PiGains dc_current;
    PiGains link_voltage;
    double i_limit = 0.0;     //!< [A] current-reference magnitude limit
    double v_dc_floor = 0.0;  //!< [V] max(boost limit, stack EMF)
    double i_dc_max = 0.0;    //!< [A] stack current ceiling for Idc references
};

/// Produce current references for the selected mode. DC-quantity modes run a
/// PI on (ref - measurement); the Q channel is always independent. Throws
/// InfeasibleReferenceError when a DC reference sits below its physical floor.
/// i_d_feedforward adds a known load-current term ahead of the PI (used by
/// the link-voltage mode to pass the measured DC/DC draw through).
Dq outer_loop_step(const OuterRefs& refs, const OuterMeasurements& m, PiState& s,
                   const OuterLoopConfig& cfg, double dt, double i_d_feedforward = 0.0);

/// Buck current loop: PI on (i_ref - i_l) with output-voltage feedforward,
/// duty clamped to [0, 1] with anti-windup.
double buck_current_loop_step(double i_ref, double i_l, PiState& s, const PiGains& g,
                              double v_link, double v_out_meas, double r_dc, double dt);

struct SupervisorConfig {
    double p_net_target = 0.0;     //!< [W] generation-bus power to hold
    double telemetry_delay = 0.1;  //!< [s] measurement transport delay
    double p_min = 0.0;            //!< [W]
    double p_max = 750e3;          //!< [W]
    double ramp_limit = 2e6;       //!< [W/s]
    double droop_gain = 0.0;       //!< [W/Hz] frequency-watt gain, 0 disables
    double response_time = 0.25;   //!< [s] first-order approach to the target
    double f_nominal = 60.0;       //!< [Hz]
};

struct SupervisorState {
    double p_ref = 0.0;  //!< [W] current electrolyzer power order
};

/// Rule-based net-power hold: move p_ref toward
///   p_elz_current + (p_net_target - p_gen_measured) + droop_gain*(f - f_nom)
/// through the response-time lag, then ramp-limit and clamp to [p_min, p_max].
/// Measurements are expected already delayed by the caller's transport lines.
double supervisor_step(const SupervisorConfig& cfg, SupervisorState& s, double p_gen_measured,
                       double f_measured, double p_elz_current, double dt);

}  // namespace elzsim
