#pragma once

// Averaged power-train models: ideal step-down transformer, three-phase
// two-level active front-end rectifier in the dq frame (amplitude-invariant
// convention), DC-link capacitor, optional buck DC/DC stage, and the
// calibrated conduction-loss accounting.
//
// All step functions integrate with the trapezoidal rule and book every
// power term at the state midpoints, which makes the per-step balance
//   p_ac_in = p_loss + p_dc_out + d(stored energy)/dt
// an identity of the discrete update (up to rounding), not an approximation.

#include <utility>

#include "elzsim/common.hpp"
#include "elzsim/stack.hpp"

namespace elzsim {

/// Secondary-side AC parameters seen by the rectifier.
struct AcSideParams {
    double r_ac = 10e-6;           //!< [ohm] per-phase series resistance
    double l_ac = 15.8e-6;         //!< [H] per-phase series inductance
    double v_ll_secondary = 75.0;  //!< [V rms] line-to-line at the secondary
    double f_nominal = 60.0;       //!< [Hz]
    double turns_ratio = 480.0 / 75.0;  //!< primary/secondary

    double v_phase_peak() const { return v_ll_secondary * std::sqrt(2.0 / 3.0); }
    double omega_nominal() const { return two_pi * f_nominal; }
};

/// Conduction-loss model: calibrated scale factor on the device-drop term
/// plus a fixed floor that stands in for switching losses.
struct LossModel {
    double v_sw = 1.7;     //!< [V] switch forward drop
    double v_d = 1.5;      //!< [V] diode forward drop
    double k_cond = 1.0;   //!< calibration factor on the conduction term
    double p_fixed = 0.0;  //!< [W] fixed loss floor
};

struct RectifierParams {
    AcSideParams ac;
    double c_dc = 7.5e-3;  //!< [F] DC-link capacitance
};

/// Rectifier state plus the power bookkeeping of the most recent step.
/// Modulation convention: converter phase voltage = m * v_dc / sqrt(3).
struct RectifierState {
    double i_d = 0.0;   //!< [A] d-axis AC current (into the converter)
    double i_q = 0.0;   //!< [A] q-axis AC current
    double v_dc = 0.0;  //!< [V] DC-link voltage

    double p_ac_in = 0.0;        //!< [W] drawn from the grid EMF last step
    double p_loss = 0.0;         //!< [W] series + device losses last step
    double p_dc_out = 0.0;       //!< [W] delivered to the DC side last step
    bool boost_violation = false;  //!< v_dc ended below sqrt(2)*v_ll
};

struct BuckParams {
    double l_dc = 50e-6;   //!< [H] inductor
    double r_dc = 0.1e-3;  //!< [ohm] inductor series resistance
    double c_out = 1.2e-3; //!< [F] output capacitance
};

struct BuckState {
    double i_l = 0.0;    //!< [A] inductor current, >= 0 (unidirectional stage)
    double v_out = 0.0;  //!< [V] output capacitor / stack terminal voltage
    double duty = 0.0;   //!< commanded duty ratio in [0, 1]
};

/// Bookkeeping of one buck step; i_link_mid is the average-model current the
/// stage pulled from the DC link (duty * i_l at the midpoint plus the
/// device-loss equivalent), which is what the link equation must see.
struct BuckStepResult {
    BuckState buck;
    StackState stack;
    double i_link_mid = 0.0;   //!< [A] drawn from the link
    double p_from_link = 0.0;  //!< [W] taken from the link (incl. device loss)
    double p_loss = 0.0;       //!< [W] device + r_dc losses
    double p_to_stack = 0.0;   //!< [W] delivered at the stack terminal
};

/// Command inputs held constant across one rectifier step.
struct RectifierInputs {
    double m_d = 0.0;        //!< modulation, |m| <= 1 enforced upstream
    double m_q = 0.0;
    double v_gd = 0.0;       //!< [V] grid EMF, d axis (grid frame)
    double v_gq = 0.0;       //!< [V] grid EMF, q axis
    double omega = two_pi * 60.0;  //!< [rad/s] grid electrical frequency
    double i_dc_draw = 0.0;  //!< [A] constant-current load on the link (midpoint value)
};

/// Ideal transformer: v_secondary = v_primary/ratio, i_primary = i_secondary/ratio.
std::pair<double, double> transformer_map(double v_primary, double i_secondary, double ratio);

/// Lowest DC-link voltage with linear current control: sqrt(2) * v_ll_rms.
double min_dc_link(double v_ll_rms);

/// Device conduction loss k_cond * 3 * (2/pi) * i_phase_amplitude * (v_sw+v_d)/2 + p_fixed.
double conduction_loss(double i_phase_amplitude, double i_dc, const LossModel& loss);

/// Conduction term of the loss model before calibration (k_cond = 1, no floor).
double conduction_base(double i_phase_amplitude, const LossModel& loss);

/// dq current amplitude that carries (p, q) at a given d-axis voltage.
double dq_current_amplitude(double p, double q, double v_d);

/// Solve k_cond * base + p_fixed = target at two operating points.
/// Throws ConfigError if the fit comes out unphysical (k <= 0 or floor < 0).
std::pair<double, double> fit_conduction_two_point(double base1, double target1, double base2,
                                                   double target2);

/// p_dc_stack / p_ac_in; requires p_ac_in > 0.
double efficiency(double p_ac_in, double p_dc_stack);

/// Advance AC currents and the DC link one trapezoidal step with the
/// modulation and load draw held. Device loss is drawn from the link as a
/// constant current computed at the old state.
RectifierState rectifier_step(const RectifierInputs& in, const RectifierState& s,
                              const RectifierParams& p, const LossModel& loss, double dt);

/// Advance the buck inductor, output capacitor and attached stack one
/// trapezoidal step with duty and the link voltage held. With
/// stack_dynamic = false the stack follows the reduced static law
/// v_rev + r_total*i instead of the RC-branch form.
BuckStepResult buck_step(double duty, double v_link, const BuckState& s,
                         const StackParams& stack_p, const StackState& stack_s,
                         const BuckParams& p, const LossModel& loss, double dt,
                         bool stack_dynamic = true);

/// Energy stored in the rectifier stage (AC inductors + DC-link capacitor).
double rectifier_stored_energy(const RectifierState& s, const RectifierParams& p);

/// Energy stored in the buck stage (inductor + output capacitor).
double buck_stored_energy(const BuckState& s, const BuckParams& p);

}  // namespace elzsim
