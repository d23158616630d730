#pragma once

// Scaled electric grid for the grid-support scenario: first-order
// synchronous generator with a per-unit PI speed regulator, RL line, and a
// ramp-limited constant-power dynamic load. Quasi-static phasor coupling;
// the swing equation is integrated with an implicit midpoint step so the
// kinetic-energy bookkeeping closes exactly.

#include <span>

#include "elzsim/common.hpp"

namespace elzsim {

struct GeneratorParams {
    double s_rated = 3e6;    //!< [VA]
    double v_ll = 480.0;     //!< [V rms]
    double f_nominal = 60.0; //!< [Hz]
    double j_g = 35.0;       //!< [kg m^2]
    double kp_speed = 20.0;  //!< [pu torque / pu speed]
    double ki_speed = 10.0;  //!< [pu torque / (pu speed * s)]
    double r_s = 1e-3;       //!< [ohm] stator resistance (phasor drop only)
    double l_s = 50e-6;      //!< [H] stator inductance (phasor drop only)

    double omega_nominal() const { return two_pi * f_nominal; }
    double torque_base() const { return s_rated / omega_nominal(); }
};

struct GeneratorState {
    double omega = two_pi * 60.0;      //!< [rad/s]
    double governor_integrator = 0.0;  //!< [pu torque]
    double p_elec = 0.0;               //!< [W] electrical power drawn last step
    double p_mech = 0.0;               //!< [W] booked mechanical power last step
};

struct DynamicLoadState {
    double p_cmd = 0.0;     //!< [W] target
    double p_actual = 0.0;  //!< [W] ramp-limited actual
    double q_actual = 0.0;  //!< [VAr]
};

/// Advance the swing dynamics j*domega/dt = T_m - T_e one step, T_e =
/// p_elec_demand/omega and T_m from the per-unit speed PI. Integral action
/// returns omega to nominal in steady state.
GeneratorState generator_step(const GeneratorParams& p, const GeneratorState& s,
                              double p_elec_demand, double dt);

/// Slew the load toward p_target at up to ramp_limit watts per second.
DynamicLoadState load_step(const DynamicLoadState& s, double p_target, double ramp_limit,
                           double dt);

/// Net power flow at the generation bus: generation - sum(loads) - electrolyzer.
double bus_power_balance(double generation, std::span<const double> loads, double electrolyzer);

}  // namespace elzsim
