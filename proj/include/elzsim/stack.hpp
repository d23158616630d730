#pragma once

// Electrical model of the PEM electrolyzer stack: reversible EMF behind a
// membrane resistance with an activation-loss RC branch (static and dynamic
// forms), plus the series/parallel scaling from a reference cell group to the
// full stack.

#include <optional>

#include "elzsim/common.hpp"

namespace elzsim {

/// Parameters of the reference cell group the fit was measured on.
struct CellGroupParams {
    double v_int = 4.38;   //!< [V] reversible EMF of the group
    double r_int = 0.088;  //!< [ohm] membrane resistance
    double r1 = 0.035;     //!< [ohm] activation-loss resistance
    double c1 = 37.26;     //!< [F] double-layer capacitance
    double i_max = 50.0;   //!< [A] validity limit of the fit
};

/// Scaled stack parameters. r_total = r_int_series + r1_s is the static
/// series resistance; the (r1_s, c1_s) branch is the dynamic form.
struct StackParams {
    double v_rev = 0.0;    //!< [V] stack reversible EMF
    double r_total = 0.0;  //!< [ohm] static series resistance
    double r1_s = 0.0;     //!< [ohm] scaled RC branch resistance
    double c1_s = 0.0;     //!< [F] scaled RC branch capacitance
    double i_rated = 0.0;  //!< [A]
    double p_rated = 0.0;  //!< [W]

    /// Membrane part of the series path (dynamic model).
    double r_int() const { return r_total - r1_s; }
};

/// Dynamic state: RC-branch voltage and terminal current. The stack is a
/// load; current is clamped at zero from below (no reverse electrolysis).
struct StackState {
    double v_c1 = 0.0;  //!< [V] RC-branch capacitor voltage
    double i_dc = 0.0;  //!< [A] terminal current, >= 0
};

/// Scale a reference group of cells_per_group cells to a stack of n_series
/// cells per string and n_parallel strings. Per-cell values are the group
/// values divided by cells_per_group; resistances then scale by
/// n_series/n_parallel and the EMF by n_series. The RC time constant is
/// preserved. Optional overrides pin v_rev / r_total to externally
/// established values; the RC branch keeps its scaled form either way.
StackParams scale_stack(const CellGroupParams& cell, int cells_per_group, int n_series,
                        int n_parallel, std::optional<double> v_rev_override = {},
                        std::optional<double> r_total_override = {});

/// Steady-state terminal voltage v_rev + r_total * i_dc. i_dc must be >= 0.
double static_voltage(const StackParams& p, double i_dc);

/// Nonnegative current drawing exactly p_dc watts in the static model
/// (root of r_total*i^2 + v_rev*i - p_dc = 0).
double current_for_power(const StackParams& p, double p_dc);

/// Advance the series r_int + (r1 || c1) + EMF network one step under a
/// constant terminal voltage (trapezoidal). Under constant v_terminal the
/// current converges to (v_terminal - v_rev)/r_total.
StackState dynamic_step(const StackParams& p, const StackState& s, double v_terminal, double dt);

/// Midpoint terminal current of the step dynamic_step(p, s, ...) -> s_next
/// performed at v_terminal; this is the value the step actually integrated
/// and the one consistent energy bookkeeping has to use.
double step_midpoint_current(const StackParams& p, const StackState& s, const StackState& s_next,
                             double v_terminal);

}  // namespace elzsim
