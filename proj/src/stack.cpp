#include "elzsim/stack.hpp"

#include <cmath>
#include <string>

namespace elzsim {

namespace {

void check_cell(const CellGroupParams& c) {
    if (!(c.v_int > 0.0 && c.r_int > 0.0 && c.r1 > 0.0 && c.c1 > 0.0 && c.i_max > 0.0))
        throw ConfigError("cell group parameters must be strictly positive");
}

}  // namespace

StackParams scale_stack(const CellGroupParams& cell, int cells_per_group, int n_series,
                        int n_parallel, std::optional<double> v_rev_override,
                        std::optional<double> r_total_override) {
    check_cell(cell);
    if (cells_per_group < 1 || n_series < 1 || n_parallel < 1)
        throw ConfigError("scale_stack counts must be >= 1");

    const double per_cell = 1.0 / static_cast<double>(cells_per_group);
    const double series_parallel = static_cast<double>(n_series) / static_cast<double>(n_parallel);

    StackParams p;
    p.v_rev = v_rev_override.value_or(cell.v_int * per_cell * n_series);
    p.r_total = r_total_override.value_or((cell.r_int + cell.r1) * per_cell * series_parallel);
    p.r1_s = cell.r1 * per_cell * series_parallel;
    p.c1_s = cell.c1 * cells_per_group / series_parallel;
    p.i_rated = cell.i_max * n_parallel;
    p.p_rated = static_voltage(p, p.i_rated) * p.i_rated;

    if (!(p.v_rev > 0.0 && p.r_total > 0.0 && p.r_int() > 0.0))
        throw ConfigError("scaled stack parameters are not physical (check overrides)");
    return p;
}

double static_voltage(const StackParams& p, double i_dc) {
    if (i_dc < 0.0) throw DomainError("stack current must be >= 0, got " + std::to_string(i_dc));
    return p.v_rev + p.r_total * i_dc;
}

double current_for_power(const StackParams& p, double p_dc) {
    if (p_dc < 0.0) throw DomainError("stack power must be >= 0");
    if (p_dc == 0.0) return 0.0;
    const double disc = p.v_rev * p.v_rev + 4.0 * p.r_total * p_dc;
    return (std::sqrt(disc) - p.v_rev) / (2.0 * p.r_total);
}

StackState dynamic_step(const StackParams& p, const StackState& s, double v_terminal, double dt) {
    if (dt <= 0.0) throw ConfigError("dynamic_step needs dt > 0");
    if (v_terminal < 0.0) throw DomainError("terminal voltage must be >= 0");
    if (!all_finite({s.v_c1, s.i_dc}))
        throw DivergenceError("stack state", 0.0);

    const double r_int = p.r_int();
    const double h = dt / p.c1_s;

    // Trapezoidal on v_c1 with i = (v_t - v_rev - v_c1m)/r_int evaluated at the midpoint.
    // Conducting branch first; fall back to the clamped branch if the end
    // current comes out negative.
    const double drive = (v_terminal - p.v_rev) / r_int;
    const double g = 1.0 / r_int + 1.0 / p.r1_s;
    double v_c1_next = (s.v_c1 * (1.0 - 0.5 * h * g) + h * drive) / (1.0 + 0.5 * h * g);
    double i_next = (v_terminal - p.v_rev - v_c1_next) / r_int;

    if (i_next < 0.0) {
        // No conduction: the branch capacitor just discharges through r1.
        const double hg1 = h / p.r1_s;
        v_c1_next = s.v_c1 * (1.0 - 0.5 * hg1) / (1.0 + 0.5 * hg1);
        i_next = 0.0;
    }

    if (!all_finite({v_c1_next, i_next}))
        throw DivergenceError("stack state", 0.0);
    return StackState{v_c1_next, i_next};
}

double step_midpoint_current(const StackParams& p, const StackState& s, const StackState& s_next,
                             double v_terminal) {
    // dynamic_step leaves i_dc == 0 exactly when it took the clamped branch,
    // in which case the step integrated zero terminal current.
    if (s_next.i_dc <= 0.0) return 0.0;
    const double v_c1m = 0.5 * (s.v_c1 + s_next.v_c1);
    return (v_terminal - p.v_rev - v_c1m) / p.r_int();
}

}  // namespace elzsim
