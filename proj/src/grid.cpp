#include "elzsim/grid.hpp"

#include <cmath>

namespace elzsim {

GeneratorState generator_step(const GeneratorParams& p, const GeneratorState& s,
                              double p_elec_demand, double dt) {
    if (dt <= 0.0) throw ConfigError("generator_step needs dt > 0");
    if (!all_finite({s.omega, s.governor_integrator}) || s.omega <= 0.0)
        throw DivergenceError("generator omega", 0.0);

    const double w_ref = p.omega_nominal();
    const double t_base = p.torque_base();

    // Implicit midpoint on omega; the governor integral is folded in so the
    // whole step is one scalar Newton solve.
    auto residual = [&](double w_next) {
        const double w_m = 0.5 * (s.omega + w_next);
        const double dw_pu = (w_ref - w_m) / w_ref;
        const double integ_m = s.governor_integrator + 0.5 * dt * p.ki_speed * dw_pu;
        const double t_m = (p.kp_speed * dw_pu + integ_m) * t_base;
        const double t_e = p_elec_demand / w_m;
        return p.j_g * (w_next - s.omega) / dt - t_m + t_e;
    };

    double w_next = s.omega;
    for (int it = 0; it < 20; ++it) {
        const double w_m = 0.5 * (s.omega + w_next);
        const double dfdw = p.j_g / dt +
                            0.5 * t_base * (p.kp_speed + 0.5 * dt * p.ki_speed) / w_ref +
                            0.5 * p_elec_demand / (w_m * w_m);
        const double delta = residual(w_next) / dfdw;
        w_next -= delta;
        if (std::abs(delta) < 1e-12 * w_ref) break;
    }
    if (!std::isfinite(w_next) || w_next <= 0.0)
        throw DivergenceError("generator omega", 0.0);

    const double w_m = 0.5 * (s.omega + w_next);
    const double dw_pu = (w_ref - w_m) / w_ref;

    GeneratorState next;
    next.omega = w_next;
    next.governor_integrator = s.governor_integrator + dt * p.ki_speed * dw_pu;
    next.p_elec = p_elec_demand;
    const double integ_m = s.governor_integrator + 0.5 * dt * p.ki_speed * dw_pu;
    next.p_mech = (p.kp_speed * dw_pu + integ_m) * t_base * w_m;
    return next;
}

DynamicLoadState load_step(const DynamicLoadState& s, double p_target, double ramp_limit,
                           double dt) {
    if (dt <= 0.0) throw ConfigError("load_step needs dt > 0");
    DynamicLoadState next = s;
    next.p_cmd = p_target;
    next.p_actual = slew_toward(s.p_actual, p_target, ramp_limit, dt);
    return next;
}

double bus_power_balance(double generation, std::span<const double> loads, double electrolyzer) {
    double net = generation - electrolyzer;
    for (double l : loads) net -= l;
    return net;
}

}  // namespace elzsim
