#include "elzsim/converter.hpp"

#include <cmath>

namespace elzsim {

std::pair<double, double> transformer_map(double v_primary, double i_secondary, double ratio) {
    if (!(ratio > 0.0)) throw ConfigError("transformer ratio must be > 0");
    return {v_primary / ratio, i_secondary / ratio};
}

double min_dc_link(double v_ll_rms) {
    if (!(v_ll_rms > 0.0)) throw DomainError("line-to-line voltage must be > 0");
    return std::sqrt(2.0) * v_ll_rms;
}

double conduction_base(double i_phase_amplitude, const LossModel& loss) {
    const double v_eff = 0.5 * (loss.v_sw + loss.v_d);
    return 3.0 * (2.0 / pi) * i_phase_amplitude * v_eff;
}

double conduction_loss(double i_phase_amplitude, double i_dc, const LossModel& loss) {
    if (i_phase_amplitude < 0.0 || i_dc < 0.0)
        throw DomainError("conduction_loss currents must be >= 0");
    return loss.k_cond * conduction_base(i_phase_amplitude, loss) + loss.p_fixed;
}

double dq_current_amplitude(double p, double q, double v_d) {
    if (!(v_d > 0.0)) throw DomainError("d-axis voltage must be > 0");
    return std::hypot(p, q) / (1.5 * v_d);
}

std::pair<double, double> fit_conduction_two_point(double base1, double target1, double base2,
                                                   double target2) {
    const double du = base2 - base1;
    if (std::abs(du) < 1e-12) throw ConfigError("loss calibration points are degenerate");
    const double k = (target2 - target1) / du;
    const double p_fixed = target1 - k * base1;
    if (!(k > 0.0) || p_fixed < 0.0)
        throw ConfigError("loss calibration produced an unphysical fit (k_cond=" +
                          std::to_string(k) + ", p_fixed=" + std::to_string(p_fixed) + ")");
    return {k, p_fixed};
}

double efficiency(double p_ac_in, double p_dc_stack) {
    if (!(p_ac_in > 0.0)) throw DomainError("efficiency needs p_ac_in > 0");
    return p_dc_stack / p_ac_in;
}

RectifierState rectifier_step(const RectifierInputs& in, const RectifierState& s,
                              const RectifierParams& p, const LossModel& loss, double dt) {
    if (dt <= 0.0) throw ConfigError("rectifier_step needs dt > 0");
    if (!all_finite({s.i_d, s.i_q, s.v_dc}))
        throw DivergenceError("rectifier state", 0.0);

    const double r = p.ac.r_ac;
    const double l = p.ac.l_ac;
    const double wl = in.omega * l;
    const double c = p.c_dc;

    // Device loss drawn from the link as a constant current over the step,
    // sized at the old operating point.
    const double amp_old = std::hypot(s.i_d, s.i_q);
    const double p_dev = loss.k_cond * conduction_base(amp_old, loss) + loss.p_fixed;
    const double i_loss_src = p_dev > 0.0 ? p_dev / std::max(s.v_dc, 1.0) : 0.0;

    // Trapezoidal step of M*dx/dt = G*x_m + c_vec, x = (i_d, i_q, v_dc).
    // Modulation scaling: converter phase voltage = m * v_dc / sqrt(3), so
    // |m| = 1 corresponds exactly to the boost limit v_dc = sqrt(2)*v_ll.
    const double km = 1.0 / std::sqrt(3.0);
    const std::array<std::array<double, 3>, 3> g{{
        {-r, wl, -km * in.m_d},
        {-wl, -r, -km * in.m_q},
        {1.5 * km * in.m_d, 1.5 * km * in.m_q, 0.0},
    }};
    const std::array<double, 3> c_vec{in.v_gd, in.v_gq, -in.i_dc_draw - i_loss_src};
    const std::array<double, 3> m_over_dt{l / dt, l / dt, c / dt};
    const std::array<double, 3> x0{s.i_d, s.i_q, s.v_dc};

    std::array<std::array<double, 3>, 3> a{};
    std::array<double, 3> b{};
    for (int i = 0; i < 3; ++i) {
        b[i] = m_over_dt[i] * x0[i] + c_vec[i];
        for (int j = 0; j < 3; ++j) {
            a[i][j] = -0.5 * g[i][j];
            b[i] += 0.5 * g[i][j] * x0[j];
        }
        a[i][i] += m_over_dt[i];
    }
    const auto x1 = solve_dense<3>(a, b);

    RectifierState next;
    next.i_d = x1[0];
    next.i_q = x1[1];
    next.v_dc = x1[2];
    if (!all_finite({next.i_d, next.i_q, next.v_dc}))
        throw DivergenceError("rectifier state", 0.0);

    const double i_dm = 0.5 * (s.i_d + next.i_d);
    const double i_qm = 0.5 * (s.i_q + next.i_q);
    const double v_dcm = 0.5 * (s.v_dc + next.v_dc);
    next.p_ac_in = 1.5 * (in.v_gd * i_dm + in.v_gq * i_qm);
    next.p_loss = 1.5 * r * (i_dm * i_dm + i_qm * i_qm) + v_dcm * i_loss_src;
    next.p_dc_out = v_dcm * in.i_dc_draw;
    next.boost_violation = next.v_dc < min_dc_link(p.ac.v_ll_secondary);
    return next;
}

BuckStepResult buck_step(double duty, double v_link, const BuckState& s,
                         const StackParams& stack_p, const StackState& stack_s,
                         const BuckParams& p, const LossModel& loss, double dt,
                         bool stack_dynamic) {
    if (dt <= 0.0) throw ConfigError("buck_step needs dt > 0");
    if (!(duty >= 0.0 && duty <= 1.0)) throw DomainError("duty must lie in [0, 1]");
    if (!all_finite({s.i_l, s.v_out, stack_s.v_c1}))
        throw DivergenceError("buck state", 0.0);

    const double u_in = duty * v_link;

    // Device loss from the old operating point, held across the step.
    const double v_drop = duty * loss.v_sw + (1.0 - duty) * loss.v_d;
    const double p_dev = loss.k_cond * s.i_l * v_drop + loss.p_fixed;

    // With the static stack the series branch collapses to r_total and the
    // RC capacitor voltage just tracks r1_s * i for bookkeeping.
    const double r_st = stack_dynamic ? stack_p.r_int() : stack_p.r_total;

    // The output node discharges through r_st; when the caller's step is
    // coarser than that time constant, sub-step so the trapezoidal update
    // stays monotone and the conduction clamp cannot deadlock.
    const double tau_node = r_st * p.c_out;
    const int n_sub = static_cast<int>(std::clamp(std::ceil(dt / tau_node), 1.0, 64.0));
    const double h = dt / n_sub;

    auto trap_assemble = [&](auto& g, auto& c_vec, const auto& m_over_h, const auto& x0) {
        constexpr std::size_t n = std::tuple_size<std::decay_t<decltype(x0)>>::value;
        std::array<std::array<double, n>, n> a{};
        std::array<double, n> b{};
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = m_over_h[i] * x0[i] + c_vec[i];
            for (std::size_t j = 0; j < n; ++j) {
                a[i][j] = -0.5 * g[i][j];
                b[i] += 0.5 * g[i][j] * x0[j];
            }
            a[i][i] += m_over_h[i];
        }
        return solve_dense<n>(a, b);
    };

    BuckState cur = s;
    StackState cur_st = stack_s;
    double e_from_link = 0.0;  // accumulated over sub-steps, [J]
    double e_loss_r = 0.0;
    double e_to_stack = 0.0;
    double q_link = 0.0;  // charge drawn from the link by the switch [C]

    for (int sub = 0; sub < n_sub; ++sub) {
        double i_l_next = 0.0, v_out_next = 0.0, v_c1_next = 0.0;
        bool i_l_pinned = false;
        bool conducting = true;

        if (stack_dynamic) {
            auto solve3 = [&](bool cond) {
                std::array<std::array<double, 3>, 3> g{};
                std::array<double, 3> c_vec{};
                g[0] = {-p.r_dc, -1.0, 0.0};
                c_vec[0] = u_in;
                if (cond) {
                    g[1] = {1.0, -1.0 / r_st, 1.0 / r_st};
                    c_vec[1] = stack_p.v_rev / r_st;
                    g[2] = {0.0, 1.0 / r_st, -1.0 / r_st - 1.0 / stack_p.r1_s};
                    c_vec[2] = -stack_p.v_rev / r_st;
                } else {
                    g[1] = {1.0, 0.0, 0.0};
                    g[2] = {0.0, 0.0, -1.0 / stack_p.r1_s};
                }
                const std::array<double, 3> m_over_h{p.l_dc / h, p.c_out / h, stack_p.c1_s / h};
                const std::array<double, 3> x0{cur.i_l, cur.v_out, cur_st.v_c1};
                return trap_assemble(g, c_vec, m_over_h, x0);
            };
            auto x = solve3(true);
            if ((0.5 * (cur.v_out + x[1]) - stack_p.v_rev - 0.5 * (cur_st.v_c1 + x[2])) / r_st <
                0.0) {
                conducting = false;
                x = solve3(false);
            }
            i_l_next = x[0];
            v_out_next = x[1];
            v_c1_next = x[2];
            if (i_l_next < 0.0) {
                i_l_pinned = true;
                const double i_lm = 0.5 * cur.i_l;
                auto solve2p = [&](bool cond) {
                    std::array<std::array<double, 2>, 2> g{};
                    std::array<double, 2> c_vec{};
                    if (cond) {
                        g[0] = {-1.0 / r_st, 1.0 / r_st};
                        c_vec[0] = i_lm + stack_p.v_rev / r_st;
                        g[1] = {1.0 / r_st, -1.0 / r_st - 1.0 / stack_p.r1_s};
                        c_vec[1] = -stack_p.v_rev / r_st;
                    } else {
                        c_vec[0] = i_lm;
                        g[1] = {0.0, -1.0 / stack_p.r1_s};
                    }
                    const std::array<double, 2> m_over_h{p.c_out / h, stack_p.c1_s / h};
                    const std::array<double, 2> x0{cur.v_out, cur_st.v_c1};
                    return trap_assemble(g, c_vec, m_over_h, x0);
                };
                conducting = true;
                auto y = solve2p(true);
                if ((0.5 * (cur.v_out + y[0]) - stack_p.v_rev - 0.5 * (cur_st.v_c1 + y[1])) /
                        r_st <
                    0.0) {
                    conducting = false;
                    y = solve2p(false);
                }
                i_l_next = 0.0;
                v_out_next = y[0];
                v_c1_next = y[1];
            }
        } else {
            auto solve2 = [&](bool cond) {
                std::array<std::array<double, 2>, 2> g{};
                std::array<double, 2> c_vec{};
                g[0] = {-p.r_dc, -1.0};
                c_vec[0] = u_in;
                if (cond) {
                    g[1] = {1.0, -1.0 / r_st};
                    c_vec[1] = stack_p.v_rev / r_st;
                } else {
                    g[1] = {1.0, 0.0};
                }
                const std::array<double, 2> m_over_h{p.l_dc / h, p.c_out / h};
                const std::array<double, 2> x0{cur.i_l, cur.v_out};
                return trap_assemble(g, c_vec, m_over_h, x0);
            };
            auto x = solve2(true);
            if ((0.5 * (cur.v_out + x[1]) - stack_p.v_rev) / r_st < 0.0) {
                conducting = false;
                x = solve2(false);
            }
            i_l_next = x[0];
            v_out_next = x[1];
            if (i_l_next < 0.0) {
                i_l_pinned = true;
                const double i_lm = 0.5 * cur.i_l;
                auto solve1p = [&](bool cond) {
                    const double g00 = cond ? -1.0 / r_st : 0.0;
                    const double c0 = i_lm + (cond ? stack_p.v_rev / r_st : 0.0);
                    const double m = p.c_out / h;
                    return ((m + 0.5 * g00) * cur.v_out + c0) / (m - 0.5 * g00);
                };
                conducting = true;
                double v = solve1p(true);
                if ((0.5 * (cur.v_out + v) - stack_p.v_rev) / r_st < 0.0) {
                    conducting = false;
                    v = solve1p(false);
                }
                i_l_next = 0.0;
                v_out_next = v;
            }
            const double i_end =
                conducting ? std::max(0.0, (v_out_next - stack_p.v_rev) / r_st) : 0.0;
            v_c1_next = i_end * stack_p.r1_s;
        }

        const double i_lm = i_l_pinned ? 0.5 * cur.i_l : 0.5 * (cur.i_l + i_l_next);
        const double v_outm = 0.5 * (cur.v_out + v_out_next);
        double i_stkm = 0.0;
        if (conducting) {
            if (stack_dynamic) {
                const double v_c1m = 0.5 * (cur_st.v_c1 + v_c1_next);
                i_stkm = (v_outm - stack_p.v_rev - v_c1m) / r_st;
            } else {
                i_stkm = (v_outm - stack_p.v_rev) / r_st;
            }
        }

        e_from_link += u_in * i_lm * h;
        e_loss_r += p.r_dc * i_lm * i_lm * h;
        e_to_stack += v_outm * i_stkm * h;
        q_link += duty * i_lm * h;
        if (i_l_pinned) {
            // Forcing i_l to zero bypasses the inductor equation; the skipped
            // term is commutation energy and lands in the loss book so the
            // step balance stays exact.
            const double di_dt_term = p.l_dc * (0.0 - cur.i_l) / h;
            const double eq_rhs = u_in - p.r_dc * i_lm - v_outm;
            e_loss_r += (eq_rhs - di_dt_term) * i_lm * h;
        }

        cur.i_l = i_l_next;
        cur.v_out = v_out_next;
        cur_st.v_c1 = v_c1_next;
        const double raw_end = stack_dynamic
                                   ? (v_out_next - stack_p.v_rev - v_c1_next) / r_st
                                   : (v_out_next - stack_p.v_rev) / r_st;
        cur_st.i_dc = conducting ? std::max(0.0, raw_end) : 0.0;
    }

    BuckStepResult out;
    out.buck = cur;
    out.buck.duty = duty;
    out.stack = cur_st;
    if (!all_finite({out.buck.i_l, out.buck.v_out, out.stack.v_c1}))
        throw DivergenceError("buck state", 0.0);

    out.i_link_mid = q_link / dt + (v_link > 0.0 ? p_dev / v_link : 0.0);
    out.p_from_link = e_from_link / dt + p_dev;
    out.p_loss = p_dev + e_loss_r / dt;
    out.p_to_stack = e_to_stack / dt;
    return out;
}

double rectifier_stored_energy(const RectifierState& s, const RectifierParams& p) {
    const double e_l = 1.5 * 0.5 * p.ac.l_ac * (s.i_d * s.i_d + s.i_q * s.i_q);
    const double e_c = 0.5 * p.c_dc * s.v_dc * s.v_dc;
    return e_l + e_c;
}

double buck_stored_energy(const BuckState& s, const BuckParams& p) {
    return 0.5 * p.l_dc * s.i_l * s.i_l + 0.5 * p.c_out * s.v_out * s.v_out;
}

}  // namespace elzsim
