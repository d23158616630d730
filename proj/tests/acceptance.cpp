// Acceptance suite: every release criterion at its stated tolerance, one
// pass/fail line per criterion. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "elzsim/control.hpp"
#include "elzsim/engine.hpp"
#include "elzsim/grid.hpp"
#include "elzsim/stack.hpp"
#include "elzsim/trace_io.hpp"

using namespace elzsim;

namespace {

struct Criterion {
    std::string name;
    bool ok = true;
    std::vector<std::string> notes{};

    void require(bool cond, const std::string& what) {
        if (!cond) ok = false;
        notes.push_back(std::string(cond ? "ok  " : "FAIL") + " " + what);
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool within(double value, double target, double rel) {
    return std::abs(value - target) <= rel * std::abs(target);
}

double run_timed(const Scenario& s, SimOutput& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = simulate(s);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

double max_channel(const Trace& t, const char* name) {
    double m = 0.0;
    for (double x : t.channel(name)) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

int main() {
    std::vector<Criterion> results;
    SimOutput fig9;
    SimOutput fig11;
    SimOutput fig12;
    SimOutput fig14;
    double t_fig9 = 0.0, t_fig14 = 0.0;

    // ---- criterion 1: single-stage 200 kW / 50 kVAr operating point ----
    {
        Criterion c{"criterion 1: no-DC/DC 200 kW point (fig9 segment 1)"};
        t_fig9 = run_timed(preset_scenario("fig9"), fig9);
        const Metrics m = extract_steady_state(fig9.trace, 0.015, 0.0249);
        const double i = m.channels.at("i_stack_A").mean;
        const double v = m.channels.at("v_dc_V").mean;
        c.require(within(i, 1155.96, 0.02), fmt("i_dc %.2f A vs 1155.96 A (tol 2%%)", i));
        c.require(within(v, 168.48, 0.005), fmt("v_dc %.3f V vs 168.48 V (tol 0.5%%)", v));
        c.require(std::abs(m.efficiency - 0.97378) <= 0.010,
                  fmt("efficiency %.4f vs 0.97378 (tol 1.0 pp)", m.efficiency));
        c.require(t_fig9 < 5.0, fmt("runtime %.3f s < 5 s", t_fig9));
        results.push_back(c);
    }

    // ---- criterion 2: single-stage 500 kW segment ----
    {
        Criterion c{"criterion 2: no-DC/DC 500 kW point (fig9 segment 2)"};
        const Metrics m = extract_steady_state(fig9.trace, 0.040, 0.0499);
        const double i = m.channels.at("i_stack_A").mean;
        const double v = m.channels.at("v_dc_V").mean;
        c.require(within(i, 2501.54, 0.02), fmt("i_dc %.2f A vs 2501.54 A (tol 2%%)", i));
        c.require(within(v, 194.88, 0.005), fmt("v_dc %.3f V vs 194.88 V (tol 0.5%%)", v));
        c.require(std::abs(m.efficiency - 0.975) <= 0.010,
                  fmt("efficiency %.4f vs 0.975 (tol 1.0 pp)", m.efficiency));
        results.push_back(c);
    }

    // ---- criterion 3: transient envelope ----
    {
        Criterion c{"criterion 3: 200->500 kW transient settles within 10 ms"};
        const SettlingResult r = settling_time(fig9.trace, "p_ac_W", 0.025, 0.02);
        c.require(r.settled, "P settles inside the trace");
        c.require(r.settled && r.time <= 0.010,
                  fmt("measured settling %.3f ms (envelope 10 ms, reported value)", 1e3 * r.time));
        results.push_back(c);
    }

    // ---- criterion 4: DC/DC topology points and efficiency ordering ----
    {
        Criterion c{"criterion 4: DC/DC topology (fig11/fig12)"};
        fig11 = simulate(preset_scenario("fig11"));
        fig12 = simulate(preset_scenario("fig12"));

        const Metrics m11 = extract_steady_state(fig11.trace, 0.040, 0.0499);
        c.require(within(m11.channels.at("v_dc_V").mean, 250.0, 0.01),
                  fmt("fig11 link %.3f V vs 250 V (tol 1%%)", m11.channels.at("v_dc_V").mean));
        c.require(within(m11.channels.at("v_stack_V").mean, 145.84, 0.02),
                  fmt("fig11 stack %.3f V vs 145.84 V (tol 2%%)", m11.channels.at("v_stack_V").mean));
        c.require(within(m11.channels.at("i_stack_A").mean, 13.03, 0.02),
                  fmt("fig11 stack %.3f A vs 13.03 A (tol 2%%)", m11.channels.at("i_stack_A").mean));
        c.require(std::abs(m11.efficiency - 0.95) <= 0.015,
                  fmt("fig11 efficiency %.4f vs 0.95 (tol 1.5 pp)", m11.efficiency));

        const Metrics s1 = extract_steady_state(fig12.trace, 0.018, 0.0249);
        c.require(within(s1.channels.at("v_stack_V").mean, 168.39, 0.02),
                  fmt("fig12 seg1 stack %.3f V vs 168.39 V (tol 2%%)", s1.channels.at("v_stack_V").mean));
        c.require(within(s1.channels.at("i_stack_A").mean, 1140.2, 0.02),
                  fmt("fig12 seg1 stack %.2f A vs 1140.2 A (tol 2%%)", s1.channels.at("i_stack_A").mean));
        c.require(within(s1.channels.at("v_dc_V").mean, 250.0, 0.01),
                  fmt("fig12 seg1 link %.3f V vs 250 V (tol 1%%)", s1.channels.at("v_dc_V").mean));
        c.require(std::abs(s1.efficiency - 0.96) <= 0.015,
                  fmt("fig12 seg1 efficiency %.4f vs 0.96 (tol 1.5 pp)", s1.efficiency));

        const Metrics s2 = extract_steady_state(fig12.trace, 0.045, 0.0499);
        c.require(within(s2.channels.at("v_stack_V").mean, 194.75, 0.02),
                  fmt("fig12 seg2 stack %.3f V vs 194.75 V (tol 2%%)", s2.channels.at("v_stack_V").mean));
        c.require(within(s2.channels.at("i_stack_A").mean, 2464.7, 0.02),
                  fmt("fig12 seg2 stack %.2f A vs 2464.7 A (tol 2%%)", s2.channels.at("i_stack_A").mean));
        c.require(within(s2.channels.at("v_dc_V").mean, 250.0, 0.01),
                  fmt("fig12 seg2 link %.3f V vs 250 V (tol 1%%)", s2.channels.at("v_dc_V").mean));
        c.require(std::abs(s2.efficiency - 0.96) <= 0.015,
                  fmt("fig12 seg2 efficiency %.4f vs 0.96 (tol 1.5 pp)", s2.efficiency));

        const Metrics a200 = extract_steady_state(fig9.trace, 0.015, 0.0249);
        c.require(s1.efficiency < a200.efficiency,
                  fmt("DC/DC efficiency %.4f strictly below single-stage %.4f at 200 kW",
                      s1.efficiency, a200.efficiency));
        results.push_back(c);
    }

    // ---- criterion 5: grid support ----
    {
        Criterion c{"criterion 5: grid support (fig14)"};
        const Scenario sc = preset_scenario("fig14");
        t_fig14 = run_timed(sc, fig14);
        const auto& time = fig14.trace.time;
        const auto& p_elz = fig14.trace.channel("p_elz_W");
        const auto& f = fig14.trace.channel("f_Hz");
        const double elz0 = p_elz.front();
        const double t_event = 1.0;

        // compensation of -400 kW +/- 5 % reached within 1 s and held
        bool comp_ok = true;
        for (std::size_t i = 0; i < time.size(); ++i)
            if (time[i] >= t_event + 1.0 && std::abs(p_elz[i] - elz0 + 400e3) > 0.05 * 400e3)
                comp_ok = false;
        std::size_t at_1s = 0;
        while (at_1s + 1 < time.size() && time[at_1s] < t_event + 1.0) ++at_1s;
        c.require(comp_ok, fmt("consumption change %.1f kW at +1 s, 400 +/- 20 kW, held after",
                               (p_elz[at_1s] - elz0) / 1e3));

        const Metrics m = extract_steady_state(fig14.trace, 8.0, 10.0);
        c.require(within(m.channels.at("p_gen_W").mean, 1150e3, 0.02),
                  fmt("generation %.1f kW vs 1150 kW (tol 2%%)", m.channels.at("p_gen_W").mean / 1e3));

        bool freq_ok = true;
        double worst_f = 0.0;
        for (std::size_t i = 0; i < time.size(); ++i) {
            if (time[i] >= t_event + 5.0) {
                worst_f = std::max(worst_f, std::abs(f[i] - 60.0));
                if (std::abs(f[i] - 60.0) > 0.02) freq_ok = false;
            }
        }
        c.require(freq_ok, fmt("frequency within 60 +/- 0.02 Hz from +5 s (worst %.4f Hz)", worst_f));
        c.require(t_fig14 < 30.0, fmt("runtime %.2f s < 30 s for the 10 s simulation", t_fig14));
        results.push_back(c);
    }

    // ---- criterion 6: property suites ----
    {
        Criterion c{"criterion 6: property suites"};

        // per-step energy balance on every scenario
        bool energy_ok = true;
        std::string worst_note;
        double worst_rel = 0.0;
        for (const char* name : {"fig8", "fig9", "fig11", "fig12", "fig14"}) {
            const SimOutput out = simulate(preset_scenario(name));
            const char* pchan =
                preset_scenario(name).topology == Topology::GridSupport ? "p_gen_W" : "p_ac_W";
            const double rel =
                max_channel(out.trace, "residual_W") / std::max(1.0, max_channel(out.trace, pchan));
            if (rel > worst_rel) {
                worst_rel = rel;
                worst_note = name;
            }
            if (rel > 1e-6) energy_ok = false;
        }
        c.require(energy_ok, fmt(("per-step energy balance <= 1e-6 relative on every preset "
                                  "(worst " + worst_note + ": %.2e)").c_str(), worst_rel));

        // dq round-trip error < 1e-12 over 1e4 random balanced triples
        {
            unsigned long long seed = 0x6a09e667f3bcc909ull;
            auto uni = [&](double lo, double hi) {
                seed = seed * 6364136223846793005ull + 1442695040888963407ull;
                return lo + (hi - lo) * static_cast<double>((seed >> 11) & ((1ull << 53) - 1)) /
                                9007199254740992.0;
            };
            double worst = 0.0;
            for (int k = 0; k < 10000; ++k) {
                const double th = uni(0.0, two_pi);
                const Dq x{uni(-1.0, 1.0), uni(-1.0, 1.0)};
                const Dq back = abc_to_dq(th, dq_to_abc(th, x));
                worst = std::max({worst, std::abs(back.d - x.d), std::abs(back.q - x.q)});
            }
            c.require(worst < 1e-12, fmt("dq round-trip error %.2e < 1e-12", worst));
        }

        // modulation magnitude never above 1
        {
            double worst = 0.0;
            for (const SimOutput* out : {&fig9, &fig11, &fig12}) {
                const auto& md = out->trace.channel("m_d");
                const auto& mq = out->trace.channel("m_q");
                for (std::size_t i = 0; i < md.size(); ++i)
                    worst = std::max(worst, std::hypot(md[i], mq[i]));
            }
            c.require(worst <= 1.0 + 1e-12, fmt("modulation magnitude max %.6f <= 1", worst));
        }

        // static/dynamic stack agreement after 10 tau
        {
            const StackParams p = scale_stack(CellGroupParams{}, 3, 35, 70, 145.5, 0.02);
            const double tau = p.r1_s * p.c1_s;
            StackState st{0.0, 0.0};
            const double dt = 1e-3;
            const long n = static_cast<long>(std::ceil(10.0 * tau / dt));
            for (long k = 0; k < n; ++k) st = dynamic_step(p, st, 168.48, dt);
            const double i_static = (168.48 - p.v_rev) / p.r_total;
            const double rel = std::abs(st.i_dc - i_static) / i_static;
            c.require(rel <= 1e-6, fmt("static/dynamic agreement %.2e <= 1e-6 after 10 tau", rel));
        }

        // determinism: byte-identical repeat runs
        {
            const SimOutput again = simulate(preset_scenario("fig9"));
            const bool same = trace_to_csv(again.trace) == trace_to_csv(fig9.trace);
            c.require(same, "repeat run of fig9 is byte-identical");
        }

        // step-size convergence on dt halving
        {
            Scenario s = preset_scenario("fig9");
            s.solver.dt = 0.5e-5;
            const SimOutput fine = simulate(s);
            double worst = 0.0;
            for (const auto& window : {std::pair{0.018, 0.024}, std::pair{0.044, 0.0499}}) {
                const Metrics a = extract_steady_state(fig9.trace, window.first, window.second);
                const Metrics b = extract_steady_state(fine.trace, window.first, window.second);
                for (const char* ch : {"p_ac_W", "v_dc_V", "i_stack_A", "eta"}) {
                    const double rel = std::abs(a.channels.at(ch).mean - b.channels.at(ch).mean) /
                                       std::max(std::abs(a.channels.at(ch).mean), 1e-12);
                    worst = std::max(worst, rel);
                }
            }
            c.require(worst < 1e-4, fmt("dt halving shifts steady metrics by %.2e < 1e-4", worst));
        }

        // ramp-limit exactness, including reversals
        {
            DynamicLoadState s{0.0, 0.0, 0.0};
            unsigned long long seed = 0x1234abcd5678ull;
            auto uni = [&](double lo, double hi) {
                seed = seed * 6364136223846793005ull + 1442695040888963407ull;
                return lo + (hi - lo) * static_cast<double>((seed >> 11) & ((1ull << 53) - 1)) /
                                9007199254740992.0;
            };
            bool exact = true;
            double target = 1e6, prev = 0.0;
            for (int k = 0; k < 20000; ++k) {
                if (k % 23 == 0) target = uni(0.0, 1e6);
                s = load_step(s, target, 100e6, 1e-4);
                if (std::abs(s.p_actual - prev) > 100e6 * 1e-4 + 1e-9) exact = false;
                prev = s.p_actual;
            }
            c.require(exact, "load ramp per-step change never exceeds ramp*dt");
        }

        // boost-constraint flag correctness on a deliberately infeasible scenario
        {
            Scenario s = default_scenario(Topology::NoDcDc);
            s.rectifier.ac.v_ll_secondary = 125.0;
            s.rectifier.ac.turns_ratio = 480.0 / 125.0;
            s.control.mode = OuterMode::DcVoltageReactive;
            s.control.vdc_ref = 140.0;
            s.control.q_ref = 0.0;
            s.solver.t_end = 0.02;
            const SimOutput lax = simulate(s, false);
            c.require(lax.violations.reference_clamped,
                      "Vdc_ref 140 V on the 480/125 secondary is flagged (non-strict)");
            bool strict_throws = false;
            try {
                simulate(s, true);
            } catch (const InfeasibleReferenceError&) {
                strict_throws = true;
            } catch (const ConstraintViolationError&) {
                strict_throws = true;
            }
            c.require(strict_throws, "strict mode aborts with the exit-3 error class");
        }

        results.push_back(c);
    }

    int failed = 0;
    for (const auto& c : results) {
        std::printf("%s: %s\n", c.ok ? "PASS" : "FAIL", c.name.c_str());
        for (const auto& n : c.notes) std::printf("    %s\n", n.c_str());
        if (!c.ok) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed,
                results.size());
    return failed;
}
