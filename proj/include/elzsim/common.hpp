#pragma once

// Shared numeric helpers and error types for the simulation library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace elzsim {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

/// Bad configuration (parameters, scenario files, CLI arguments). CLI exit 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation called outside its domain (negative current, zero power base, lost grid).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite state during integration. CLI exit 2.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& channel, double t)
        : std::runtime_error("non-finite value in '" + channel + "' at t=" + std::to_string(t) + " s"),
          channel_(channel), time_(t) {}
    const std::string& channel() const noexcept { return channel_; }
    double time() const noexcept { return time_; }

private:
    std::string channel_;
    double time_;
};

/// Reference below a physical floor (DC voltage under the boost limit or stack EMF).
class InfeasibleReferenceError : public std::runtime_error {
public:
    explicit InfeasibleReferenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Constraint violated while running in strict mode. CLI exit 3.
class ConstraintViolationError : public std::runtime_error {
public:
    explicit ConstraintViolationError(const std::string& what) : std::runtime_error(what) {}
};

/// Wrap an angle to [0, 2*pi).
inline double wrap_angle(double theta) {
    double w = std::fmod(theta, two_pi);
    if (w < 0.0) w += two_pi;
    return w;
}

inline bool all_finite(std::initializer_list<double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Move `current` toward `target` at most `max_rate * dt` per call.
inline double slew_toward(double current, double target, double max_rate, double dt) {
    const double max_step = max_rate * dt;
    return current + std::clamp(target - current, -max_step, max_step);
}

/// Solve A*x = b in place by Gaussian elimination with partial pivoting.
/// Sized for the coupled electrical networks (N <= 6); throws on a singular pivot.
template <std::size_t N>
std::array<double, N> solve_dense(std::array<std::array<double, N>, N> a, std::array<double, N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300)
            throw DomainError("singular system in solve_dense");
        if (piv != col) {
            std::swap(a[piv], a[col]);
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / a[col][col];
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t i = N; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
};

/// Integrator plus saturation flag. While saturated the integrator is frozen
/// (integration steps that would push further into the limit are rejected).
struct PiState {
    double integrator = 0.0;
    bool saturated = false;
};

/// One PI update with output clamped to [u_min, u_max] and conditional anti-windup.
inline double pi_step(const PiGains& g, PiState& s, double error, double dt,
                      double u_min, double u_max, double feedforward = 0.0) {
    double integ = s.integrator + g.ki * error * dt;
    double u = feedforward + g.kp * error + integ;
    if (u > u_max) {
        if (integ > s.integrator) integ = s.integrator;  // reject windup
        u = feedforward + g.kp * error + integ;
        if (u > u_max) u = u_max;
        s.saturated = true;
    } else if (u < u_min) {
        if (integ < s.integrator) integ = s.integrator;
        u = feedforward + g.kp * error + integ;
        if (u < u_min) u = u_min;
        s.saturated = true;
    } else {
        s.saturated = false;
    }
    s.integrator = integ;
    return u;
}

/// Pure transport delay as a ring buffer with a whole number of steps.
/// push() returns the sample from `steps` calls ago; pre-filled with the
/// initial value so the line starts warm.
class DelayLine {
public:
    DelayLine() = default;

    DelayLine(double delay_s, double dt, double initial) { reset(delay_s, dt, initial); }

    void reset(double delay_s, double dt, double initial) {
        if (delay_s < 0.0 || dt <= 0.0) throw ConfigError("delay line needs delay >= 0 and dt > 0");
        steps_ = static_cast<std::size_t>(std::llround(delay_s / dt));
        buf_.assign(std::max<std::size_t>(steps_, 1), initial);
        head_ = 0;
    }

    double push(double x) {
        if (steps_ == 0) return x;
        const double oldest = buf_[head_];
        buf_[head_] = x;
        head_ = (head_ + 1) % steps_;
        return oldest;
    }

    std::size_t steps() const noexcept { return steps_; }

private:
    std::vector<double> buf_;
    std::size_t steps_ = 0;
    std::size_t head_ = 0;
};

}  // namespace elzsim
