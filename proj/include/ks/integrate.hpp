#pragma once

// Time stepping: classical RK4, an integrating-factor RK4 for stiff runs, and
// the maximum-stable-step search.

#include "ks/errors.hpp"
#include "ks/linalg.hpp"
#include "ks/system.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ks {

inline constexpr double blow_up_threshold = 1e6;

struct Trajectory {
    ModelSpec spec;
    Geometry geometry;
    std::vector<double> times;
    std::vector<Vector> states;

    std::size_t size() const noexcept { return times.size(); }
};

namespace detail {

inline void check_bounded(std::span<const double> x, long step, double t)
{
    for (double v : x)
        if (!std::isfinite(v) || std::abs(v) > blow_up_threshold)
            throw BlowUpError(step, t, "solution blew up at step " + std::to_string(step) + " (t = " + std::to_string(t) + ")");
}

} // namespace detail

/// Classical four-stage Runge-Kutta with reusable stage storage.
class Rk4 {
public:
    explicit Rk4(const System& system)
        : sys_(&system)
        , k1_(system.dim())
        , k2_(system.dim())
        , k3_(system.dim())
        , k4_(system.dim())
        , tmp_(system.dim())
    {
    }

    void step(Vector& x, double dt)
    {
        const std::size_t n = x.size();
        sys_->rhs(x, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
        sys_->rhs(tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
        sys_->rhs(tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + dt * k3_[i];
        sys_->rhs(tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    const System* sys_;
    Vector k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step; throws BlowUpError (step 1) on a non-finite result.
inline Vector rk4_step(const System& system, std::span<const double> x, double dt)
{
    if (!(dt > 0.0)) fail(ErrorKind::usage, "dt must be positive");
    Vector y(x.begin(), x.end());
    Rk4(system).step(y, dt);
    for (double v : y)
        if (!std::isfinite(v)) throw BlowUpError(1, dt, "RK4 step produced a non-finite value");
    return y;
}

/// Integrating-factor (Lawson) RK4. The linear part, diagonal in the system's
/// modal basis, is propagated exactly; RK4 handles the nonlinear remainder.
/// Stable for steps set by the nonlinearity rather than by 4k^4.
class LawsonRk4 {
public:
    LawsonRk4(const System& system, double dt)
        : sys_(&system)
        , dt_(dt)
    {
        if (!(dt > 0.0)) fail(ErrorKind::usage, "dt must be positive");
        const Vector& rates = system.linear_rates();
        e_.resize(rates.size());
        eh_.resize(rates.size());
        for (std::size_t i = 0; i < rates.size(); ++i) {
            e_[i] = std::exp(rates[i] * dt);
            eh_[i] = std::exp(0.5 * rates[i] * dt);
        }
        const std::size_t n = system.dim();
        for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &c2_, &x_, &f_}) v->resize(n);
    }

    double dt() const noexcept { return dt_; }
    const Vector& full_factor() const noexcept { return e_; }
    const Vector& half_factor() const noexcept { return eh_; }

    /// Nonlinear part of the RHS in modal coordinates.
    void nonlinear(std::span<const double> c, std::span<double> out)
    {
        sys_->from_modal(c, x_);
        sys_->rhs(x_, f_, Part::nonlinear);
        sys_->to_modal(f_, out);
    }

    /// Advances modal coefficients c by one step.
    void step_modal(Vector& c)
    {
        const std::size_t n = c.size();
        const double h = dt_;
        nonlinear(c, k1_);
        for (std::size_t i = 0; i < n; ++i) c2_[i] = eh_[i] * (c[i] + 0.5 * h * k1_[i]);
        nonlinear(c2_, k2_);
        for (std::size_t i = 0; i < n; ++i) c2_[i] = eh_[i] * c[i] + 0.5 * h * k2_[i];
        nonlinear(c2_, k3_);
        for (std::size_t i = 0; i < n; ++i) c2_[i] = e_[i] * c[i] + h * eh_[i] * k3_[i];
        nonlinear(c2_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            c[i] = e_[i] * c[i] + h / 6.0 * (e_[i] * k1_[i] + 2.0 * eh_[i] * (k2_[i] + k3_[i]) + k4_[i]);
    }

    /// Advances a physical state by `steps` steps.
    void advance(Vector& x, long steps)
    {
        Vector c(x.size());
        sys_->to_modal(x, c);
        for (long s = 0; s < steps; ++s) {
            step_modal(c);
            if (s % 64 == 63) detail::check_bounded(c, s + 1, static_cast<double>(s + 1) * dt_);
        }
        sys_->from_modal(c, x);
        detail::check_bounded(x, steps, static_cast<double>(steps) * dt_);
    }

private:
    const System* sys_;
    double dt_;
    Vector e_, eh_;
    Vector k1_, k2_, k3_, k4_, c2_, x_, f_;
};

namespace detail {

inline long step_count(double dt, double t_end)
{
    if (!(dt > 0.0) || !(t_end > 0.0)) fail(ErrorKind::usage, "dt and t_end must be positive");
    const double ratio = t_end / dt;
    const long n = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) return static_cast<long>(std::ceil(ratio));
    return n;
}

template <class Stepper>
Trajectory run(const System& system, Vector x, double dt, double t_end, int record_every, Stepper&& step)
{
    if (record_every < 1) fail(ErrorKind::usage, "record_every must be >= 1");
    if (x.size() != system.dim()) fail(ErrorKind::incompatible_domain, "initial state has the wrong dimension");
    Trajectory traj{system.spec(), system.geometry(), {}, {}};
    const long n = step_count(dt, t_end);
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (long s = 1; s <= n; ++s) {
        step(x);
        const double t = static_cast<double>(s) * dt;
        detail::check_bounded(x, s, t);
        if (s % record_every == 0 || s == n) {
            traj.times.push_back(t);
            traj.states.push_back(x);
        }
    }
    return traj;
}

} // namespace detail

/// RK4 from t = 0 to t_end, recording every `record_every` steps and the final
/// state. Throws BlowUpError once ||x||_inf exceeds 1e6.
inline Trajectory integrate(const System& system, Vector x0, double dt, double t_end, int record_every = 1)
{
    Rk4 rk(system);
    return detail::run(system, std::move(x0), dt, t_end, record_every, [&](Vector& x) { rk.step(x, dt); });
}

/// As integrate(), with the integrating-factor scheme.
inline Trajectory integrate_stiff(const System& system, Vector x0, double dt, double t_end, int record_every = 1)
{
    LawsonRk4 lawson(system, dt);
    Vector c(x0.size());
    return detail::run(system, std::move(x0), dt, t_end, record_every, [&](Vector& x) {
        system.to_modal(x, c);
        lawson.step_modal(c);
        system.from_modal(c, x);
    });
}

/// Whether RK4 at step dt keeps ||x||_2 <= bound * max(1, ||x0||_2) over the horizon.
inline bool rk4_stays_bounded(const System& system, std::span<const double> x0, double dt, double horizon,
                              double bound_factor)
{
    const double limit = bound_factor * std::max(1.0, norm2(x0));
    Vector x(x0.begin(), x0.end());
    Rk4 rk(system);
    const long n = static_cast<long>(std::ceil(horizon / dt));
    for (long s = 0; s < n; ++s) {
        rk.step(x, dt);
        const double r = norm2(x);
        if (!std::isfinite(r) || r > limit) return false;
    }
    return true;
}

inline double round_significant(double v, int digits)
{
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(v)))));
    return std::round(v * scale) / scale;
}

/// Largest RK4 step, to two significant figures, keeping the run from x0 bounded
/// over `horizon`. x0 must be a (near) stable steady state.
inline double max_stable_dt(const System& system, std::span<const double> x0, double horizon = 1.0,
                            double bound_factor = 10.0)
{
    if (!(horizon > 0.0) || !(bound_factor > 1.0)) fail(ErrorKind::usage, "horizon must be > 0 and bound_factor > 1");
    const auto ev = eigenvalues(system.jacobian(x0));
    double widest = 0.0;
    for (const auto& l : ev) widest = std::max(widest, std::abs(l));
    if (ev.front().real() > 1e-8 * std::max(1.0, widest))
        fail(ErrorKind::search_invalid,
             "base state is unstable (leading eigenvalue real part " + std::to_string(ev.front().real()) + ")");
    if (widest == 0.0) fail(ErrorKind::search_invalid, "Jacobian vanishes; no stability limit");

    auto stable = [&](double dt) { return rk4_stays_bounded(system, x0, dt, horizon, bound_factor); };
    double lo = 2.8 / widest;
    double hi = lo;
    if (stable(lo)) {
        do {
            lo = hi;
            hi *= 1.25;
            if (hi > 1e3 * horizon) fail(ErrorKind::search_invalid, "no unstable step found");
        } while (stable(hi));
    } else {
        do {
            hi = lo;
            lo *= 0.8;
            if (lo < 1e-14) fail(ErrorKind::search_invalid, "no stable step found");
        } while (!stable(lo));
    }
    while (round_significant(lo, 2) != round_significant(hi, 2) && (hi - lo) > 1e-4 * lo) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
    }
    return round_significant(lo, 2);
}

} // namespace ks
