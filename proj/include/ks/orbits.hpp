#pragma once

// Periodic orbits by single shooting: Newton on (phi_T(x) - x, F_1(x)) in the
// unknowns (x, T), Floquet multipliers from the finite-difference monodromy,
// and natural continuation in alpha with period-doubling detection.

#include "ks/continuation.hpp"
#include "ks/errors.hpp"
#include "ks/integrate.hpp"
#include "ks/linalg.hpp"
#include "ks/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ks {

struct PeriodicOrbit {
    Vector anchor;
    double period = 0.0;
    double alpha = 0.0;
    std::vector<Complex> floquet; ///< sorted by descending modulus
    bool stable = false;
    double residual = 0.0; ///< ||phi_T(anchor) - anchor||_2
    int iterations = 0;

    /// Index of the multiplier closest to 1 (the flow direction).
    std::size_t trivial_index() const
    {
        if (floquet.empty()) fail(ErrorKind::usage, "orbit has no Floquet multipliers");
        std::size_t best = 0;
        for (std::size_t i = 1; i < floquet.size(); ++i)
            if (std::abs(floquet[i] - 1.0) < std::abs(floquet[best] - 1.0)) best = i;
        return best;
    }

    Complex trivial_multiplier() const { return floquet[trivial_index()]; }

    /// Largest-modulus multiplier other than the trivial one.
    Complex dominant_multiplier() const
    {
        const std::size_t t = trivial_index();
        for (std::size_t i = 0; i < floquet.size(); ++i)
            if (i != t) return floquet[i];
        return Complex(0.0, 0.0);
    }
};

struct ShootingOptions {
    int steps_per_period = 2000;
    int max_iterations = 30;
    double tolerance = 1e-8; ///< on ||phi_T(x) - x|| / max(1, ||x||)
    double min_period = 1e-3;
    double column_step = 1e-6; ///< times max(1, ||x||)
    bool stiff = true;         ///< integrating-factor flow (false: classical RK4)
};

/// phi_T(x) with `steps` equal steps.
inline Vector flow_map(const System& sys, std::span<const double> x, double period, int steps, bool stiff = true)
{
    if (!(period > 0.0) || steps < 1) fail(ErrorKind::usage, "flow_map needs T > 0 and steps >= 1");
    const double dt = period / steps;
    Vector y(x.begin(), x.end());
    if (stiff) {
        LawsonRk4(sys, dt).advance(y, steps);
    } else {
        Rk4 rk(sys);
        for (int s = 0; s < steps; ++s) rk.step(y, dt);
        detail::check_bounded(y, steps, period);
    }
    return y;
}

/// d phi_T / dx by central differences, one column per state component.
inline Matrix monodromy(const System& sys, std::span<const double> x, double period, const ShootingOptions& opt = {},
                        double step_scale = 1.0)
{
    const std::size_t n = x.size();
    const double step = step_scale * opt.column_step * std::max(1.0, norm2(x));
    Matrix m(n, n);
    Vector xp(x.begin(), x.end());
    for (std::size_t j = 0; j < n; ++j) {
        const double keep = xp[j];
        xp[j] = keep + step;
        const Vector plus = flow_map(sys, xp, period, opt.steps_per_period, opt.stiff);
        xp[j] = keep - step;
        const Vector minus = flow_map(sys, xp, period, opt.steps_per_period, opt.stiff);
        xp[j] = keep;
        for (std::size_t i = 0; i < n; ++i) m(i, j) = (plus[i] - minus[i]) / (2.0 * step);
    }
    return m;
}

/// Richardson combination of the central differences at steps h and h/2,
/// (4 M(h/2) - M(h)) / 3. Strongly expanding orbits need the extra order for
/// the flow multiplier to stay at 1.
inline Matrix monodromy_extrapolated(const System& sys, std::span<const double> x, double period, const Matrix& coarse,
                                     const ShootingOptions& opt = {})
{
    Matrix m = monodromy(sys, x, period, opt, 0.5);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = (4.0 * m(i, j) - coarse(i, j)) / 3.0;
    return m;
}

/// Initial guess for the orbit born at a Hopf point: steady + eps Re(v) with
/// v the unit eigenvector of the crossing pair, period 2 pi / omega.
inline PeriodicOrbit hopf_seed(const System& sys, const BifurcationPoint& hb, const SteadyState& steady, double eps)
{
    if (hb.kind != BifurcationKind::hopf) fail(ErrorKind::usage, "hopf_seed needs a Hopf point");
    const System at = sys.at_alpha(steady.alpha);
    const Matrix j = at.jacobian(steady.x);
    const auto ev = eigenvalues(j);
    double scale = 1.0;
    for (const auto& l : ev) scale = std::max(scale, std::abs(l));
    const Complex target(hb.eigenvalue.real(), std::abs(hb.eigenvalue.imag()));
    const Complex* pick = nullptr;
    for (const auto& l : ev)
        if (l.imag() > 0.0 && (!pick || std::abs(l - target) < std::abs(*pick - target))) pick = &l;
    if (!pick || pick->imag() <= 1e-8 * scale)
        fail(ErrorKind::degenerate_hopf, "no complex pair with omega > 0 at alpha = " + std::to_string(steady.alpha));
    const double omega = pick->imag();
    PeriodicOrbit g;
    g.alpha = steady.alpha;
    g.period = 2.0 * std::numbers::pi / omega;
    g.anchor = steady.x;
    if (eps != 0.0) {
        const auto v = eigenvector(j, *pick);
        for (std::size_t i = 0; i < g.anchor.size(); ++i) g.anchor[i] += eps * v[i].real();
    }
    return g;
}

namespace detail {

// Distance a state moves over one period measured by the RHS: zero means the
// anchor is an equilibrium, not a point on a cycle.
inline bool looks_stationary(const System& sys, std::span<const double> x, double period)
{
    return norm2(sys.rhs(x)) * period <= 1e-6 * std::max(1.0, norm2(x));
}

} // namespace detail

namespace detail {

struct ShotResult {
    Vector end;
    double residual = 0.0; ///< ||phi_T(x) - x||
    double phase = 0.0;    ///< F_1(x)
    double merit = 0.0;
};

inline std::optional<ShotResult> shoot_once(const System& sys, std::span<const double> x, double period,
                                            const ShootingOptions& opt)
{
    ShotResult s;
    try {
        s.end = flow_map(sys, x, period, opt.steps_per_period, opt.stiff);
    } catch (const BlowUpError&) {
        return std::nullopt;
    }
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (s.end[i] - x[i]) * (s.end[i] - x[i]);
    s.residual = std::sqrt(r2);
    s.phase = sys.rhs(x)[0];
    s.merit = std::hypot(s.residual, s.phase * period);
    if (!std::isfinite(s.merit)) return std::nullopt;
    return s;
}

} // namespace detail

/// Newton shooting for a periodic orbit at the system's alpha, with a
/// backtracking line search on ||phi_T(x) - x||^2 + (T F_1(x))^2.
inline PeriodicOrbit shoot_orbit(const System& sys, const PeriodicOrbit& guess, const ShootingOptions& opt = {})
{
    if (!(guess.period > 0.0)) fail(ErrorKind::usage, "orbit guess needs a positive period");
    if (guess.anchor.size() != sys.dim()) fail(ErrorKind::incompatible_domain, "orbit guess has the wrong dimension");
    if (detail::looks_stationary(sys, guess.anchor, guess.period))
        fail(ErrorKind::orbit_not_found, "guess is an equilibrium (zero orbit amplitude)");
    const std::size_t n = sys.dim();
    Vector x = guess.anchor;
    double period = guess.period;
    auto shot = detail::shoot_once(sys, x, period, opt);
    if (!shot) fail(ErrorKind::orbit_not_found, "flow blew up from the orbit guess");
    // Chord iteration: the monodromy is reused while the merit falls quickly
    // and refreshed otherwise, and always recomputed at the converged point.
    std::optional<Matrix> m;
    bool fresh = false; // m was computed at the current x
    double last_merit = std::numeric_limits<double>::infinity();
    for (int it = 0;; ++it) {
        const Vector f = sys.rhs(x);
        const bool converged = shot->residual <= opt.tolerance * std::max(1.0, norm2(x))
                               && std::abs(f[0]) <= opt.tolerance * std::max(1.0, norm2(f));
        if (!fresh && (converged || !m || shot->merit > 0.25 * last_merit)) {
            m = monodromy(sys, x, period, opt);
            fresh = true;
        }
        last_merit = shot->merit;
        if (converged) {
            if (detail::looks_stationary(sys, x, period))
                fail(ErrorKind::orbit_not_found, "shooting collapsed onto an equilibrium");
            PeriodicOrbit o;
            o.floquet = eigenvalues(monodromy_extrapolated(sys, x, period, *m, opt));
            o.anchor = std::move(x);
            o.period = period;
            o.alpha = sys.alpha();
            std::stable_sort(o.floquet.begin(), o.floquet.end(),
                             [](const Complex& a, const Complex& b) { return std::abs(a) > std::abs(b); });
            o.residual = shot->residual;
            o.iterations = it;
            const std::size_t t = o.trivial_index();
            o.stable = true;
            for (std::size_t i = 0; i < o.floquet.size(); ++i)
                if (i != t && std::abs(o.floquet[i]) >= 1.0) o.stable = false;
            return o;
        }
        if (it >= opt.max_iterations)
            fail(ErrorKind::orbit_not_found, "shooting did not converge (residual " + std::to_string(shot->residual) + ")");

        Matrix a(n + 1, n + 1);
        const Vector f_end = sys.rhs(shot->end);
        const Matrix jac = sys.jacobian(x);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) a(i, k) = (*m)(i, k) - (i == k ? 1.0 : 0.0);
            a(i, n) = f_end[i];
            a(n, i) = jac(0, i);
        }
        Vector rhs(n + 1);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = shot->end[i] - x[i];
        rhs[n] = f[0];
        Vector dz;
        try {
            dz = LU(std::move(a)).solve(rhs);
        } catch (const Error&) {
            fail(ErrorKind::orbit_not_found, "singular shooting Jacobian");
        }
        double lambda = 1.0;
        if (std::abs(dz[n]) > 0.5 * period) lambda = 0.5 * period / std::abs(dz[n]);
        bool moved = false;
        for (int k = 0; k < 8 && !moved; ++k, lambda *= 0.5) {
            Vector xt(n);
            for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] - lambda * dz[i];
            const double tt = period - lambda * dz[n];
            if (tt < opt.min_period) continue;
            auto trial = detail::shoot_once(sys, xt, tt, opt);
            if (!trial || trial->merit >= shot->merit) continue;
            x = std::move(xt);
            period = tt;
            shot = std::move(trial);
            moved = true;
            fresh = false;
        }
        if (!moved) {
            if (period - dz[n] < opt.min_period)
                fail(ErrorKind::degenerate_orbit, "period collapsed below " + std::to_string(opt.min_period));
            // a stale monodromy may be to blame; refresh it before giving up
            if (!fresh) {
                m = monodromy(sys, x, period, opt);
                fresh = true;
                continue;
            }
            fail(ErrorKind::orbit_not_found, "shooting stalled (residual " + std::to_string(shot->residual) + ")");
        }
    }
}

inline PeriodicOrbit shoot_orbit(const System& sys, double alpha, const PeriodicOrbit& guess,
                                 const ShootingOptions& opt = {})
{
    return shoot_orbit(sys.at_alpha(alpha), guess, opt);
}

/// Root-mean-square of ||x(t)||_2 over one period, sampled at the shooting steps.
inline double orbit_norm(const System& sys, const PeriodicOrbit& o, int steps = 2000)
{
    const System at = sys.at_alpha(o.alpha);
    LawsonRk4 lawson(at, o.period / steps);
    Vector c(o.anchor.size());
    at.to_modal(o.anchor, c);
    double acc = 0.0;
    for (int s = 0; s < steps; ++s) {
        Vector x(c.size());
        at.from_modal(c, x);
        acc += dot(x, x);
        lawson.step_modal(c);
    }
    return std::sqrt(acc / steps);
}

struct OrbitContinuationOptions {
    double step = 0.25; ///< alpha increment
    double min_step = 1e-3;
    double locate_alpha = 5e-3;
    int max_orbits = 400;
    bool allow_partial = false; ///< return the branch so far instead of throwing on a stall
    bool follow_stable = false; ///< after a +1 crossing, move to the attracting cycle if there is one
    ShootingOptions shooting = [] {
        ShootingOptions o;
        o.max_iterations = 15;
        return o;
    }();
};

struct OrbitBranch {
    std::vector<PeriodicOrbit> orbits;
    bool complete = true; ///< false when a partial branch was returned after a stall
};

namespace detail {

inline bool is_real(const Complex& mu) { return std::abs(mu.imag()) <= 1e-9 * std::max(1.0, std::abs(mu)); }

// Real multipliers below -1.
inline int flip_count(const PeriodicOrbit& o)
{
    int c = 0;
    for (const auto& mu : o.floquet)
        if (is_real(mu) && mu.real() < -1.0) ++c;
    return c;
}

// Nontrivial real multipliers above +1.
inline int fold_count(const PeriodicOrbit& o)
{
    const std::size_t t = o.trivial_index();
    int c = 0;
    for (std::size_t i = 0; i < o.floquet.size(); ++i)
        if (i != t && is_real(o.floquet[i]) && o.floquet[i].real() > 1.0) ++c;
    return c;
}

// The most negative real multiplier (0 if there is none); it passes through
// -1 at a period doubling.
inline Complex flip_multiplier(const PeriodicOrbit& o)
{
    Complex best(0.0, 0.0);
    for (const auto& mu : o.floquet)
        if (is_real(mu) && mu.real() < best.real()) best = mu;
    return best;
}

// The largest nontrivial real multiplier (0 if there is none).
inline Complex fold_multiplier(const PeriodicOrbit& o)
{
    const std::size_t t = o.trivial_index();
    Complex best(0.0, 0.0);
    for (std::size_t i = 0; i < o.floquet.size(); ++i)
        if (i != t && is_real(o.floquet[i]) && o.floquet[i].real() > best.real()) best = o.floquet[i];
    return best;
}

inline PeriodicOrbit blend(const PeriodicOrbit& a, const PeriodicOrbit& b, double alpha)
{
    const double s = (alpha - a.alpha) / (b.alpha - a.alpha);
    PeriodicOrbit g;
    g.alpha = alpha;
    g.period = a.period + s * (b.period - a.period);
    g.anchor.resize(a.anchor.size());
    for (std::size_t i = 0; i < g.anchor.size(); ++i) g.anchor[i] = a.anchor[i] + s * (b.anchor[i] - a.anchor[i]);
    return g;
}

// Time-steps x for `periods` periods and stops on the section F_1 = 0 with F_1
// decreasing, giving an anchor for shooting.
inline Vector relax_onto_section(const System& at, std::span<const double> x0, double period, int periods, bool stiff)
{
    Vector x = flow_map(at, x0, periods * period, periods * 200, stiff);
    LawsonRk4 lawson(at, period / 400.0);
    double f0 = at.rhs(x)[0];
    for (int s = 0; s < 800; ++s) {
        Vector y = x;
        lawson.advance(y, 1);
        const double g0 = at.rhs(y)[0];
        x = std::move(y);
        if (f0 > 0.0 && g0 <= 0.0) break;
        f0 = g0;
    }
    return x;
}

// Shrinks a bracket [lo, hi] on which `count` changes until it is narrower than
// locate_alpha and the crossing multiplier is within 5e-3 of its critical
// value. Regula falsi on `gap`, kept inside the bracket.
template <class Count, class Gap>
PeriodicOrbit locate_crossing(const System& sys, PeriodicOrbit lo, PeriodicOrbit hi, const OrbitContinuationOptions& opt,
                              Count count, Gap gap)
{
    PeriodicOrbit best = std::abs(gap(lo)) <= std::abs(gap(hi)) ? lo : hi;
    for (int it = 0; it < 40; ++it) {
        const double width = hi.alpha - lo.alpha;
        if (std::abs(width) <= opt.locate_alpha && std::abs(gap(best)) <= 5e-3) break;
        if (std::abs(width) <= 1e-6 * std::max(1.0, std::abs(lo.alpha))) break;
        const double gl = gap(lo), gh = gap(hi);
        double s = gl != gh ? gl / (gl - gh) : 0.5;
        s = std::clamp(s, 0.1, 0.9);
        if (std::abs(width) > opt.locate_alpha && it % 3 == 2) s = 0.5;
        std::optional<PeriodicOrbit> m;
        for (double frac : {s, 0.25, 0.1}) {
            const double mid = lo.alpha + frac * width;
            for (const PeriodicOrbit* start : {&lo, &hi}) {
                PeriodicOrbit guess = *start;
                guess.alpha = mid;
                for (const PeriodicOrbit& gs : {blend(lo, hi, mid), guess}) {
                    try {
                        m = shoot_orbit(sys, mid, gs, opt.shooting);
                        break;
                    } catch (const Error&) {
                    }
                }
                if (m) break;
            }
            if (m) break;
        }
        if (!m) break;
        if (std::abs(gap(*m)) < std::abs(gap(best))) best = *m;
        (count(*m) == count(lo) ? lo : hi) = std::move(*m);
    }
    return best;
}

inline BifurcationPoint orbit_event(BifurcationKind kind, const PeriodicOrbit& o, Complex mu, const std::string& label)
{
    BifurcationPoint e;
    e.kind = kind;
    e.alpha = o.alpha;
    e.branch_label = label;
    e.eigenvalue = mu;
    e.x = o.anchor;
    return e;
}

} // namespace detail

/// Continues `first` in alpha towards alpha_end with a secant predictor.
/// Records period doublings (a real multiplier through -1) and, as pitchforks,
/// real multipliers through +1; both are located to locate_alpha.
inline std::pair<OrbitBranch, std::vector<BifurcationPoint>>
continue_orbits(const System& sys, const PeriodicOrbit& first, double alpha_end, const OrbitContinuationOptions& opt = {},
                const std::string& label = "orbit")
{
    if (first.floquet.empty()) fail(ErrorKind::usage, "continue_orbits needs a converged orbit");
    OrbitBranch branch;
    std::vector<BifurcationPoint> events;
    branch.orbits.push_back(first);
    std::size_t history = 0; // first orbit usable by the secant predictor
    const double dir = alpha_end >= first.alpha ? 1.0 : -1.0;
    double step = opt.step;
    const double close = 1e-9 * std::max(1.0, std::abs(alpha_end));
    while (dir * (alpha_end - branch.orbits.back().alpha) > close && static_cast<int>(branch.orbits.size()) < opt.max_orbits) {
        const PeriodicOrbit cur = branch.orbits.back();
        const double left = std::abs(alpha_end - cur.alpha);
        const double next_alpha = left <= 1.1 * step ? alpha_end : cur.alpha + dir * step;
        PeriodicOrbit guess = cur;
        guess.alpha = next_alpha;
        if (branch.orbits.size() - history > 1) guess = detail::blend(branch.orbits[branch.orbits.size() - 2], cur, next_alpha);
        std::optional<PeriodicOrbit> got;
        try {
            got = shoot_orbit(sys, next_alpha, guess, opt.shooting);
        } catch (const Error&) {
        }
        if (!got || std::abs(got->period - cur.period) > 0.25 * cur.period) {
            step *= 0.5;
            if (step < opt.min_step) {
                if (opt.allow_partial) {
                    branch.complete = false;
                    break;
                }
                fail(ErrorKind::continuation_stall, "orbit continuation stalled at alpha = " + std::to_string(cur.alpha));
            }
            continue;
        }
        if (detail::flip_count(*got) != detail::flip_count(cur)) {
            const auto at = detail::locate_crossing(sys, cur, *got, opt, detail::flip_count,
                                                    [](const PeriodicOrbit& o) { return detail::flip_multiplier(o).real() + 1.0; });
            events.push_back(detail::orbit_event(BifurcationKind::period_doubling, at, detail::flip_multiplier(at), label));
        }
        if (detail::fold_count(*got) != detail::fold_count(cur)) {
            const auto at = detail::locate_crossing(sys, cur, *got, opt, detail::fold_count,
                                                    [](const PeriodicOrbit& o) { return detail::fold_multiplier(o).real() - 1.0; });
            events.push_back(detail::orbit_event(BifurcationKind::pitchfork, at, detail::fold_multiplier(at), label));
            if (opt.follow_stable && cur.stable && !got->stable) {
                const System here = sys.at_alpha(got->alpha);
                Vector kick = got->anchor;
                const double amp = 1e-3 * std::max(1.0, norm2(kick));
                for (std::size_t i = 0; i < kick.size(); ++i) kick[i] += amp * std::sin(1.0 + 2.0 * static_cast<double>(i));
                try {
                    PeriodicOrbit relaxed = *got;
                    relaxed.anchor = detail::relax_onto_section(here, kick, got->period, 60, opt.shooting.stiff);
                    PeriodicOrbit moved = shoot_orbit(here, relaxed, opt.shooting);
                    if (moved.stable) {
                        got = std::move(moved);
                        history = branch.orbits.size();
                    }
                } catch (const Error&) {
                }
            }
        }
        branch.orbits.push_back(std::move(*got));
        if (branch.orbits.back().iterations < 4) step = std::min(opt.step, 2.0 * step);
    }
    return {std::move(branch), std::move(events)};
}

/// Converged orbit just past a Hopf point: seeds from the eigenvector, relaxes
/// towards the cycle by time stepping when that helps, then shoots.
inline PeriodicOrbit orbit_from_hopf(const System& sys, const BifurcationPoint& hb, double offset = 0.2,
                                     const ShootingOptions& opt = {})
{
    const double alpha = hb.alpha + offset;
    const System at = sys.at_alpha(alpha);
    const SteadyState steady = newton_solve(at, hb.x);
    const double amp = 0.05 * std::max(1.0, norm2(steady.x));
    const PeriodicOrbit seed = hopf_seed(sys, hb, steady, amp);
    std::optional<Error> last;
    for (int attempt = 0; attempt < 2; ++attempt) {
        PeriodicOrbit guess = seed;
        if (attempt == 0) {
            // A supercritical cycle attracts; a few dozen periods get close.
            try {
                guess.anchor = detail::relax_onto_section(at, seed.anchor, seed.period, 40, opt.stiff);
            } catch (const Error&) {
                continue;
            }
        }
        try {
            return shoot_orbit(at, guess, opt);
        } catch (const Error& e) {
            last = e;
        }
    }
    if (last) throw *last;
    fail(ErrorKind::orbit_not_found, "no orbit near the Hopf point at alpha = " + std::to_string(hb.alpha));
}

} // namespace ks
