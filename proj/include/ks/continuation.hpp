#pragma once

// Steady states, their spectra, and pseudo-arclength continuation in alpha
// with detection of pitchfork, fold and Hopf points.

#include "ks/errors.hpp"
#include "ks/linalg.hpp"
#include "ks/system.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ks {

struct SteadyState {
    Vector x;
    double alpha = 0.0;
    double residual_norm = 0.0;
    std::vector<Complex> eigenvalues; ///< descending real part
    int n_unstable = 0;
    int iterations = 0;

    bool stable() const noexcept { return n_unstable == 0; }
};

enum class BifurcationKind { pitchfork, fold, hopf, period_doubling };

inline const char* bifurcation_kind_name(BifurcationKind k) noexcept
{
    switch (k) {
    case BifurcationKind::pitchfork: return "pitchfork";
    case BifurcationKind::fold: return "fold";
    case BifurcationKind::hopf: return "hopf";
    case BifurcationKind::period_doubling: return "period-doubling";
    }
    return "?";
}

struct BifurcationPoint {
    BifurcationKind kind = BifurcationKind::pitchfork;
    double alpha = 0.0;
    std::string branch_label;
    Complex eigenvalue; ///< crossing eigenvalue (or multiplier) at the event
    Vector x;           ///< state at the event
};

struct Branch {
    std::string label;
    std::vector<SteadyState> points;
    std::vector<double> signed_norms;
};

struct NewtonOptions {
    int max_iterations = 50;
    double tolerance = 1e-10;
};

/// Count of eigenvalues with positive real part.
inline int count_unstable(std::span<const Complex> ev) noexcept
{
    int n = 0;
    for (const auto& l : ev)
        if (l.real() > 0.0) ++n;
    return n;
}

inline std::vector<Complex> eigen_spectrum(const Matrix& a) { return eigenvalues(a); }

/// Residual accepted as converged. The base level is tol * max(1, ||x||_2);
/// it is widened by the stiffness because evaluating a 4th difference on a
/// fine grid cannot resolve residuals below roughly eps * max|rate| * ||x||.
inline double residual_tolerance(const System& sys, std::span<const double> x, double tol = 1e-10)
{
    return tol * std::max(1.0, norm2(x)) * std::max(1.0, 1e-3 * sys.stiffness());
}

/// sign(u_1) * ||x||_2 * sqrt(reference_points / m), for odd states with m elements.
/// When u_1 is exactly zero the first nonzero component sets the sign.
inline double signed_norm(std::span<const double> w, int m, int reference_points = 48)
{
    if (m < 2) fail(ErrorKind::usage, "signed_norm needs m >= 2");
    return signed_sign(w) * norm2(w) * std::sqrt(static_cast<double>(reference_points) / m);
}

inline double signed_norm(const System& sys, std::span<const double> x, int reference_points = 48)
{
    const int m = sys.geometry().kind == Geometry::Kind::full ? sys.grid_points() / 2 : sys.geometry().n;
    return signed_norm(x, std::max(m, 2), reference_points);
}

namespace detail {

inline void fill_spectrum(const System& sys, SteadyState& s)
{
    s.eigenvalues = eigen_spectrum(sys.jacobian(s.x));
    s.n_unstable = count_unstable(s.eigenvalues);
}

} // namespace detail

/// Newton iteration for F(x) = 0 at the system's alpha.
inline SteadyState newton_solve(const System& sys, Vector guess, const NewtonOptions& opt = {})
{
    for (double v : guess)
        if (!std::isfinite(v)) fail(ErrorKind::usage, "Newton guess is not finite");
    if (guess.size() != sys.dim()) fail(ErrorKind::incompatible_domain, "Newton guess has the wrong dimension");
    SteadyState s;
    s.x = std::move(guess);
    s.alpha = sys.alpha();
    Vector f = sys.rhs(s.x);
    double r = norm2(f);
    for (int it = 0;; ++it) {
        if (r <= residual_tolerance(sys, s.x, opt.tolerance)) {
            s.residual_norm = r;
            s.iterations = it;
            detail::fill_spectrum(sys, s);
            return s;
        }
        if (it >= opt.max_iterations || !std::isfinite(r))
            throw DivergenceError(r, "Newton did not converge in " + std::to_string(opt.max_iterations)
                                         + " iterations (residual " + std::to_string(r) + ")");
        const Vector dx = LU(sys.jacobian(s.x)).solve(f);
        for (std::size_t i = 0; i < dx.size(); ++i) s.x[i] -= dx[i];
        sys.rhs(s.x, f);
        r = norm2(f);
    }
}

inline SteadyState newton_solve(const System& sys, double alpha, Vector guess, const NewtonOptions& opt = {})
{
    return newton_solve(sys.at_alpha(alpha), std::move(guess), opt);
}

struct ContinuationOptions {
    double alpha_min = 0.0;
    double alpha_max = 70.0;
    double initial_step = 0.1;
    double min_step = 1e-4;
    double max_step = 1.0;
    double stall_step = 1e-8;
    int max_points = 4000;
    int corrector_iterations = 12;
    double locate_alpha = 1e-3; ///< events are bisected to this alpha resolution
    double seed_amplitude = 1e-3;
};

/// A point on the curve F(x, alpha) = 0 together with its unit tangent.
struct CurvePoint {
    Vector y; ///< (x, alpha)
    Vector t; ///< unit tangent in the weighted norm
};

class Continuation {
public:
    Continuation(const System& system, ContinuationOptions options = {})
        : base_(system)
        , opt_(options)
        , n_(system.dim())
        , weight_(arclength_weight(system))
    {
    }

    /// State components are weighted so that the state part of the arclength
    /// is measured in signed-norm units (48 reference points on [0, pi]).
    static double arclength_weight(const System& sys) noexcept
    {
        return sys.grid_points() > 0 ? 96.0 / sys.grid_points() : 1.0;
    }

    const ContinuationOptions& options() const noexcept { return opt_; }
    std::size_t dim() const noexcept { return n_; }

    double inner(std::span<const double> a, std::span<const double> b) const noexcept
    {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += a[i] * b[i];
        return weight_ * s + a[n_] * b[n_];
    }

    System at(double alpha) const { return base_.at_alpha(alpha); }

    /// Jacobian [F_x  F_alpha] with an extra bottom row.
    Matrix augmented(std::span<const double> y, std::span<const double> row) const
    {
        const System sys = at(y[n_]);
        const std::span<const double> x = y.first(n_);
        const Matrix jx = sys.jacobian(x);
        const Vector fa = sys.alpha_derivative(x);
        Matrix a(n_ + 1, n_ + 1);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) a(i, j) = jx(i, j);
            a(i, n_) = fa[i];
        }
        for (std::size_t j = 0; j <= n_; ++j) a(n_, j) = row[j];
        return a;
    }

    /// Unit tangent at y, oriented to have positive weighted product with `reference`.
    Vector tangent(std::span<const double> y, std::span<const double> reference) const
    {
        Vector row(reference.begin(), reference.end());
        for (std::size_t i = 0; i < n_; ++i) row[i] *= weight_;
        Vector rhs(n_ + 1, 0.0);
        rhs[n_] = 1.0;
        Vector t = LU(augmented(y, row), 0.0).solve(rhs);
        const double len = std::sqrt(inner(t, t));
        for (double& v : t) v /= len;
        return t;
    }

    /// Newton on F = 0 plus the hyperplane constraint <t, y - y_pred> = 0.
    /// Returns the iteration count, or nullopt on failure.
    std::optional<int> correct(Vector& y, std::span<const double> t, std::span<const double> y_pred) const
    {
        Vector row(t.begin(), t.end());
        for (std::size_t i = 0; i < n_; ++i) row[i] *= weight_;
        for (int it = 0; it <= opt_.corrector_iterations; ++it) {
            if (!(y[n_] >= 0.0) || !std::isfinite(y[n_])) return std::nullopt;
            const System sys = at(y[n_]);
            const std::span<const double> x(y.data(), n_);
            Vector g(n_ + 1);
            sys.rhs(x, std::span<double>(g.data(), n_));
            double c = 0.0;
            for (std::size_t i = 0; i <= n_; ++i) c += row[i] * (y[i] - y_pred[i]);
            g[n_] = c;
            const double r = norm2(std::span<const double>(g.data(), n_));
            if (!std::isfinite(r)) return std::nullopt;
            if (r <= residual_tolerance(sys, x) && std::abs(c) <= 1e-10) return it;
            if (it == opt_.corrector_iterations) break;
            Vector d;
            try {
                d = LU(augmented(y, row), 0.0).solve(g);
            } catch (const Error&) {
                return std::nullopt;
            }
            for (std::size_t i = 0; i <= n_; ++i) y[i] -= d[i];
        }
        return std::nullopt;
    }

    /// Solves F = 0 subject to <phi, x> = value, starting from (x0, alpha0).
    std::optional<Vector> solve_constrained(Vector y, std::span<const double> phi, double value) const
    {
        Vector row(n_ + 1, 0.0);
        std::copy(phi.begin(), phi.end(), row.begin());
        for (int it = 0; it <= 30; ++it) {
            const System sys = at(y[n_]);
            const std::span<const double> x(y.data(), n_);
            Vector g(n_ + 1);
            sys.rhs(x, std::span<double>(g.data(), n_));
            double c = -value;
            for (std::size_t i = 0; i < n_; ++i) c += phi[i] * y[i];
            g[n_] = c;
            const double r = norm2(std::span<const double>(g.data(), n_));
            if (!std::isfinite(r)) return std::nullopt;
            if (r <= residual_tolerance(sys, x) && std::abs(c) <= 1e-12) return y;
            Vector d;
            try {
                d = LU(augmented(y, row), 0.0).solve(g);
            } catch (const Error&) {
                return std::nullopt;
            }
            for (std::size_t i = 0; i <= n_; ++i) y[i] -= d[i];
        }
        return std::nullopt;
    }

    SteadyState steady_at(std::span<const double> y) const
    {
        const System sys = at(y[n_]);
        SteadyState s;
        s.x.assign(y.begin(), y.begin() + static_cast<long>(n_));
        s.alpha = y[n_];
        s.residual_norm = norm2(sys.rhs(s.x));
        detail::fill_spectrum(sys, s);
        return s;
    }

    static Vector pack(std::span<const double> x, double alpha)
    {
        Vector y(x.begin(), x.end());
        y.push_back(alpha);
        return y;
    }

    /// Traces the branch through `start` in the direction of `direction` until alpha
    /// leaves the range, the branch returns to the trivial state, or max_points.
    std::pair<Branch, std::vector<BifurcationPoint>> trace(const std::string& label, Vector start,
                                                           std::span<const double> direction) const
    {
        Branch branch;
        branch.label = label;
        std::vector<BifurcationPoint> events;

        CurvePoint cur{std::move(start), {}};
        cur.t = tangent(cur.y, direction);
        SteadyState cur_state = steady_at(cur.y);
        push(branch, cur_state);
        double ds = opt_.initial_step;
        double peak_amplitude = rms(cur.y);
        const Vector origin = cur.y;
        double travelled = 0.0;

        for (int k = 1; k < opt_.max_points; ++k) {
            CurvePoint next;
            int iters = 0;
            for (;;) {
                Vector pred(n_ + 1);
                for (std::size_t i = 0; i <= n_; ++i) pred[i] = cur.y[i] + ds * cur.t[i];
                Vector y = pred;
                const auto done = correct(y, cur.t, pred);
                if (done && step_accepted(cur, y, ds)) {
                    next.y = std::move(y);
                    iters = *done;
                    break;
                }
                ds *= 0.5;
                if (ds < opt_.stall_step)
                    fail(ErrorKind::continuation_stall, "continuation of " + label + " stalled near alpha = "
                                                            + std::to_string(cur.y[n_]));
            }
            try {
                next.t = tangent(next.y, cur.t);
            } catch (const Error&) {
                next.t = cur.t; // landed exactly on a singular point
            }
            SteadyState next_state = steady_at(next.y);

            const bool left_range = next.y[n_] < opt_.alpha_min || next.y[n_] > opt_.alpha_max;
            bool crossed_trivial = false;
            if (signature(cur_state) != signature(next_state)) {
                auto ev = locate(label, cur, cur_state, next, next_state);
                crossed_trivial = ev && peak_amplitude > 0.1 && travelled > 1.0 && rms(ev->x) < 1e-2;
                if (ev && !crossed_trivial && ev->alpha >= opt_.alpha_min && ev->alpha <= opt_.alpha_max)
                    events.push_back(std::move(*ev));
            }
            if (left_range) break;
            push(branch, next_state);
            if (crossed_trivial) break;
            travelled += distance(cur.y, next.y);
            if (travelled > 4.0 * opt_.max_step && distance_to_segment(origin, cur.y, next.y) <= 0.25 * ds + 1e-3)
                break; // closed loop

            const double amp = rms(next.y);
            peak_amplitude = std::max(peak_amplitude, amp);
            if (peak_amplitude > 1e-2 && amp < 1e-6) break; // back on the trivial branch

            cur = std::move(next);
            cur_state = std::move(next_state);
            if (iters < 4)
                ds = std::min(2.0 * ds, opt_.max_step);
            else if (iters > 8)
                ds = std::max(0.5 * ds, opt_.min_step);
            ds = std::max(ds, opt_.min_step);
        }
        return {std::move(branch), std::move(events)};
    }

private:
    static std::pair<int, int> signature(const SteadyState& s)
    {
        // unstable count and parity of the real unstable ones (the sign of det J)
        int real = 0;
        for (const auto& l : s.eigenvalues)
            if (l.real() > 0.0 && l.imag() == 0.0) ++real;
        return {s.n_unstable, real % 2};
    }

    /// State size in signed-norm units.
    double rms(std::span<const double> y) const
    {
        return norm2(y.first(n_)) * std::sqrt(weight_);
    }

    double distance(std::span<const double> a, std::span<const double> b) const
    {
        Vector d(n_ + 1);
        for (std::size_t i = 0; i <= n_; ++i) d[i] = b[i] - a[i];
        return std::sqrt(inner(d, d));
    }

    double distance_to_segment(std::span<const double> p, std::span<const double> a, std::span<const double> b) const
    {
        Vector ab(n_ + 1), ap(n_ + 1);
        for (std::size_t i = 0; i <= n_; ++i) {
            ab[i] = b[i] - a[i];
            ap[i] = p[i] - a[i];
        }
        const double len2 = inner(ab, ab);
        const double f = len2 > 0.0 ? std::clamp(inner(ap, ab) / len2, 0.0, 1.0) : 0.0;
        for (std::size_t i = 0; i <= n_; ++i) ap[i] -= f * ab[i];
        return std::sqrt(inner(ap, ap));
    }

    bool step_accepted(const CurvePoint& cur, std::span<const double> y, double ds) const
    {
        Vector d(n_ + 1);
        for (std::size_t i = 0; i <= n_; ++i) d[i] = y[i] - cur.y[i];
        const double dist = std::sqrt(inner(d, d));
        // reject branch jumps: the corrected point must stay near the intended
        // distance and roughly along the tangent
        return dist <= 1.5 * ds + 1e-12 && inner(d, cur.t) >= 0.7 * dist;
    }

    void push(Branch& b, const SteadyState& s) const
    {
        b.signed_norms.push_back(signed_norm(base_, s.x));
        b.points.push_back(s);
    }

    /// The eigenvalue nearest the imaginary axis among real (or complex) ones.
    static std::optional<Complex> critical(const SteadyState& s, bool complex_pair)
    {
        std::optional<Complex> best;
        for (const auto& l : s.eigenvalues) {
            const bool is_complex = std::abs(l.imag()) > 1e-9 * std::max(1.0, std::abs(l));
            if (is_complex != complex_pair) continue;
            if (complex_pair && l.imag() < 0.0) continue;
            if (!best || std::abs(l.real()) < std::abs(best->real())) best = l;
        }
        return best;
    }

    std::optional<BifurcationPoint> locate(const std::string& label, const CurvePoint& a, const SteadyState& sa,
                                           const CurvePoint& b, const SteadyState& sb) const
    {
        CurvePoint lo = a, hi = b;
        SteadyState slo = sa, shi = sb;
        const auto sig_lo = signature(sa);
        double s_lo = 0.0, s_hi = 0.0;
        {
            Vector d(n_ + 1);
            for (std::size_t i = 0; i <= n_; ++i) d[i] = b.y[i] - a.y[i];
            s_hi = inner(d, a.t);
        }
        for (int it = 0; it < 60; ++it) {
            if (std::abs(hi.y[n_] - lo.y[n_]) <= opt_.locate_alpha && s_hi - s_lo <= 1e-3) break;
            const double s = 0.5 * (s_lo + s_hi);
            Vector pred(n_ + 1);
            for (std::size_t i = 0; i <= n_; ++i) pred[i] = a.y[i] + s * a.t[i];
            Vector y = pred;
            if (!correct(y, a.t, pred)) break;
            CurvePoint mid{std::move(y), a.t}; // bisection only needs the state
            SteadyState sm = steady_at(mid.y);
            if (signature(sm) == sig_lo) {
                lo = std::move(mid);
                slo = std::move(sm);
                s_lo = s;
            } else {
                hi = std::move(mid);
                shi = std::move(sm);
                s_hi = s;
            }
        }

        const bool hopf = (slo.n_unstable - shi.n_unstable) % 2 == 0 && signature(slo).second == signature(shi).second;
        const auto ca = critical(slo, hopf);
        const auto cb = critical(shi, hopf);
        BifurcationPoint ev;
        ev.branch_label = label;
        double f = 0.5;
        if (ca && cb && ca->real() != cb->real()) f = std::clamp(ca->real() / (ca->real() - cb->real()), 0.0, 1.0);
        ev.alpha = lo.y[n_] + f * (hi.y[n_] - lo.y[n_]);
        ev.x.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) ev.x[i] = lo.y[i] + f * (hi.y[i] - lo.y[i]);
        if (ca && cb) ev.eigenvalue = *ca + f * (*cb - *ca);
        if (hopf)
            ev.kind = BifurcationKind::hopf;
        else
            ev.kind = lo.t[n_] * hi.t[n_] < 0.0 ? BifurcationKind::fold : BifurcationKind::pitchfork;
        return ev;
    }

    System base_;
    ContinuationOptions opt_;
    std::size_t n_;
    double weight_;
};

/// Continues the branch through the converged `seed` in the direction of increasing alpha
/// (or decreasing, if `increasing` is false).
inline std::pair<Branch, std::vector<BifurcationPoint>> continue_branch(const System& sys, const SteadyState& seed,
                                                                        const std::string& label,
                                                                        const ContinuationOptions& opt = {},
                                                                        bool increasing = true)
{
    Continuation c(sys, opt);
    Vector dir(sys.dim() + 1, 0.0);
    dir.back() = increasing ? 1.0 : -1.0;
    return c.trace(label, Continuation::pack(seed.x, seed.alpha), dir);
}

inline const char* mode_family_name(int k)
{
    switch (k) {
    case 1: return "unimodal";
    case 2: return "bimodal";
    case 3: return "trimodal";
    case 4: return "quadrimodal";
    default: return nullptr;
    }
}

/// The full picture used by the bifurcation tables: the trivial branch, and
/// the +/- primary branches leaving each of its pitchforks.
struct Survey {
    std::vector<Branch> branches;
    std::vector<BifurcationPoint> events;

    const Branch* find(const std::string& label) const
    {
        for (const auto& b : branches)
            if (b.label == label) return &b;
        return nullptr;
    }

    std::vector<BifurcationPoint> events_on(const std::string& label) const
    {
        std::vector<BifurcationPoint> out;
        for (const auto& e : events)
            if (e.branch_label == label) out.push_back(e);
        return out;
    }
};

/// Dominant modal wavenumber of a vector.
inline int dominant_wavenumber(const System& sys, std::span<const double> v)
{
    Vector c(v.size());
    sys.to_modal(v, c);
    const auto ks = sys.modal_wavenumbers();
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (std::abs(c[i]) > std::abs(c[best])) best = i;
    return ks[best];
}

/// Real unit eigenvector of the Jacobian for a (near-)zero real eigenvalue.
inline Vector critical_direction(const Matrix& j, double lambda)
{
    const auto v = eigenvector(j, Complex(lambda, 0.0));
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
    const double nv = norm2(out);
    for (double& e : out) e /= nv;
    return out;
}

/// Starts a branch off a pitchfork of the trivial state: F = 0 with <phi, x> = sign * amplitude.
inline std::pair<Branch, std::vector<BifurcationPoint>> switch_branch(const System& sys, const BifurcationPoint& bp,
                                                                      double sign, const std::string& label,
                                                                      const ContinuationOptions& opt = {})
{
    const System at = sys.at_alpha(bp.alpha);
    const Vector phi = critical_direction(at.jacobian(bp.x), bp.eigenvalue.real());
    Continuation c(sys, opt);
    const double amp = opt.seed_amplitude * std::sqrt(static_cast<double>(sys.dim()));
    Vector y = Continuation::pack(bp.x, bp.alpha);
    for (std::size_t i = 0; i < phi.size(); ++i) y[i] += sign * amp * phi[i];
    double base = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) base += phi[i] * bp.x[i];
    const auto solved = c.solve_constrained(y, phi, base + sign * amp);
    if (!solved) fail(ErrorKind::divergence, "could not start branch " + label + " near alpha = " + std::to_string(bp.alpha));
    Vector dir(sys.dim() + 1, 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) dir[i] = sign * phi[i];
    return c.trace(label, *solved, dir);
}

/// Trivial branch over the alpha range, then both signs of every primary branch.
inline Survey survey(const System& sys, const ContinuationOptions& opt = {})
{
    Survey out;
    const Vector zero(sys.dim(), 0.0);
    const SteadyState seed = newton_solve(sys, opt.alpha_min, zero);
    auto [trivial, events] = continue_branch(sys, seed, "trivial", opt);
    out.branches.push_back(std::move(trivial));
    out.events = events;
    for (const auto& ev : events) {
        if (ev.kind == BifurcationKind::hopf) continue;
        const System at = sys.at_alpha(ev.alpha);
        const Vector phi = critical_direction(at.jacobian(ev.x), ev.eigenvalue.real());
        const int k = dominant_wavenumber(sys, phi);
        const char* family = mode_family_name(k);
        const std::string base = family ? family : "mode" + std::to_string(k);
        for (double sign : {1.0, -1.0}) {
            // label by the sign of u_1 on the new branch
            const double s1 = signed_sign(phi) * sign;
            const std::string label = base + (s1 > 0 ? "+" : "-");
            auto [branch, evs] = switch_branch(sys, ev, sign, label, opt);
            out.branches.push_back(std::move(branch));
            for (auto& e : evs) {
                // the sign of u_1 at the event names the half of the branch it sits on
                e.branch_label = base + (signed_sign(e.x) < 0 ? "-" : "+");
                const bool seen = std::any_of(out.events.begin(), out.events.end(), [&](const BifurcationPoint& o) {
                    return o.kind == e.kind && o.branch_label == e.branch_label
                           && std::abs(o.alpha - e.alpha) <= 1e-3 * std::max(1.0, std::abs(e.alpha));
                });
                if (!seen) out.events.push_back(std::move(e));
            }
        }
    }
    return out;
}

} // namespace ks
