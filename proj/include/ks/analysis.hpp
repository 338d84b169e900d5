#pragma once

// Power spectra, consistency orders, and profile comparisons.

#include "ks/errors.hpp"
#include "ks/fft.hpp"
#include "ks/integrate.hpp"
#include "ks/model.hpp"
#include "ks/odd.hpp"
#include "ks/system.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace ks {

struct SpectrumResult {
    std::vector<int> wavenumbers; ///< 1..N/2-1
    Vector power;
    int samples_used = 0;
    double transient_skipped = 0.0;
};

/// |u_hat_k|^2 with u_hat_k = (1/N) sum_j u_j exp(-i k x_j), k = 1..N/2-1.
inline SpectrumResult dft_power(std::span<const double> u)
{
    const std::size_t n = u.size();
    if (n < 4) fail(ErrorKind::insufficient_data, "dft_power needs at least 4 points");
    const auto spec = dft(u);
    SpectrumResult r;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 1; k < n / 2; ++k) {
        r.wavenumbers.push_back(static_cast<int>(k));
        r.power.push_back(std::norm(spec[k] * inv));
    }
    r.samples_used = 1;
    return r;
}

/// Field on the full periodic domain for a state of `sys`.
inline GridField full_field(const System& sys, std::span<const double> x)
{
    if (!sys.spec().grid_based()) fail(ErrorKind::incompatible_domain, "Galerkin amplitudes are not grid values");
    GridField f = GridField::on_period(sys.full_grid(x));
    f.offset = sys.node_offset();
    return f;
}

/// Grid values on the full periodic domain for a trajectory snapshot.
inline Vector full_grid_values(const Geometry& geo, std::span<const double> x)
{
    switch (geo.kind) {
    case Geometry::Kind::full: return Vector(x.begin(), x.end());
    case Geometry::Kind::nodal: return embed(OddState{Vector(x.begin(), x.end()), geo.n}).u;
    case Geometry::Kind::odd: return embed_cell_centred(x);
    case Geometry::Kind::modal: break;
    }
    fail(ErrorKind::incompatible_domain, "spectra need grid states, not Galerkin amplitudes");
}

/// Mean of dft_power over the snapshots with t > skip.
inline SpectrumResult time_averaged_spectrum(const Trajectory& traj, double skip)
{
    SpectrumResult acc;
    acc.transient_skipped = skip;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (!(traj.times[i] > skip)) continue;
        const auto p = dft_power(full_grid_values(traj.geometry, traj.states[i]));
        if (acc.samples_used == 0) {
            acc.wavenumbers = p.wavenumbers;
            acc.power.assign(p.power.size(), 0.0);
        }
        for (std::size_t k = 0; k < p.power.size(); ++k) acc.power[k] += p.power[k];
        ++acc.samples_used;
    }
    if (acc.samples_used == 0)
        fail(ErrorKind::insufficient_data, "no snapshots after t = " + std::to_string(skip));
    for (double& v : acc.power) v /= acc.samples_used;
    return acc;
}

/// A smooth 2 pi periodic function with the derivatives the KS operator needs.
struct TestProfile {
    std::string name;
    std::function<long double(long double)> u, ux, uxx, uxxxx;

    /// sin x + 0.3 cos 2x: both k = 1 and k = 2 content so the nonlinear
    /// error terms are exercised.
    static TestProfile standard()
    {
        return {"sin+0.3cos2",
                [](long double x) { return std::sin(x) + 0.3L * std::cos(2 * x); },
                [](long double x) { return std::cos(x) - 0.6L * std::sin(2 * x); },
                [](long double x) { return -std::sin(x) - 1.2L * std::cos(2 * x); },
                [](long double x) { return std::sin(x) + 4.8L * std::cos(2 * x); }};
    }

    static TestProfile by_name(const std::string& name)
    {
        if (name.empty() || name == "standard" || name == "sin+0.3cos2") return standard();
        fail(ErrorKind::usage, "unknown test profile '" + name + "'");
    }
};

struct ConsistencyReport {
    ModelSpec model;
    std::vector<int> grid_sizes;
    Vector h;
    Vector max_errors;
    double fitted_order = 0.0;
    bool monotone = true; ///< errors decrease under refinement
};

/// Least-squares slope of log(error) against log(h).
inline double fit_order(std::span<const double> h, std::span<const double> err)
{
    const std::size_t n = h.size();
    if (n < 2) fail(ErrorKind::insufficient_data, "order fit needs at least two grids");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(h[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

/// Max-norm error of the model RHS (gamma = 1) against the exact
/// -4 u'''' - alpha (u'' + u u') on each grid, and the fitted order.
/// Evaluated in extended precision so fine grids are not rounding-limited.
inline ConsistencyReport consistency_order(ModelSpec spec, std::vector<int> grids,
                                           const TestProfile& profile = TestProfile::standard())
{
    if (!spec.grid_based()) fail(ErrorKind::unsupported, "consistency orders apply to grid models");
    if (grids.size() < 2) fail(ErrorKind::usage, "need at least two grids");
    for (std::size_t i = 0; i < grids.size(); ++i) {
        if (grids[i] < spec.stencil_width() + 1)
            fail(ErrorKind::grid_too_coarse, "grid of " + std::to_string(grids[i]) + " points is too coarse for "
                                                 + spec.selector());
        if (i > 0 && grids[i] <= grids[i - 1]) fail(ErrorKind::usage, "grids must be ascending");
    }
    spec.gamma = 1.0;
    ConsistencyReport rep;
    rep.model = spec;
    rep.grid_sizes = grids;
    const long double alpha = spec.alpha;
    const long double two_pi = 2 * std::numbers::pi_v<long double>;
    for (int n : grids) {
        const long double h = two_pi / n;
        std::vector<long double> u(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] = profile.u(j * h);
        const auto g = grid_rhs_generic<long double>(spec, u, h);
        long double worst = 0;
        for (int j = 0; j < n; ++j) {
            const long double x = j * h;
            const long double exact = -4 * profile.uxxxx(x) - alpha * (profile.uxx(x) + profile.u(x) * profile.ux(x));
            worst = std::max(worst, std::abs(g[static_cast<std::size_t>(j)] - exact));
        }
        rep.h.push_back(static_cast<double>(h));
        rep.max_errors.push_back(static_cast<double>(worst));
    }
    for (std::size_t i = 1; i < rep.max_errors.size(); ++i)
        if (!(rep.max_errors[i] < rep.max_errors[i - 1])) rep.monotone = false;
    rep.fitted_order = fit_order(rep.h, rep.max_errors);
    return rep;
}

/// Trigonometric interpolant of periodic samples, evaluated at x.
inline double trig_interpolate(std::span<const Complex> u_hat, double length, double x)
{
    const std::size_t n = u_hat.size();
    const double w = 2.0 * std::numbers::pi / length;
    double v = u_hat[0].real();
    for (std::size_t k = 1; 2 * k < n; ++k) {
        const double th = w * static_cast<double>(k) * x;
        v += 2.0 * (u_hat[k].real() * std::cos(th) - u_hat[k].imag() * std::sin(th));
    }
    if (n % 2 == 0) v += u_hat[n / 2].real() * std::cos(w * static_cast<double>(n / 2) * x);
    return v / static_cast<double>(n);
}

/// max_j |a_j - b(x_j)| / max_j |b(x_j)|, with b interpolated trigonometrically
/// onto a's nodes. b must be at equal or finer resolution on the same domain.
inline double profile_compare(const GridField& a, const GridField& b)
{
    if (std::abs(a.domain_length - b.domain_length) > 1e-12 * std::max(1.0, b.domain_length))
        fail(ErrorKind::incompatible_domain, "fields live on different domains");
    if (b.size() < a.size()) fail(ErrorKind::incompatible_domain, "reference field is coarser than the compared field");
    const bool same_nodes = a.size() == b.size() && a.offset == b.offset;
    const auto b_hat = same_nodes ? std::vector<Complex>{} : dft(b.u);
    double diff = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double x = (static_cast<double>(j) + a.offset) * a.h - b.offset * b.h;
        const double bv = same_nodes ? b.u[j] : trig_interpolate(b_hat, b.domain_length, x);
        diff = std::max(diff, std::abs(a.u[j] - bv));
        scale = std::max(scale, std::abs(bv));
    }
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace ks
