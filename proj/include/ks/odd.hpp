#pragma once

// Odd, 2*pi periodic solutions: u(x) = u(x + 2 pi) = -u(2 pi - x).
// m elements on [0, pi] are realised as a 2m-point periodic grid with
// u_0 = u_m = 0 and u_{2m-j} = -u_j, leaving m-1 free values u_1..u_{m-1}.
//
// The cell-centred variant puts the m grid points at x_j = (j - 1/2) h,
// j = 1..m, so nothing is pinned and all m values are free.

#include "ks/errors.hpp"
#include "ks/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ks {

struct OddState {
    Vector w; ///< u_1..u_{m-1}
    int m = 0;

    static OddState zeros(int m) { return {Vector(static_cast<std::size_t>(m - 1), 0.0), m}; }

    double h() const noexcept { return std::numbers::pi / m; }
};

inline GridField embed(const OddState& s)
{
    if (s.m < 3) fail(ErrorKind::grid_too_coarse, "odd reduction needs m >= 3 elements");
    if (static_cast<int>(s.w.size()) != s.m - 1) fail(ErrorKind::incompatible_domain, "odd state must hold m-1 values");
    const std::size_t n = static_cast<std::size_t>(2 * s.m);
    PeriodicSequence u(n, 0.0);
    for (int j = 1; j < s.m; ++j) {
        u[static_cast<std::size_t>(j)] = s.w[static_cast<std::size_t>(j - 1)];
        u[n - static_cast<std::size_t>(j)] = -s.w[static_cast<std::size_t>(j - 1)];
    }
    return GridField::on_period(std::move(u));
}

/// Largest |u_j + u_{N-j}| over j, including u_0 and u_{N/2}.
inline double odd_asymmetry(std::span<const double> u)
{
    const std::size_t n = u.size();
    double worst = std::max(std::abs(u[0]), std::abs(u[n / 2]));
    for (std::size_t j = 1; j < n; ++j) worst = std::max(worst, std::abs(u[j] + u[n - j]));
    return worst;
}

inline OddState restrict_odd(const GridField& field, double tolerance = 1e-8)
{
    const std::size_t n = field.size();
    if (n % 2 != 0 || n < 6) fail(ErrorKind::incompatible_domain, "odd restriction needs an even grid of at least 6 points");
    const double asym = odd_asymmetry(field.u);
    if (asym > tolerance)
        fail(ErrorKind::symmetry_violation, "field is not odd: max asymmetry " + std::to_string(asym));
    OddState s;
    s.m = static_cast<int>(n / 2);
    s.w.assign(field.u.begin() + 1, field.u.begin() + static_cast<long>(n / 2));
    return s;
}

inline Vector rhs_odd(const OddState& s, const ModelSpec& spec)
{
    const GridField full = embed(s);
    const PeriodicSequence g = rhs_grid(full, spec);
    return restrict_odd(GridField{g, full.h, full.domain_length}, 1e-8 * std::max(1.0, norm_inf(g))).w;
}

/// w'_j = -w_{m-j}: the half-period shift x -> x + pi composed with oddness.
inline OddState half_period_shift(const OddState& s)
{
    OddState out = s;
    const std::size_t k = s.w.size();
    for (std::size_t j = 0; j < k; ++j) out.w[j] = -s.w[k - 1 - j];
    return out;
}

/// Full 2m-point grid (points at (i + 1/2) h) from the m cell-centred values.
inline PeriodicSequence embed_cell_centred(std::span<const double> w)
{
    const std::size_t m = w.size();
    if (m < 3) fail(ErrorKind::grid_too_coarse, "cell-centred odd reduction needs m >= 3 elements");
    PeriodicSequence u(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        u[i] = w[i];
        u[2 * m - 1 - i] = -w[i];
    }
    return u;
}

/// Inverse of embed_cell_centred; rejects fields with u_i + u_{2m-1-i} != 0.
inline Vector restrict_cell_centred(std::span<const double> u, double tolerance = 1e-8)
{
    const std::size_t n = u.size();
    if (n % 2 != 0 || n < 6) fail(ErrorKind::incompatible_domain, "odd restriction needs an even grid of at least 6 points");
    double asym = 0.0;
    for (std::size_t i = 0; i < n / 2; ++i) asym = std::max(asym, std::abs(u[i] + u[n - 1 - i]));
    if (asym > tolerance) fail(ErrorKind::symmetry_violation, "field is not odd: max asymmetry " + std::to_string(asym));
    return Vector(u.begin(), u.begin() + static_cast<long>(n / 2));
}

/// Half-period shift on cell-centred values: w'_i = -w_{m-1-i}.
inline Vector half_period_shift_cell_centred(std::span<const double> w)
{
    const std::size_t m = w.size();
    Vector out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = -w[m - 1 - i];
    return out;
}

} // namespace ks
