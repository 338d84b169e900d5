#pragma once

// Centered difference and mean operators on periodic grids.
//
//   delta u_j = u_{j+1/2} - u_{j-1/2},   mu u_j = (u_{j+1/2} + u_{j-1/2}) / 2
//
// Even powers delta^a land on integer offsets. Odd powers are only used in the
// combination delta^a mu, which also lands on integer offsets. Both are held
// as explicit weight tables built once from binomial recurrences.

#include "ks/errors.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ks {

/// Grid values with cyclic indexing. Length is fixed during any operator
/// application and the output always has the input's length.
using PeriodicSequence = std::vector<double>;

/// Euclidean modulo; negative offsets wrap to the end of the sequence.
inline std::size_t wrap_index(long j, std::size_t n) noexcept
{
    const long nn = static_cast<long>(n);
    long r = j % nn;
    if (r < 0) r += nn;
    return static_cast<std::size_t>(r);
}

/// Weights over offsets -half_width..half_width.
struct Stencil {
    int half_width = 0;
    std::vector<double> weights;

    double weight(int offset) const { return weights[static_cast<std::size_t>(offset + half_width)]; }

    int width() const noexcept { return 2 * half_width + 1; }

    /// sum_k w_k u_{j+k}
    double apply_at(std::span<const double> u, std::size_t j) const noexcept
    {
        const std::size_t n = u.size();
        double acc = 0.0;
        for (int k = -half_width; k <= half_width; ++k) {
            const double w = weights[static_cast<std::size_t>(k + half_width)];
            if (w != 0.0) acc += w * u[wrap_index(static_cast<long>(j) + k, n)];
        }
        return acc;
    }
};

namespace detail {

inline Stencil convolve(const Stencil& a, const Stencil& b)
{
    Stencil out;
    out.half_width = a.half_width + b.half_width;
    out.weights.assign(static_cast<std::size_t>(out.width()), 0.0);
    for (int i = -a.half_width; i <= a.half_width; ++i)
        for (int k = -b.half_width; k <= b.half_width; ++k)
            out.weights[static_cast<std::size_t>(i + k + out.half_width)] += a.weight(i) * b.weight(k);
    return out;
}

// delta^a for even a: sum_i (-1)^i C(a,i) at offset a/2 - i.
inline Stencil make_even_difference(int a)
{
    Stencil s;
    s.half_width = a / 2;
    s.weights.assign(static_cast<std::size_t>(a + 1), 0.0);
    double binom = 1.0;
    for (int i = 0; i <= a; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        s.weights[static_cast<std::size_t>(a - i)] = sign * binom; // offset a/2 - i
        binom = binom * (a - i) / (i + 1);
    }
    return s;
}

inline Stencil make_odd_difference_mean(int a)
{
    Stencil dmu;
    dmu.half_width = 1;
    dmu.weights = {-0.5, 0.0, 0.5};
    if (a == 1) return dmu;
    return convolve(make_even_difference(a - 1), dmu);
}

} // namespace detail

/// delta^a, a in {0,2,4,6,8}. a = 0 is the identity and is accepted for
/// internal table use; the public operator below rejects it.
inline const Stencil& even_difference_stencil(int a)
{
    static const std::array<Stencil, 5> table = {
        detail::make_even_difference(0), detail::make_even_difference(2), detail::make_even_difference(4),
        detail::make_even_difference(6), detail::make_even_difference(8)};
    if (a < 0 || a > 8 || a % 2 != 0)
        fail(ErrorKind::invalid_operator, "delta^a requires even a in {2,4,6,8}, got " + std::to_string(a));
    return table[static_cast<std::size_t>(a / 2)];
}

/// delta^a mu, a in {1,3,5,7}.
inline const Stencil& odd_difference_mean_stencil(int a)
{
    static const std::array<Stencil, 4> table = {
        detail::make_odd_difference_mean(1), detail::make_odd_difference_mean(3),
        detail::make_odd_difference_mean(5), detail::make_odd_difference_mean(7)};
    if (a < 1 || a > 7 || a % 2 != 1)
        fail(ErrorKind::invalid_operator, "delta^a mu requires odd a in {1,3,5,7}, got " + std::to_string(a));
    return table[static_cast<std::size_t>(a / 2)];
}

inline PeriodicSequence apply_stencil(std::span<const double> u, const Stencil& s)
{
    if (u.size() < static_cast<std::size_t>(s.width()) + 1)
        fail(ErrorKind::grid_too_coarse, "grid of " + std::to_string(u.size()) + " points is too coarse for a "
                                             + std::to_string(s.width()) + "-point stencil");
    PeriodicSequence out(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = s.apply_at(u, j);
    return out;
}

inline PeriodicSequence central_diff_even(std::span<const double> u, int a)
{
    if (a == 0) fail(ErrorKind::invalid_operator, "delta^0 is not a difference operator");
    return apply_stencil(u, even_difference_stencil(a));
}

inline PeriodicSequence central_diff_odd_mu(std::span<const double> u, int a)
{
    return apply_stencil(u, odd_difference_mean_stencil(a));
}

} // namespace ks
