#pragma once

// Discrete Fourier transforms of real periodic data.
//
//   U_k = sum_j u_j exp(-2 pi i j k / N)
//
// Power-of-two lengths use an iterative radix-2 FFT; other lengths fall back
// to the direct O(N^2) sum, which is fine for the grid sizes used here.

#include "ks/linalg.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace ks {

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

inline const std::vector<Complex>& twiddles(std::size_t n)
{
    thread_local std::size_t cached_n = 0;
    thread_local std::vector<Complex> table;
    if (cached_n != n) {
        table.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            table[k] = Complex(std::cos(ang), std::sin(ang));
        }
        cached_n = n;
    }
    return table;
}

inline void fft_inplace(std::vector<Complex>& a, bool inverse)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& tw = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len)
            for (std::size_t k = 0; k < half; ++k) {
                const Complex w = inverse ? std::conj(tw[k * stride]) : tw[k * stride];
                const Complex u = a[i + k];
                const Complex v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
    }
}

} // namespace detail

/// Forward transform of real data: returns U_0..U_{N-1}.
inline std::vector<Complex> dft(std::span<const double> u)
{
    const std::size_t n = u.size();
    std::vector<Complex> out(n);
    if (is_power_of_two(n)) {
        for (std::size_t j = 0; j < n; ++j) out[j] = u[j];
        detail::fft_inplace(out, false);
        return out;
    }
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{};
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            acc += u[j] * Complex(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

/// Inverse of dft() for Hermitian input; returns the real part scaled by 1/N.
inline Vector inverse_dft_real(std::vector<Complex> spectrum)
{
    const std::size_t n = spectrum.size();
    Vector out(n);
    if (is_power_of_two(n)) {
        detail::fft_inplace(spectrum, true);
        for (std::size_t j = 0; j < n; ++j) out[j] = spectrum[j].real() / static_cast<double>(n);
        return out;
    }
    for (std::size_t j = 0; j < n; ++j) {
        Complex acc{};
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            acc += spectrum[k] * Complex(std::cos(ang), std::sin(ang));
        }
        out[j] = acc.real() / static_cast<double>(n);
    }
    return out;
}

} // namespace ks
