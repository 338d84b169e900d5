#pragma once

// Right-hand sides du/dt = g(u; alpha, gamma) for the Kuramoto-Sivashinsky
// equation u_t + 4 u_xxxx + alpha (u u_x + u_xx) = 0 under every
// discretisation in the catalogue:
//
//   holistic p = 3, 4, 5   5/7/9 point stencils, each term weighted by its
//                          power of the coupling parameter gamma
//   centered 2, 4, 6       conventional centered differences
//   galerkin / nlgalerkin  m sine modes, traditional and first-iterate
//                          nonlinear Galerkin
//
// Grid models are written as linear combinations of delta^a u_j (a even) and
// products L_j * delta^b mu u_j (L either u_j or an even difference, b odd).

#include "ks/errors.hpp"
#include "ks/linalg.hpp"
#include "ks/stencil.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <type_traits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ks {

enum class Family { holistic, centered, galerkin_traditional, galerkin_nl1 };

/// Which discretisation plus its parameters. Exactly one of gamma_order,
/// centered_order, modes is non-zero, matching the family.
struct ModelSpec {
    Family family = Family::holistic;
    int gamma_order = 0;    ///< holistic p in {3,4,5}
    int centered_order = 0; ///< centered order in {2,4,6}
    int modes = 0;          ///< Galerkin mode count m >= 1
    double alpha = 0.0;
    double gamma = 1.0;

    static ModelSpec holistic(int p, double alpha, double gamma = 1.0)
    {
        ModelSpec s;
        s.family = Family::holistic;
        s.gamma_order = p;
        s.alpha = alpha;
        s.gamma = gamma;
        s.validate();
        return s;
    }

    static ModelSpec centered(int order, double alpha)
    {
        ModelSpec s;
        s.family = Family::centered;
        s.centered_order = order;
        s.alpha = alpha;
        s.validate();
        return s;
    }

    static ModelSpec galerkin(int m, double alpha)
    {
        ModelSpec s;
        s.family = Family::galerkin_traditional;
        s.modes = m;
        s.alpha = alpha;
        s.validate();
        return s;
    }

    static ModelSpec nonlinear_galerkin(int m, double alpha)
    {
        ModelSpec s;
        s.family = Family::galerkin_nl1;
        s.modes = m;
        s.alpha = alpha;
        s.validate();
        return s;
    }

    /// Parses the CLI selector: hol:3|hol:4|hol:5|cd:2|cd:4|cd:6|gal:m|nlgal:m.
    static ModelSpec parse(std::string_view text, double alpha = 0.0)
    {
        const auto colon = text.find(':');
        if (colon == std::string_view::npos) fail(ErrorKind::usage, "model selector '" + std::string(text) + "' lacks ':'");
        const std::string kind(text.substr(0, colon));
        const std::string arg(text.substr(colon + 1));
        int value = 0;
        try {
            std::size_t used = 0;
            value = std::stoi(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
        } catch (const std::exception&) {
            fail(ErrorKind::usage, "model selector '" + std::string(text) + "' has a non-integer order");
        }
        try {
            if (kind == "hol") return holistic(value, alpha);
            if (kind == "cd") return centered(value, alpha);
            if (kind == "gal") return galerkin(value, alpha);
            if (kind == "nlgal") return nonlinear_galerkin(value, alpha);
        } catch (const Error& e) {
            fail(ErrorKind::usage, e.what());
        }
        fail(ErrorKind::usage, "unknown model family '" + kind + "'");
    }

    std::string selector() const
    {
        switch (family) {
        case Family::holistic: return "hol:" + std::to_string(gamma_order);
        case Family::centered: return "cd:" + std::to_string(centered_order);
        case Family::galerkin_traditional: return "gal:" + std::to_string(modes);
        case Family::galerkin_nl1: return "nlgal:" + std::to_string(modes);
        }
        return "?";
    }

    bool grid_based() const noexcept { return family == Family::holistic || family == Family::centered; }

    /// Points either side of j touched by the stencil.
    int half_width() const noexcept
    {
        if (family == Family::holistic) return gamma_order - 1;
        if (family == Family::centered) return centered_order / 2 + 1;
        return 0;
    }

    int stencil_width() const noexcept { return 2 * half_width() + 1; }

    ModelSpec with_alpha(double a) const
    {
        ModelSpec s = *this;
        s.alpha = a;
        return s;
    }

    void validate() const
    {
        const bool hol = family == Family::holistic;
        const bool cd = family == Family::centered;
        const bool gal = family == Family::galerkin_traditional || family == Family::galerkin_nl1;
        if (hol && (gamma_order < 3 || gamma_order > 5))
            fail(ErrorKind::invalid_operator, "holistic models exist for p in {3,4,5}, got " + std::to_string(gamma_order));
        if (cd && centered_order != 2 && centered_order != 4 && centered_order != 6)
            fail(ErrorKind::invalid_operator, "centered schemes exist for orders 2, 4, 6, got " + std::to_string(centered_order));
        if (gal && modes < 1) fail(ErrorKind::invalid_operator, "Galerkin models need at least one mode");
        if ((hol && (centered_order != 0 || modes != 0)) || (cd && (gamma_order != 0 || modes != 0))
            || (gal && (gamma_order != 0 || centered_order != 0)))
            fail(ErrorKind::invalid_operator, "model spec sets fields of more than one family");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::invalid_operator, "alpha must be finite and >= 0");
        if (!std::isfinite(gamma)) fail(ErrorKind::invalid_operator, "gamma must be finite");
    }
};

/// Grid values u_j at x_j = (j + offset) h on a periodic domain.
struct GridField {
    PeriodicSequence u;
    double h = 0.0;
    double domain_length = 0.0;
    double offset = 0.0; ///< 0 for nodal grids, 1/2 for cell-centred ones

    static GridField on_period(PeriodicSequence values, double length = 2.0 * std::numbers::pi)
    {
        GridField f;
        f.h = length / static_cast<double>(values.size());
        f.domain_length = length;
        f.u = std::move(values);
        return f;
    }

    std::size_t size() const noexcept { return u.size(); }

    void check() const
    {
        if (!(h > 0.0)) fail(ErrorKind::incompatible_domain, "grid spacing must be positive");
        const double nh = h * static_cast<double>(u.size());
        if (std::abs(nh - domain_length) > 1e-12 * std::abs(domain_length))
            fail(ErrorKind::incompatible_domain, "N*h does not match the domain length");
    }
};

/// Sine-mode amplitudes b_1..b_m of u = sum_k b_k sin(kx).
struct GalerkinState {
    Vector b;
};

// ---------------------------------------------------------------------------
// Term tables
// ---------------------------------------------------------------------------

/// coeff * gamma^gamma_power * (alpha if with_alpha) * delta^diff u / h^h_power
struct LinearTerm {
    int diff;
    std::int64_t num;
    std::int64_t den;
    int gamma_power;
    bool with_alpha;
    int h_power;
};

/// coeff * gamma^gamma_power * alpha * (left) * delta^right mu u / h,
/// where left = u itself when left_diff == 0, else delta^left_diff u.
struct BilinearTerm {
    int left_diff;
    int right_diff;
    std::int64_t num;
    std::int64_t den;
    int gamma_power;
};

struct TermTable {
    std::vector<LinearTerm> linear;
    std::vector<BilinearTerm> bilinear;
};

namespace detail {

inline TermTable holistic_terms(int p)
{
    TermTable t;
    // gamma^1
    t.linear.push_back({2, -1, 1, 1, true, 2});
    t.bilinear.push_back({0, 1, -1, 1, 1});
    // gamma^2
    t.linear.push_back({4, -4, 1, 2, false, 4});
    t.linear.push_back({4, 1, 12, 2, true, 2});
    t.bilinear.push_back({0, 3, 2, 12, 2});
    t.bilinear.push_back({2, 3, 1, 12, 2});
    t.bilinear.push_back({4, 1, 1, 12, 2});
    if (p >= 4) {
        t.linear.push_back({6, 2, 3, 3, false, 4});
        t.linear.push_back({6, -1, 90, 3, true, 2});
        constexpr std::int64_t d = 480;
        t.bilinear.push_back({0, 5, -16, d, 3});
        t.bilinear.push_back({4, 3, -30, d, 3});
        t.bilinear.push_back({2, 3, -40, d, 3});
        t.bilinear.push_back({4, 1, -40, d, 3});
        t.bilinear.push_back({2, 5, -28, d, 3});
        t.bilinear.push_back({6, 1, -14, d, 3});
        t.bilinear.push_back({4, 5, -7, d, 3});
        t.bilinear.push_back({6, 3, -7, d, 3});
    }
    if (p >= 5) {
        t.linear.push_back({8, -7, 60, 4, false, 4});
        t.linear.push_back({8, 1, 560, 4, true, 2});
        constexpr std::int64_t d = 60480;
        t.bilinear.push_back({0, 7, 432, d, 4});
        t.bilinear.push_back({2, 5, 3528, d, 4});
        t.bilinear.push_back({2, 7, 1507, d, 4});
        t.bilinear.push_back({4, 3, 3780, d, 4});
        t.bilinear.push_back({4, 5, 3951, d, 4});
        t.bilinear.push_back({4, 7, 984, d, 4});
        t.bilinear.push_back({6, 1, 1764, d, 4});
        t.bilinear.push_back({6, 3, 3419, d, 4});
        t.bilinear.push_back({6, 5, 1414, d, 4});
        t.bilinear.push_back({6, 7, 164, d, 4});
        t.bilinear.push_back({8, 1, 523, d, 4});
        t.bilinear.push_back({8, 3, 656, d, 4});
        t.bilinear.push_back({8, 5, 164, d, 4});
    }
    return t;
}

// The last hyperdiffusion correction of the 6th order scheme is (7/240) delta^8.
inline TermTable centered_terms(int order)
{
    TermTable t;
    t.linear.push_back({2, -1, 1, 0, true, 2});
    t.linear.push_back({4, -4, 1, 0, false, 4});
    t.bilinear.push_back({0, 1, -1, 1, 0});
    if (order >= 4) {
        t.linear.push_back({4, 1, 12, 0, true, 2});
        t.linear.push_back({6, 4, 6, 0, false, 4});
        t.bilinear.push_back({0, 3, 1, 6, 0});
    }
    if (order >= 6) {
        t.linear.push_back({6, -1, 90, 0, true, 2});
        t.linear.push_back({8, -28, 240, 0, false, 4});
        t.bilinear.push_back({0, 5, -1, 30, 0});
    }
    return t;
}

} // namespace detail

inline const TermTable& term_table(const ModelSpec& spec)
{
    static const std::array<TermTable, 3> hol = {detail::holistic_terms(3), detail::holistic_terms(4),
                                                 detail::holistic_terms(5)};
    static const std::array<TermTable, 3> cd = {detail::centered_terms(2), detail::centered_terms(4),
                                                detail::centered_terms(6)};
    if (spec.family == Family::holistic) return hol[static_cast<std::size_t>(spec.gamma_order - 3)];
    if (spec.family == Family::centered) return cd[static_cast<std::size_t>(spec.centered_order / 2 - 1)];
    fail(ErrorKind::unsupported, "Galerkin models have no stencil term table");
}

// ---------------------------------------------------------------------------
// Grid evaluation
// ---------------------------------------------------------------------------

enum class Part : unsigned { linear = 1, nonlinear = 2, all = 3 };

namespace detail {

inline double ipow(double x, int n) noexcept
{
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

inline constexpr int ghost_width = 4; // widest stencil half-width (delta^8)

struct GridScratch {
    std::array<Vector, 5> even; // delta^0 (unused), 2, 4, 6, 8
    std::array<Vector, 4> odd;  // delta^1 mu, 3, 5, 7
    Vector padded;              // u with ghost_width periodic copies on each side
};

inline GridScratch& grid_scratch()
{
    thread_local GridScratch s;
    return s;
}

inline void fill_padded(std::span<const double> u, Vector& padded)
{
    const std::size_t n = u.size();
    const std::size_t g = ghost_width;
    padded.resize(n + 2 * g);
    for (std::size_t i = 0; i < g; ++i) {
        padded[i] = u[wrap_index(static_cast<long>(i) - static_cast<long>(g), n)];
        padded[n + g + i] = u[wrap_index(static_cast<long>(i), n)];
    }
    std::copy(u.begin(), u.end(), padded.begin() + static_cast<std::ptrdiff_t>(g));
}

// Applies st at every point of the padded field.
inline void fill_stencil(const Vector& padded, std::size_t n, const Stencil& st, Vector& out)
{
    out.resize(n);
    const std::size_t hw = static_cast<std::size_t>(st.half_width);
    const std::size_t w = 2 * hw + 1;
    const double* weights = st.weights.data();
    const double* base = padded.data() + (ghost_width - hw);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < w; ++k) acc += weights[k] * base[j + k];
        out[j] = acc;
    }
}

} // namespace detail

/// Evaluates the selected part(s) of a grid model's right-hand side.
inline void grid_rhs_into(const ModelSpec& spec, std::span<const double> u, double h, std::span<double> out,
                          Part part = Part::all)
{
    const std::size_t n = u.size();
    if (n < static_cast<std::size_t>(spec.stencil_width()) + 1)
        fail(ErrorKind::grid_too_coarse, spec.selector() + " needs at least " + std::to_string(spec.stencil_width() + 1)
                                             + " grid points, got " + std::to_string(n));
    const TermTable& table = term_table(spec);
    auto& s = detail::grid_scratch();
    std::array<bool, 5> need_even{};
    std::array<bool, 4> need_odd{};
    const bool lin = (static_cast<unsigned>(part) & 1U) != 0;
    const bool nl = (static_cast<unsigned>(part) & 2U) != 0;
    if (lin)
        for (const auto& t : table.linear) need_even[static_cast<std::size_t>(t.diff / 2)] = true;
    if (nl)
        for (const auto& t : table.bilinear) {
            need_even[static_cast<std::size_t>(t.left_diff / 2)] = true;
            need_odd[static_cast<std::size_t>(t.right_diff / 2)] = true;
        }
    detail::fill_padded(u, s.padded);
    for (std::size_t a = 1; a < 5; ++a)
        if (need_even[a]) detail::fill_stencil(s.padded, n, even_difference_stencil(static_cast<int>(2 * a)), s.even[a]);
    for (std::size_t b = 0; b < 4; ++b)
        if (need_odd[b])
            detail::fill_stencil(s.padded, n, odd_difference_mean_stencil(static_cast<int>(2 * b + 1)), s.odd[b]);

    for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
    const double g = spec.gamma;
    const double alpha = spec.alpha;
    if (lin) {
        for (const auto& t : table.linear) {
            double c = static_cast<double>(t.num) / static_cast<double>(t.den);
            c *= detail::ipow(g, t.gamma_power) / detail::ipow(h, t.h_power);
            if (t.with_alpha) c *= alpha;
            if (c == 0.0) continue;
            const Vector& d = s.even[static_cast<std::size_t>(t.diff / 2)];
            for (std::size_t j = 0; j < n; ++j) out[j] += c * d[j];
        }
    }
    if (nl) {
        for (const auto& t : table.bilinear) {
            double c = static_cast<double>(t.num) / static_cast<double>(t.den);
            c *= detail::ipow(g, t.gamma_power) * alpha / h;
            if (c == 0.0) continue;
            const Vector& right = s.odd[static_cast<std::size_t>(t.right_diff / 2)];
            if (t.left_diff == 0) {
                for (std::size_t j = 0; j < n; ++j) out[j] += c * u[j] * right[j];
            } else {
                const Vector& left = s.even[static_cast<std::size_t>(t.left_diff / 2)];
                for (std::size_t j = 0; j < n; ++j) out[j] += c * left[j] * right[j];
            }
        }
    }
}

/// Straightforward evaluation in any floating type; used where double rounding
/// would swamp the quantity being measured (fine-grid truncation errors).
template <class T>
std::vector<T> grid_rhs_generic(const ModelSpec& spec, std::span<const T> u, T h)
{
    const std::size_t n = u.size();
    if (n < static_cast<std::size_t>(spec.stencil_width()) + 1)
        fail(ErrorKind::grid_too_coarse, spec.selector() + " needs at least " + std::to_string(spec.stencil_width() + 1)
                                             + " grid points, got " + std::to_string(n));
    auto apply = [&](const Stencil& st, std::size_t j) {
        T acc = 0;
        for (int k = -st.half_width; k <= st.half_width; ++k)
            acc += static_cast<T>(st.weight(k)) * u[wrap_index(static_cast<long>(j) + k, n)];
        return acc;
    };
    const TermTable& table = term_table(spec);
    const T g = static_cast<T>(spec.gamma);
    const T alpha = static_cast<T>(spec.alpha);
    auto power = [](T x, int k) {
        T r = 1;
        for (int i = 0; i < k; ++i) r *= x;
        return r;
    };
    std::vector<T> out(n, T(0));
    for (std::size_t j = 0; j < n; ++j) {
        T acc = 0;
        for (const auto& t : table.linear) {
            T c = static_cast<T>(t.num) / static_cast<T>(t.den) * power(g, t.gamma_power) / power(h, t.h_power);
            if (t.with_alpha) c *= alpha;
            acc += c * apply(even_difference_stencil(t.diff), j);
        }
        for (const auto& t : table.bilinear) {
            const T c = static_cast<T>(t.num) / static_cast<T>(t.den) * power(g, t.gamma_power) * alpha / h;
            const T left = t.left_diff == 0 ? u[j] : apply(even_difference_stencil(t.left_diff), j);
            acc += c * left * apply(odd_difference_mean_stencil(t.right_diff), j);
        }
        out[j] = acc;
    }
    return out;
}

inline PeriodicSequence rhs_holistic(const GridField& field, const ModelSpec& spec)
{
    if (spec.family != Family::holistic) fail(ErrorKind::unsupported, "rhs_holistic called with " + spec.selector());
    PeriodicSequence out(field.size());
    grid_rhs_into(spec, field.u, field.h, out);
    return out;
}

inline PeriodicSequence rhs_centered(const GridField& field, const ModelSpec& spec)
{
    if (spec.family != Family::centered) fail(ErrorKind::unsupported, "rhs_centered called with " + spec.selector());
    PeriodicSequence out(field.size());
    grid_rhs_into(spec, field.u, field.h, out);
    return out;
}

inline PeriodicSequence rhs_grid(const GridField& field, const ModelSpec& spec)
{
    if (!spec.grid_based()) fail(ErrorKind::unsupported, "rhs_grid called with " + spec.selector());
    PeriodicSequence out(field.size());
    grid_rhs_into(spec, field.u, field.h, out);
    return out;
}

/// Growth rate of e^{ikx} under the linear part of a grid model:
/// each delta^a maps to (-4 sin^2(kh/2))^{a/2}.
inline double dispersion_symbol(const ModelSpec& spec, int k, double h)
{
    if (!spec.grid_based())
        fail(ErrorKind::unsupported, "dispersion_symbol: Galerkin linear rates are -4k^4 + alpha k^2 directly");
    const double s = std::sin(0.5 * static_cast<double>(k) * h);
    const double d2 = -4.0 * s * s;
    double rate = 0.0;
    for (const auto& t : term_table(spec).linear) {
        double c = static_cast<double>(t.num) / static_cast<double>(t.den);
        c *= detail::ipow(spec.gamma, t.gamma_power) / detail::ipow(h, t.h_power);
        if (t.with_alpha) c *= spec.alpha;
        rate += c * detail::ipow(d2, t.diff / 2);
    }
    return rate;
}

// ---------------------------------------------------------------------------
// Galerkin
// ---------------------------------------------------------------------------

/// beta^M_k = 1/2 sum_{j=1}^{M} j b_j [b_{k+j} + sign(k-j) b_{|k-j|}],
/// with b_0 = 0, b_i = 0 for i > M and sign(0) = 0. `b` holds b_1..b_M.
inline double beta(std::span<const double> b, int k, int M)
{
    if (k < 1 || k > M) fail(ErrorKind::index_out_of_range, "beta: k = " + std::to_string(k) + " outside 1.." + std::to_string(M));
    auto coef = [&](int i) -> double {
        if (i <= 0 || i > M || static_cast<std::size_t>(i) > b.size()) return 0.0;
        return b[static_cast<std::size_t>(i - 1)];
    };
    double sum = 0.0;
    for (int j = 1; j <= M; ++j) {
        const double bj = coef(j);
        if (bj == 0.0) continue;
        const int diff = k - j;
        const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        sum += j * bj * (coef(k + j) + sgn * coef(diff < 0 ? -diff : diff));
    }
    return 0.5 * sum;
}

inline double galerkin_linear_rate(int k, double alpha) noexcept
{
    const double kk = static_cast<double>(k) * k;
    return -4.0 * kk * kk + alpha * kk;
}

inline void galerkin_rhs_into(const ModelSpec& spec, std::span<const double> b, std::span<double> out,
                              Part part = Part::all)
{
    const int m = spec.modes;
    if (static_cast<int>(b.size()) != m) fail(ErrorKind::incompatible_domain, "Galerkin state has the wrong length");
    for (double v : b)
        if (!std::isfinite(v)) fail(ErrorKind::blow_up, "Galerkin state is not finite");
    const bool lin = (static_cast<unsigned>(part) & 1U) != 0;
    const bool nl = (static_cast<unsigned>(part) & 2U) != 0;
    const double alpha = spec.alpha;
    if (spec.family == Family::galerkin_traditional) {
        for (int k = 1; k <= m; ++k) {
            double v = 0.0;
            if (lin) v += galerkin_linear_rate(k, alpha) * b[static_cast<std::size_t>(k - 1)];
            if (nl) v -= alpha * beta(b, k, m);
            out[static_cast<std::size_t>(k - 1)] = v;
        }
        return;
    }
    if (spec.family != Family::galerkin_nl1) fail(ErrorKind::unsupported, "galerkin_rhs called with " + spec.selector());
    Vector padded(static_cast<std::size_t>(2 * m), 0.0);
    std::copy(b.begin(), b.end(), padded.begin());
    Vector slaved(padded);
    for (int j = m + 1; j <= 2 * m; ++j) {
        const double jj = static_cast<double>(j) * j;
        slaved[static_cast<std::size_t>(j - 1)] = -(alpha / (4.0 * jj * jj)) * beta(padded, j, 2 * m);
    }
    for (int k = 1; k <= m; ++k) {
        double v = 0.0;
        if (lin) v += galerkin_linear_rate(k, alpha) * b[static_cast<std::size_t>(k - 1)];
        if (nl) v -= alpha * beta(slaved, k, 2 * m);
        out[static_cast<std::size_t>(k - 1)] = v;
    }
}

inline Vector rhs_galerkin(const GalerkinState& state, const ModelSpec& spec)
{
    if (spec.grid_based()) fail(ErrorKind::unsupported, "rhs_galerkin called with " + spec.selector());
    Vector out(state.b.size());
    galerkin_rhs_into(spec, state.b, out);
    return out;
}

// ---------------------------------------------------------------------------
// Jacobians
// ---------------------------------------------------------------------------

/// Central-difference directional derivative of a right-hand side. For the
/// quadratic models this is exact up to rounding for any step.
template <class Rhs>
Vector directional_derivative(Rhs&& rhs, std::span<const double> u, std::span<const double> v, double eps)
{
    const std::size_t n = u.size();
    Vector plus(u.begin(), u.end()), minus(u.begin(), u.end());
    for (std::size_t i = 0; i < n; ++i) {
        plus[i] += eps * v[i];
        minus[i] -= eps * v[i];
    }
    Vector fp(n), fm(n);
    rhs(std::span<const double>(plus), std::span<double>(fp));
    rhs(std::span<const double>(minus), std::span<double>(fm));
    for (std::size_t i = 0; i < n; ++i) fp[i] = (fp[i] - fm[i]) / (2.0 * eps);
    return fp;
}

inline double jacobian_step(std::span<const double> u) noexcept { return 1e-5 * std::max(1.0, norm_inf(u)); }

inline PeriodicSequence jacobian_apply(const GridField& field, const ModelSpec& spec, std::span<const double> v,
                                       double eps = 0.0)
{
    if (v.size() != field.size()) fail(ErrorKind::incompatible_domain, "jacobian_apply: shape mismatch");
    if (eps <= 0.0) eps = jacobian_step(field.u);
    auto f = [&](std::span<const double> x, std::span<double> out) { grid_rhs_into(spec, x, field.h, out); };
    return directional_derivative(f, field.u, v, eps);
}

inline Vector jacobian_apply(const GalerkinState& state, const ModelSpec& spec, std::span<const double> v,
                             double eps = 0.0)
{
    if (v.size() != state.b.size()) fail(ErrorKind::incompatible_domain, "jacobian_apply: shape mismatch");
    if (eps <= 0.0) eps = jacobian_step(state.b);
    auto f = [&](std::span<const double> x, std::span<double> out) { galerkin_rhs_into(spec, x, out); };
    return directional_derivative(f, state.b, v, eps);
}

template <class State>
Matrix jacobian_dense(const State& state, const ModelSpec& spec)
{
    std::size_t n = 0;
    if constexpr (std::is_same_v<State, GridField>)
        n = state.size();
    else
        n = state.b.size();
    Matrix j(n, n);
    Vector e(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        const Vector col = jacobian_apply(state, spec, e);
        j.set_column(c, col);
        e[c] = 0.0;
    }
    return j;
}

} // namespace ks
