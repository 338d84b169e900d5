#pragma once

// A model plus a geometry, seen as an ODE system dx/dt = F(x) on a flat state
// vector. Everything downstream (time stepping, Newton, continuation,
// shooting) works on this view.
//
//   full:N   x = u_0..u_{N-1} on [0, 2 pi)
//   odd:m    x = u_1..u_m at x_j = (j - 1/2) pi / m: m elements on [0, pi]
//            with the odd field sampled at element centres
//   nodal:m  x = u_1..u_{m-1} at x_j = j pi / m, u_0 = u_m = 0 (see odd.hpp)
//   modal:m  x = b_1..b_m, Galerkin sine amplitudes
//
// The linear part of every model is diagonal in a known basis (Fourier for
// full grids, sine modes for odd grids, identity for Galerkin). System exposes
// that basis so stiff integrators can treat the linear part exactly.

#include "ks/errors.hpp"
#include "ks/fft.hpp"
#include "ks/linalg.hpp"
#include "ks/model.hpp"
#include "ks/odd.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

namespace ks {

struct Geometry {
    enum class Kind { full, odd, nodal, modal };
    Kind kind = Kind::full;
    int n = 0;

    static Geometry full(int points) { return {Kind::full, points}; }
    static Geometry odd(int elements) { return {Kind::odd, elements}; }
    static Geometry nodal(int elements) { return {Kind::nodal, elements}; }
    static Geometry modal(int modes) { return {Kind::modal, modes}; }

    /// "full:N", "odd:m" or "nodal:m".
    static Geometry parse(std::string_view text)
    {
        const auto colon = text.find(':');
        const std::string kind(text.substr(0, colon == std::string_view::npos ? text.size() : colon));
        int value = 0;
        if (colon != std::string_view::npos) {
            try {
                std::size_t used = 0;
                const std::string arg(text.substr(colon + 1));
                value = std::stoi(arg, &used);
                if (used != arg.size()) value = 0;
            } catch (const std::exception&) {
                value = 0;
            }
        }
        if (value <= 0) fail(ErrorKind::usage, "geometry '" + std::string(text) + "' must be full:N, odd:m or nodal:m");
        if (kind == "full") return full(value);
        if (kind == "odd") return odd(value);
        if (kind == "nodal") return nodal(value);
        fail(ErrorKind::usage, "unknown geometry '" + kind + "'");
    }

    std::string label() const
    {
        switch (kind) {
        case Kind::full: return "full:" + std::to_string(n);
        case Kind::odd: return "odd:" + std::to_string(n);
        case Kind::nodal: return "nodal:" + std::to_string(n);
        case Kind::modal: return "modal:" + std::to_string(n);
        }
        return "?";
    }

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

class System {
public:
    System(ModelSpec spec, Geometry geometry)
        : spec_(spec)
        , geo_(geometry)
    {
        spec_.validate();
        const bool galerkin = !spec_.grid_based();
        if (galerkin && geo_.kind != Geometry::Kind::modal)
            fail(ErrorKind::usage, "Galerkin models take no grid geometry (got " + geo_.label() + ")");
        if (galerkin && geo_.n != spec_.modes) geo_.n = spec_.modes;
        if (!galerkin && geo_.kind == Geometry::Kind::modal)
            fail(ErrorKind::usage, "grid model " + spec_.selector() + " needs a full:N or odd:m geometry");
        const int points = grid_points();
        if (!galerkin && points < spec_.stencil_width() + 1)
            fail(ErrorKind::grid_too_coarse, spec_.selector() + " needs at least " + std::to_string(spec_.stencil_width() + 1)
                                                 + " grid points; " + geo_.label() + " gives " + std::to_string(points));
        if (odd_symmetric() && geo_.n < 3) fail(ErrorKind::grid_too_coarse, "odd geometry needs m >= 3");
        if (odd_symmetric()) sine_basis_ = make_sine_basis(geo_.kind, geo_.n);
        compute_rates();
    }

    /// Convenience for Galerkin models.
    explicit System(ModelSpec spec)
        : System(spec, Geometry::modal(spec.modes))
    {
    }

    const ModelSpec& spec() const noexcept { return spec_; }
    const Geometry& geometry() const noexcept { return geo_; }
    double alpha() const noexcept { return spec_.alpha; }

    System at_alpha(double alpha) const
    {
        System s = *this;
        s.spec_.alpha = alpha;
        s.compute_rates();
        return s;
    }

    std::size_t dim() const noexcept
    {
        switch (geo_.kind) {
        case Geometry::Kind::full: return static_cast<std::size_t>(geo_.n);
        case Geometry::Kind::nodal: return static_cast<std::size_t>(geo_.n - 1);
        case Geometry::Kind::odd: return static_cast<std::size_t>(geo_.n);
        case Geometry::Kind::modal: return static_cast<std::size_t>(geo_.n);
        }
        return 0;
    }

    bool odd_symmetric() const noexcept
    {
        return geo_.kind == Geometry::Kind::nodal || geo_.kind == Geometry::Kind::odd;
    }

    /// Offset of the first grid point from x = 0, in units of h.
    double node_offset() const noexcept { return geo_.kind == Geometry::Kind::odd ? 0.5 : 0.0; }

    /// Grid values on the whole periodic grid (points at (i + node_offset) h).
    Vector full_grid(std::span<const double> x) const
    {
        switch (geo_.kind) {
        case Geometry::Kind::full: return Vector(x.begin(), x.end());
        case Geometry::Kind::nodal: return embed(OddState{Vector(x.begin(), x.end()), geo_.n}).u;
        case Geometry::Kind::odd: return embed_cell_centred(x);
        case Geometry::Kind::modal: break;
        }
        fail(ErrorKind::incompatible_domain, "Galerkin states have no grid values");
    }

    /// Points of the underlying periodic grid (0 for Galerkin).
    int grid_points() const noexcept
    {
        if (geo_.kind == Geometry::Kind::full) return geo_.n;
        if (odd_symmetric()) return 2 * geo_.n;
        return 0;
    }

    double h() const noexcept
    {
        const int n = grid_points();
        return n > 0 ? 2.0 * std::numbers::pi / n : 0.0;
    }

    /// Grid coordinates of the state entries (x_j = j h).
    Vector nodes() const
    {
        Vector x(dim());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = (geo_.kind == Geometry::Kind::nodal ? static_cast<double>(i + 1) : static_cast<double>(i) + node_offset()) * h();
        return x;
    }

    void rhs(std::span<const double> x, std::span<double> out, Part part = Part::all) const
    {
        if (x.size() != dim()) fail(ErrorKind::incompatible_domain, "state has the wrong dimension");
        switch (geo_.kind) {
        case Geometry::Kind::modal: galerkin_rhs_into(spec_, x, out, part); return;
        case Geometry::Kind::full: grid_rhs_into(spec_, x, h(), out, part); return;
        case Geometry::Kind::nodal: {
            thread_local Vector full, g;
            const std::size_t m = static_cast<std::size_t>(geo_.n);
            full.assign(2 * m, 0.0);
            g.resize(2 * m);
            for (std::size_t j = 1; j < m; ++j) {
                full[j] = x[j - 1];
                full[2 * m - j] = -x[j - 1];
            }
            grid_rhs_into(spec_, full, h(), g, part);
            for (std::size_t j = 1; j < m; ++j) out[j - 1] = g[j];
            return;
        }
        case Geometry::Kind::odd: {
            thread_local Vector full, g;
            const std::size_t m = static_cast<std::size_t>(geo_.n);
            full.resize(2 * m);
            g.resize(2 * m);
            for (std::size_t i = 0; i < m; ++i) {
                full[i] = x[i];
                full[2 * m - 1 - i] = -x[i];
            }
            grid_rhs_into(spec_, full, h(), g, part);
            for (std::size_t i = 0; i < m; ++i) out[i] = g[i];
            return;
        }
        }
    }

    Vector rhs(std::span<const double> x) const
    {
        Vector out(dim());
        rhs(x, out);
        return out;
    }

    /// J(x) v by central differences; exact for the quadratic models.
    Vector jacobian_apply(std::span<const double> x, std::span<const double> v) const
    {
        auto f = [this](std::span<const double> a, std::span<double> out) { rhs(a, out); };
        return directional_derivative(f, x, v, jacobian_step(x));
    }

    Matrix jacobian(std::span<const double> x) const
    {
        const std::size_t n = dim();
        Matrix j(n, n);
        Vector e(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            e[c] = 1.0;
            j.set_column(c, jacobian_apply(x, e));
            e[c] = 0.0;
        }
        return j;
    }

    /// dF/dalpha; F is at most quadratic in alpha so the central difference is exact.
    Vector alpha_derivative(std::span<const double> x) const
    {
        const double d = 1e-3 * std::max(1.0, std::abs(spec_.alpha));
        const Vector fp = at_alpha(spec_.alpha + d).rhs(x);
        const Vector fm = at_alpha(std::max(0.0, spec_.alpha - d)).rhs(x);
        const double span = spec_.alpha + d - std::max(0.0, spec_.alpha - d);
        Vector out(fp.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (fp[i] - fm[i]) / span;
        return out;
    }

    /// Rates of the linear part in the diagonal basis, matching to_modal().
    const Vector& linear_rates() const noexcept { return rates_; }

    /// Largest |rate|: the stiffness scale.
    double stiffness() const noexcept
    {
        double s = 0.0;
        for (double r : rates_) s = std::max(s, std::abs(r));
        return s;
    }

    /// Whether F is exactly quadratic in x (false for nonlinear Galerkin).
    bool quadratic() const noexcept { return spec_.family != Family::galerkin_nl1; }

    /// Linear rate of integer wavenumber k (k >= 1 for odd and modal).
    double wavenumber_rate(int k) const
    {
        if (spec_.grid_based()) return dispersion_symbol(spec_, k, h());
        return galerkin_linear_rate(k, spec_.alpha);
    }

    // full: c = [Re U_0, Re U_1, Im U_1, ..., (Re U_{N/2} if N even)]
    // odd:  c = orthonormal DST-I coefficients
    // modal: identity
    void to_modal(std::span<const double> x, std::span<double> c) const
    {
        switch (geo_.kind) {
        case Geometry::Kind::modal: std::copy(x.begin(), x.end(), c.begin()); return;
        case Geometry::Kind::nodal:
        case Geometry::Kind::odd: {
            const Matrix& s = *sine_basis_;
            for (std::size_t i = 0; i < s.rows(); ++i) {
                double acc = 0.0;
                const auto r = s.row(i);
                for (std::size_t j = 0; j < s.cols(); ++j) acc += r[j] * x[j];
                c[i] = acc;
            }
            return;
        }
        case Geometry::Kind::full: {
            const auto u_hat = dft(x);
            const std::size_t n = x.size();
            c[0] = u_hat[0].real();
            std::size_t p = 1;
            for (std::size_t k = 1; 2 * k < n; ++k) {
                c[p++] = u_hat[k].real();
                c[p++] = u_hat[k].imag();
            }
            if (n % 2 == 0) c[p] = u_hat[n / 2].real();
            return;
        }
        }
    }

    void from_modal(std::span<const double> c, std::span<double> x) const
    {
        switch (geo_.kind) {
        case Geometry::Kind::modal: std::copy(c.begin(), c.end(), x.begin()); return;
        case Geometry::Kind::nodal:
        case Geometry::Kind::odd: {
            const Matrix& s = *sine_basis_; // orthogonal: the inverse is the transpose
            const std::size_t n = s.rows();
            for (std::size_t j = 0; j < n; ++j) x[j] = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const auto r = s.row(k);
                const double ck = c[k];
                for (std::size_t j = 0; j < n; ++j) x[j] += r[j] * ck;
            }
            return;
        }
        case Geometry::Kind::full: {
            const std::size_t n = x.size();
            std::vector<Complex> u_hat(n);
            u_hat[0] = c[0];
            std::size_t p = 1;
            for (std::size_t k = 1; 2 * k < n; ++k) {
                u_hat[k] = Complex(c[p], c[p + 1]);
                u_hat[n - k] = std::conj(u_hat[k]);
                p += 2;
            }
            if (n % 2 == 0) u_hat[n / 2] = c[p];
            const Vector u = inverse_dft_real(std::move(u_hat));
            std::copy(u.begin(), u.end(), x.begin());
            return;
        }
        }
    }

    /// Wavenumber attached to each modal coordinate.
    std::vector<int> modal_wavenumbers() const
    {
        std::vector<int> k(dim());
        if (geo_.kind == Geometry::Kind::full) {
            const std::size_t n = dim();
            k[0] = 0;
            std::size_t p = 1;
            for (std::size_t q = 1; 2 * q < n; ++q) {
                k[p++] = static_cast<int>(q);
                k[p++] = static_cast<int>(q);
            }
            if (n % 2 == 0) k[p] = static_cast<int>(n / 2);
        } else {
            for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<int>(i + 1);
        }
        return k;
    }

private:
    // Row k holds sin((k+1) x_j) over the free nodes, normalised.
    static std::shared_ptr<const Matrix> make_sine_basis(Geometry::Kind kind, int m)
    {
        const bool cell = kind == Geometry::Kind::odd;
        const std::size_t n = static_cast<std::size_t>(cell ? m : m - 1);
        auto s = std::make_shared<Matrix>(n, n);
        for (std::size_t k = 0; k < n; ++k) {
            const double scale = std::sqrt((cell && k + 1 == n ? 1.0 : 2.0) / m);
            for (std::size_t j = 0; j < n; ++j) {
                const double xj = cell ? static_cast<double>(j) + 0.5 : static_cast<double>(j + 1);
                (*s)(k, j) = scale * std::sin(std::numbers::pi * static_cast<double>(k + 1) * xj / m);
            }
        }
        return s;
    }

    void compute_rates()
    {
        const auto ks = modal_wavenumbers();
        rates_.resize(ks.size());
        for (std::size_t i = 0; i < ks.size(); ++i) rates_[i] = wavenumber_rate(ks[i]);
    }

    ModelSpec spec_;
    Geometry geo_;
    std::shared_ptr<const Matrix> sine_basis_;
    Vector rates_;
};

inline double signed_sign(std::span<const double> x) noexcept
{
    for (double v : x)
        if (v != 0.0) return v > 0 ? 1.0 : -1.0;
    return 0.0;
}

} // namespace ks
