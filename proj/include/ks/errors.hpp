#pragma once

#include <stdexcept>
#include <string>

namespace ks {

/// Machine-readable failure classes. The CLI prints the name returned by
/// error_kind_name() so scripts can branch on it.
enum class ErrorKind {
    invalid_operator,
    grid_too_coarse,
    unsupported,
    index_out_of_range,
    symmetry_violation,
    blow_up,
    search_invalid,
    divergence,
    near_bifurcation,
    eigen_failure,
    continuation_stall,
    degenerate_hopf,
    orbit_not_found,
    degenerate_orbit,
    insufficient_data,
    incompatible_domain,
    usage,
    io,
};

inline const char* error_kind_name(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_operator: return "invalid-operator";
    case ErrorKind::grid_too_coarse: return "grid-too-coarse";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::index_out_of_range: return "index-out-of-range";
    case ErrorKind::symmetry_violation: return "symmetry-violation";
    case ErrorKind::blow_up: return "blow-up";
    case ErrorKind::search_invalid: return "search-invalid";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::near_bifurcation: return "near-bifurcation";
    case ErrorKind::eigen_failure: return "eigen-failure";
    case ErrorKind::continuation_stall: return "continuation-stall";
    case ErrorKind::degenerate_hopf: return "degenerate-hopf";
    case ErrorKind::orbit_not_found: return "orbit-not-found";
    case ErrorKind::degenerate_orbit: return "degenerate-orbit";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::incompatible_domain: return "incompatible-domain";
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }
    const char* kind_name() const noexcept { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

/// Integration diverged; carries the step at which the state went non-finite
/// or exceeded the blow-up threshold.
class BlowUpError : public Error {
public:
    BlowUpError(long step, double time, const std::string& what)
        : Error(ErrorKind::blow_up, what)
        , step_(step)
        , time_(time)
    {
    }

    long step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    long step_;
    double time_;
};

/// Newton failed; carries the last residual norm.
class DivergenceError : public Error {
public:
    DivergenceError(double residual, const std::string& what)
        : Error(ErrorKind::divergence, what)
        , residual_(residual)
    {
    }

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

} // namespace ks
