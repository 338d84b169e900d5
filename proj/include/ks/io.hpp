#pragma once

// Plain-text artifacts: CSV files with 17 significant digits, key=value
// manifests, built-in initial conditions and the resolved run configuration.

#include "ks/analysis.hpp"
#include "ks/continuation.hpp"
#include "ks/errors.hpp"
#include "ks/integrate.hpp"
#include "ks/orbits.hpp"
#include "ks/system.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ks {

inline constexpr const char* library_version = "0.1.0";

/// Shortest-safe lossless text for a double ("%.17g").
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& text)
{
    // strtod rather than stod: subnormals set ERANGE but are still exact.
    if (text.empty() || std::isspace(static_cast<unsigned char>(text.front())))
        fail(ErrorKind::io, "not a number: '" + text + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || (errno == ERANGE && std::isinf(v)))
        fail(ErrorKind::io, "not a number: '" + text + "'");
    return v;
}

inline long parse_integer(const std::string& text)
{
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(text, &used);
    } catch (const std::exception&) {
        fail(ErrorKind::io, "not an integer: '" + text + "'");
    }
    if (used != text.size()) fail(ErrorKind::io, "not an integer: '" + text + "'");
    return v;
}

/// A CSV file as header + rows of fields. No quoting: fields never contain commas.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline void write_csv(std::ostream& out, const CsvTable& t)
{
    auto line = [&](const std::vector<std::string>& f) {
        for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

inline CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::io, "empty CSV input");
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != t.header.size())
            fail(ErrorKind::io, "CSV row has " + std::to_string(f.size()) + " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(f));
    }
    return t;
}

inline void save_csv(const std::string& path, const CsvTable& t)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    write_csv(out, t);
    if (!out) fail(ErrorKind::io, "write failed for " + path);
}

inline CsvTable load_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot read " + path);
    return read_csv(in);
}

namespace detail {

inline void append_numbered(std::vector<std::string>& header, const std::string& stem, std::size_t n)
{
    for (std::size_t i = 1; i <= n; ++i) header.push_back(stem + std::to_string(i));
}

inline void append_values(std::vector<std::string>& row, std::span<const double> v)
{
    for (double x : v) row.push_back(format_double(x));
}

inline Vector values_from(const std::vector<std::string>& row, std::size_t first)
{
    Vector v;
    for (std::size_t i = first; i < row.size(); ++i) v.push_back(parse_double(row[i]));
    return v;
}

inline void expect_header(const CsvTable& t, std::size_t fixed, const std::vector<std::string>& names, const std::string& what)
{
    if (t.header.size() < fixed) fail(ErrorKind::io, what + " CSV header is too short");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (t.header[i] != names[i]) fail(ErrorKind::io, what + " CSV column " + std::to_string(i + 1) + " should be " + names[i]);
}

} // namespace detail

// --- trajectories ---------------------------------------------------------

inline CsvTable trajectory_csv(const Trajectory& traj)
{
    CsvTable t;
    t.header = {"t"};
    detail::append_numbered(t.header, "u_", traj.states.empty() ? 0 : traj.states.front().size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<std::string> row{format_double(traj.times[i])};
        detail::append_values(row, traj.states[i]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Trajectory trajectory_from_csv(const CsvTable& t, const Geometry& geometry, const ModelSpec& spec = {})
{
    detail::expect_header(t, 2, {"t"}, "trajectory");
    Trajectory traj{spec, geometry, {}, {}};
    for (const auto& r : t.rows) {
        traj.times.push_back(parse_double(r[0]));
        traj.states.push_back(detail::values_from(r, 1));
    }
    for (std::size_t i = 1; i < traj.times.size(); ++i)
        if (!(traj.times[i] > traj.times[i - 1])) fail(ErrorKind::io, "trajectory times must increase");
    return traj;
}

// --- branches and bifurcations --------------------------------------------

/// One row of a branch CSV.
struct BranchRecord {
    double alpha = 0.0;
    double signed_norm = 0.0;
    int n_unstable = 0;
    Vector state;
};

inline std::vector<BranchRecord> branch_records(const Branch& b)
{
    std::vector<BranchRecord> out;
    for (std::size_t i = 0; i < b.points.size(); ++i)
        out.push_back({b.points[i].alpha, b.signed_norms[i], b.points[i].n_unstable, b.points[i].x});
    return out;
}

inline CsvTable branch_csv(const std::vector<BranchRecord>& records)
{
    CsvTable t;
    t.header = {"alpha", "signed_norm", "n_unstable"};
    detail::append_numbered(t.header, "u_", records.empty() ? 0 : records.front().state.size());
    for (const auto& r : records) {
        std::vector<std::string> row{format_double(r.alpha), format_double(r.signed_norm), std::to_string(r.n_unstable)};
        detail::append_values(row, r.state);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable branch_csv(const Branch& b) { return branch_csv(branch_records(b)); }

inline std::vector<BranchRecord> branch_records_from_csv(const CsvTable& t)
{
    detail::expect_header(t, 3, {"alpha", "signed_norm", "n_unstable"}, "branch");
    std::vector<BranchRecord> out;
    for (const auto& r : t.rows)
        out.push_back({parse_double(r[0]), parse_double(r[1]), static_cast<int>(parse_integer(r[2])), detail::values_from(r, 3)});
    return out;
}

inline CsvTable bifurcation_csv(const std::vector<BifurcationPoint>& events)
{
    CsvTable t;
    t.header = {"kind", "alpha", "branch", "re_lambda", "im_lambda"};
    for (const auto& e : events)
        t.rows.push_back({bifurcation_kind_name(e.kind), format_double(e.alpha), e.branch_label,
                          format_double(e.eigenvalue.real()), format_double(e.eigenvalue.imag())});
    return t;
}

inline BifurcationKind bifurcation_kind_from_name(const std::string& name)
{
    for (auto k : {BifurcationKind::pitchfork, BifurcationKind::fold, BifurcationKind::hopf, BifurcationKind::period_doubling})
        if (name == bifurcation_kind_name(k)) return k;
    fail(ErrorKind::io, "unknown bifurcation kind '" + name + "'");
}

inline std::vector<BifurcationPoint> bifurcations_from_csv(const CsvTable& t)
{
    detail::expect_header(t, 5, {"kind", "alpha", "branch", "re_lambda", "im_lambda"}, "bifurcation");
    std::vector<BifurcationPoint> out;
    for (const auto& r : t.rows) {
        BifurcationPoint e;
        e.kind = bifurcation_kind_from_name(r[0]);
        e.alpha = parse_double(r[1]);
        e.branch_label = r[2];
        e.eigenvalue = Complex(parse_double(r[3]), parse_double(r[4]));
        out.push_back(std::move(e));
    }
    return out;
}

// --- orbits, spectra, consistency -------------------------------------------

inline CsvTable orbit_csv(const OrbitBranch& branch)
{
    CsvTable t;
    t.header = {"alpha", "period", "stable", "mu_max_re", "mu_max_im"};
    detail::append_numbered(t.header, "anchor_u_", branch.orbits.empty() ? 0 : branch.orbits.front().anchor.size());
    for (const auto& o : branch.orbits) {
        const Complex mu = o.dominant_multiplier();
        std::vector<std::string> row{format_double(o.alpha), format_double(o.period), o.stable ? "1" : "0",
                                     format_double(mu.real()), format_double(mu.imag())};
        detail::append_values(row, o.anchor);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable spectrum_csv(const SpectrumResult& s)
{
    CsvTable t;
    t.header = {"k", "S_k"};
    for (std::size_t i = 0; i < s.wavenumbers.size(); ++i)
        t.rows.push_back({std::to_string(s.wavenumbers[i]), format_double(s.power[i])});
    return t;
}

inline CsvTable consistency_csv(const ConsistencyReport& r)
{
    CsvTable t;
    t.header = {"N", "h", "max_error", "fitted_order"};
    for (std::size_t i = 0; i < r.grid_sizes.size(); ++i)
        t.rows.push_back({std::to_string(r.grid_sizes[i]), format_double(r.h[i]), format_double(r.max_errors[i]),
                          format_double(r.fitted_order)});
    return t;
}

// --- manifests ------------------------------------------------------------

/// Ordered key=value pairs; '#' starts a comment line.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline void write_manifest(std::ostream& out, const KeyValues& kv)
{
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

inline KeyValues read_manifest(std::istream& in)
{
    KeyValues kv;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorKind::io, "manifest line " + std::to_string(number) + " has no '='");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

inline void save_manifest(const std::string& path, const KeyValues& kv)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    write_manifest(out, kv);
}

inline KeyValues load_manifest(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot read " + path);
    return read_manifest(in);
}

// --- initial conditions ------------------------------------------------------

namespace detail {

// Splits "name(a,b)" into name and arguments.
inline std::pair<std::string, std::vector<std::string>> parse_call(const std::string& text)
{
    const auto open = text.find('(');
    if (open == std::string::npos) return {text, {}};
    if (text.back() != ')') fail(ErrorKind::usage, "malformed initial condition '" + text + "'");
    std::vector<std::string> args;
    std::string inner = text.substr(open + 1, text.size() - open - 2);
    std::istringstream in(inner);
    std::string a;
    while (std::getline(in, a, ',')) {
        const auto s = a.find_first_not_of(' ');
        const auto e = a.find_last_not_of(' ');
        args.push_back(s == std::string::npos ? std::string() : a.substr(s, e - s + 1));
    }
    return {text.substr(0, open), args};
}

// Sine coefficient (2/pi) int_0^pi f(x) sin(kx) dx by composite Simpson.
template <class F>
double sine_coefficient(F&& f, int k)
{
    const int n = 2048;
    const double h = std::numbers::pi / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f(x) * std::sin(k * x);
    }
    return 2.0 / std::numbers::pi * acc * h / 3.0;
}

} // namespace detail

/// zero | halfwave | sine(k) | random(seed, amplitude), sampled on the
/// system's nodes (projected onto sine modes for Galerkin models).
inline Vector builtin_ic(const std::string& name, const System& sys)
{
    const auto [kind, args] = detail::parse_call(name);
    const bool modal = sys.geometry().kind == Geometry::Kind::modal;
    const std::size_t n = sys.dim();
    auto arg_count = [&, &kind = kind, &args = args](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi) fail(ErrorKind::usage, "wrong number of arguments for initial condition " + kind);
    };
    if (kind == "zero") {
        arg_count(0, 0);
        return Vector(n, 0.0);
    }
    if (kind == "halfwave") {
        arg_count(0, 0);
        auto f = [](double x) { return std::abs(std::sin(0.5 * x)); };
        Vector v(n);
        if (modal) {
            for (std::size_t k = 0; k < n; ++k) v[k] = detail::sine_coefficient(f, static_cast<int>(k + 1));
        } else {
            const Vector x = sys.nodes();
            for (std::size_t j = 0; j < n; ++j) v[j] = f(x[j]);
        }
        return v;
    }
    if (kind == "sine") {
        arg_count(0, 1);
        const long k = args.empty() ? 1 : parse_integer(args[0]);
        if (k < 1) fail(ErrorKind::usage, "sine(k) needs k >= 1");
        Vector v(n, 0.0);
        if (modal) {
            if (static_cast<std::size_t>(k) > n) fail(ErrorKind::usage, "sine(k) beyond the retained modes");
            v[static_cast<std::size_t>(k - 1)] = 1.0;
        } else {
            const Vector x = sys.nodes();
            for (std::size_t j = 0; j < n; ++j) v[j] = std::sin(static_cast<double>(k) * x[j]);
        }
        return v;
    }
    if (kind == "random") {
        arg_count(1, 2);
        const auto seed = static_cast<std::uint64_t>(parse_integer(args[0]));
        const double amp = args.size() > 1 ? parse_double(args[1]) : 1e-2;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-amp, amp);
        Vector v(n);
        for (double& e : v) e = u(rng);
        return v;
    }
    fail(ErrorKind::usage, "unknown initial condition '" + name + "' (zero, halfwave, sine(k), random(seed,amp))");
}

// --- run configuration -------------------------------------------------------

/// Resolved settings of one CLI run as string key/values with typed access.
/// Defaults < config file < command-line flags.
class RunConfig {
public:
    RunConfig() = default;
    RunConfig(std::string command, KeyValues values)
        : command_(std::move(command))
    {
        for (auto& [k, v] : values) set(k, v);
    }

    const std::string& command() const noexcept { return command_; }

    void set(const std::string& key, const std::string& value)
    {
        for (auto& [k, v] : values_)
            if (k == key) {
                v = value;
                return;
            }
        values_.emplace_back(key, value);
    }

    bool has(const std::string& key) const
    {
        for (const auto& [k, v] : values_)
            if (k == key) return true;
        return false;
    }

    const std::string& text(const std::string& key) const
    {
        for (const auto& [k, v] : values_)
            if (k == key) return v;
        fail(ErrorKind::usage, "missing setting '" + key + "'");
    }

    double number(const std::string& key) const
    {
        try {
            return parse_double(text(key));
        } catch (const Error&) {
            fail(ErrorKind::usage, "setting '" + key + "' must be a number, got '" + text(key) + "'");
        }
    }

    long integer(const std::string& key) const
    {
        try {
            return parse_integer(text(key));
        } catch (const Error&) {
            fail(ErrorKind::usage, "setting '" + key + "' must be an integer, got '" + text(key) + "'");
        }
    }

    /// "lo:hi"
    std::pair<double, double> range(const std::string& key) const
    {
        const std::string& s = text(key);
        const auto colon = s.find(':');
        if (colon == std::string::npos) fail(ErrorKind::usage, "setting '" + key + "' must be lo:hi, got '" + s + "'");
        try {
            return {parse_double(s.substr(0, colon)), parse_double(s.substr(colon + 1))};
        } catch (const Error&) {
            fail(ErrorKind::usage, "setting '" + key + "' must be lo:hi, got '" + s + "'");
        }
    }

    std::vector<int> integer_list(const std::string& key) const
    {
        std::vector<int> out;
        std::istringstream in(text(key));
        std::string item;
        while (std::getline(in, item, ',')) {
            try {
                out.push_back(static_cast<int>(parse_integer(item)));
            } catch (const Error&) {
                fail(ErrorKind::usage, "setting '" + key + "' must be a comma-separated list of integers");
            }
        }
        return out;
    }

    const KeyValues& values() const noexcept { return values_; }

    /// Full manifest: command first, then every resolved setting.
    KeyValues manifest() const
    {
        KeyValues kv{{"command", command_}};
        for (const auto& p : values_) kv.push_back(p);
        return kv;
    }

private:
    std::string command_;
    KeyValues values_;
};

/// Model and geometry from a configuration. Galerkin models take no geometry,
/// so setting both is a conflict.
inline System system_from_config(const RunConfig& cfg, double alpha = 0.0)
{
    const ModelSpec spec = ModelSpec::parse(cfg.text("model"), alpha);
    const bool has_geo = cfg.has("geometry") && !cfg.text("geometry").empty();
    if (!spec.grid_based()) {
        if (has_geo) fail(ErrorKind::usage, "conflicting keys: model, geometry (Galerkin models take no geometry)");
        return System(spec);
    }
    if (!has_geo) fail(ErrorKind::usage, "missing key: geometry (required for grid model " + spec.selector() + ")");
    return System(spec, Geometry::parse(cfg.text("geometry")));
}

} // namespace ks
