#pragma once

// Regenerates the bifurcation, time-step and Hopf/period-doubling tables
// from surveys, steady states and orbit continuation.

#include "ks/continuation.hpp"
#include "ks/errors.hpp"
#include "ks/integrate.hpp"
#include "ks/orbits.hpp"
#include "ks/system.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ks {

// --- Table 1: secondary bifurcations on the primary branches ---------------

inline const std::array<const char*, 8>& table1_columns()
{
    static const std::array<const char*, 8> cols{"R2b1", "R2b2", "R2b3", "R2b4", "R3t1", "R3t2", "R4b1", "R4q1"};
    return cols;
}

struct Table1Row {
    std::string model;
    std::string geometry;
    std::array<std::optional<double>, 8> values; ///< in table1_columns() order
    std::array<std::string, 8> kinds;            ///< bifurcation kind behind each value
};

/// Distinct real events (pitchfork or fold) on both halves of a family, ascending.
inline std::vector<BifurcationPoint> family_events(const Survey& s, const std::string& family)
{
    std::vector<BifurcationPoint> out;
    for (const char* half : {"+", "-"})
        for (const auto& e : s.events_on(family + half)) {
            if (e.kind == BifurcationKind::hopf) continue;
            const bool dup = std::any_of(out.begin(), out.end(), [&](const BifurcationPoint& o) {
                return std::abs(o.alpha - e.alpha) <= 1e-3 * std::max(1.0, e.alpha);
            });
            if (!dup) out.push_back(e);
        }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
    return out;
}

/// Bimodal events in order fill R2b1..R2b4, trimodal R3t1..R3t2; on the
/// quadrimodal branch the lower event is R4q1 and the upper R4b1.
inline Table1Row table1_row(const Survey& s, const System& sys)
{
    Table1Row row;
    row.model = sys.spec().selector();
    row.geometry = sys.geometry().label();
    auto put = [&](std::size_t col, const BifurcationPoint& e) {
        row.values[col] = e.alpha;
        row.kinds[col] = bifurcation_kind_name(e.kind);
    };
    const auto bi = family_events(s, "bimodal");
    for (std::size_t i = 0; i < std::min<std::size_t>(4, bi.size()); ++i) put(i, bi[i]);
    const auto tri = family_events(s, "trimodal");
    for (std::size_t i = 0; i < std::min<std::size_t>(2, tri.size()); ++i) put(4 + i, tri[i]);
    const auto quad = family_events(s, "quadrimodal");
    if (!quad.empty()) put(7, quad[0]);
    if (quad.size() > 1) put(6, quad[1]);
    return row;
}

inline Table1Row table1_row(const System& sys, const ContinuationOptions& opt = {})
{
    return table1_row(survey(sys, opt), sys);
}

// --- Table 3: largest stable RK4 step -----------------------------------------

/// Steady state on a named primary branch at alpha, polished by Newton.
inline SteadyState branch_state(const System& sys, const std::string& label, double alpha)
{
    ContinuationOptions opt;
    opt.alpha_max = alpha + 1.0;
    const Survey s = survey(sys, opt);
    const Branch* b = s.find(label);
    if (!b || b->points.empty()) fail(ErrorKind::search_invalid, "no branch '" + label + "' below alpha = " + std::to_string(opt.alpha_max));
    const SteadyState* best = nullptr;
    for (const auto& p : b->points)
        if (!best || std::abs(p.alpha - alpha) < std::abs(best->alpha - alpha)) best = &p;
    if (std::abs(best->alpha - alpha) > 1.0)
        fail(ErrorKind::search_invalid, "branch '" + label + "' does not reach alpha = " + std::to_string(alpha));
    return newton_solve(sys, alpha, best->x);
}

struct Table3Entry {
    std::string model;
    std::string geometry;
    double alpha = 0.0;
    double dt = 0.0;
};

/// max_stable_dt on the negative unimodal steady state (or another named branch).
inline Table3Entry table3_entry(const System& sys, double alpha, const std::string& branch = "unimodal-")
{
    const SteadyState st = branch_state(sys, branch, alpha);
    return {sys.spec().selector(), sys.geometry().label(), alpha, max_stable_dt(sys.at_alpha(alpha), st.x)};
}

// --- Table 4: first Hopf point and first period doubling -------------------------

struct Table4Row {
    std::string model;
    std::string geometry;
    std::optional<double> hopf;
    std::optional<double> period_doubling;
    std::vector<BifurcationPoint> orbit_events; ///< every event met on the orbit branch
    OrbitBranch orbits;
    std::string note; ///< why a column is empty, if it is
};

struct Table4Options {
    double alpha_max = 70.0;  ///< steady survey range
    double orbit_span = 3.5;  ///< continue orbits this far past HB1
    ContinuationOptions survey;
    OrbitContinuationOptions orbits = [] {
        OrbitContinuationOptions o;
        o.allow_partial = true;
        o.follow_stable = true;
        return o;
    }();
};

/// Lowest Hopf point of a survey, if any.
inline std::optional<BifurcationPoint> first_hopf(const Survey& s)
{
    std::optional<BifurcationPoint> hb;
    for (const auto& e : s.events)
        if (e.kind == BifurcationKind::hopf && (!hb || e.alpha < hb->alpha)) hb = e;
    return hb;
}

inline Table4Row table4_row(const Survey& s, const System& sys, const Table4Options& opt = {})
{
    Table4Row row;
    row.model = sys.spec().selector();
    row.geometry = sys.geometry().label();
    const auto hb = first_hopf(s);
    if (!hb) {
        row.note = "no Hopf point";
        return row;
    }
    row.hopf = hb->alpha;
    try {
        const PeriodicOrbit first = orbit_from_hopf(sys, *hb);
        auto [branch, events] = continue_orbits(sys, first, hb->alpha + opt.orbit_span, opt.orbits, "HB1");
        row.orbits = std::move(branch);
        row.orbit_events = std::move(events);
    } catch (const Error& e) {
        row.note = std::string(error_kind_name(e.kind())) + ": " + e.what();
        return row;
    }
    for (const auto& e : row.orbit_events)
        if (e.kind == BifurcationKind::period_doubling) {
            row.period_doubling = e.alpha;
            break;
        }
    if (!row.period_doubling) row.note = row.orbits.complete ? "no period doubling in range" : "orbit continuation stalled";
    return row;
}

inline Table4Row table4_row(const System& sys, const Table4Options& opt = {})
{
    ContinuationOptions so = opt.survey;
    so.alpha_max = opt.alpha_max;
    return table4_row(survey(sys, so), sys, opt);
}

// --- published values ---------------------------------------------------------------

struct PublishedRow {
    const char* label;
    const char* model;
    const char* geometry;
    std::array<double, 8> values; ///< NaN where no value is listed
};

inline const std::vector<PublishedRow>& published_table1()
{
    constexpr double na = std::numeric_limits<double>::quiet_NaN();
    static const std::vector<PublishedRow> rows{
        {"accurate", "cd:6", "odd:24", {16.14, 22.56, 52.89, 63.74, 36.23, 50.91, 64.56, 64.28}},
        {"holistic O(g3)", "hol:3", "odd:8", {14.64, 20.36, 39.34, 44.96, 29.28, na, 45.28, 44.87}},
        {"holistic O(g4)", "hol:4", "odd:8", {16.00, 22.56, 48.62, 57.38, 34.73, na, 57.89, 57.49}},
        {"holistic O(g5)", "hol:5", "odd:8", {16.13, 22.72, 51.54, 61.54, 35.89, na, 62.20, 61.78}},
    };
    return rows;
}

struct PublishedDt {
    const char* model;
    const char* geometry;
    std::array<double, 3> dt; ///< at alpha = 10, 20, 30; NaN where none is listed
};

inline const std::vector<PublishedDt>& published_table3()
{
    constexpr double na = std::numeric_limits<double>::quiet_NaN();
    static const std::vector<PublishedDt> rows{
        {"hol:3", "odd:8", {0.0011, 0.0014, 0.0017}}, {"hol:4", "odd:8", {0.0006, 0.0007, 0.0008}},
        {"hol:5", "odd:8", {0.0005, 0.0005, 0.0006}}, {"cd:2", "odd:8", {0.0011, 0.0012, na}},
        {"cd:4", "odd:8", {0.0006, 0.0007, 0.0008}},  {"cd:6", "odd:8", {0.0005, 0.0005, 0.0006}},
        {"cd:2", "odd:16", {0.00006, 0.00006, 0.00006}},
    };
    return rows;
}

struct PublishedHopf {
    const char* model;
    const char* geometry;
    double hopf; ///< NaN where none is listed
    double period_doubling;
};

inline const std::vector<PublishedHopf>& published_table4()
{
    constexpr double na = std::numeric_limits<double>::quiet_NaN();
    static const std::vector<PublishedHopf> rows{
        {"hol:3", "odd:8", 25.60, 27.22}, {"hol:4", "odd:8", 30.04, 32.03}, {"hol:5", "odd:8", 30.66, 32.95},
        {"cd:2", "odd:8", na, na},        {"cd:4", "odd:8", 27.91, 29.57}, {"cd:6", "odd:8", 29.11, 31.40},
        {"cd:6", "odd:24", 30.35, 32.97},
    };
    return rows;
}

} // namespace ks
