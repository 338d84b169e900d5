#include "ks/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ks;

namespace {

std::string text_of(const CsvTable& t)
{
    std::ostringstream out;
    write_csv(out, t);
    return out.str();
}

CsvTable reread(const CsvTable& t)
{
    std::istringstream in(text_of(t));
    return read_csv(in);
}

template <class E>
ErrorKind kind_of(E&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::unsupported;
}

} // namespace

TEST(Format, DoublesRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, -0.0, 1e-310}) {
        const double back = parse_double(format_double(v));
        EXPECT_EQ(back, v);
        EXPECT_EQ(std::signbit(back), std::signbit(v));
    }
    EXPECT_EQ(kind_of([] { parse_double("1.5x"); }), ErrorKind::io);
    EXPECT_EQ(kind_of([] { parse_integer("7.0"); }), ErrorKind::io);
    EXPECT_EQ(parse_integer("-12"), -12);
}

TEST(Csv, BranchRoundTripIsByteIdentical)
{
    Branch b;
    b.label = "bimodal-";
    for (int i = 0; i < 4; ++i) {
        SteadyState s;
        s.alpha = 16.0 + 0.37 * i;
        s.x = {std::sin(0.1 * i), -1.0 / 3.0, 1e-17 * i};
        s.n_unstable = i % 2;
        b.points.push_back(s);
        b.signed_norms.push_back(signed_norm(s.x, 8));
    }
    const CsvTable t = branch_csv(b);
    const std::string first = text_of(t);
    const auto records = branch_records_from_csv(reread(t));
    ASSERT_EQ(records.size(), 4u);
    EXPECT_EQ(records[2].state, b.points[2].x);
    EXPECT_EQ(text_of(branch_csv(records)), first);
    EXPECT_EQ(t.header[3], "u_1");
}

TEST(Csv, BifurcationRoundTripIsByteIdentical)
{
    std::vector<BifurcationPoint> events(3);
    events[0] = {BifurcationKind::pitchfork, 4.0000001, "trivial", {1e-9, 0.0}, {}};
    events[1] = {BifurcationKind::hopf, 30.345, "bimodal-", {0.0, 12.25}, {}};
    events[2] = {BifurcationKind::period_doubling, 32.97, "HB1", {-1.0, 0.0}, {}};
    const CsvTable t = bifurcation_csv(events);
    const auto back = bifurcations_from_csv(reread(t));
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[1].kind, BifurcationKind::hopf);
    EXPECT_EQ(back[1].eigenvalue, events[1].eigenvalue);
    EXPECT_EQ(text_of(bifurcation_csv(back)), text_of(t));
    EXPECT_EQ(kind_of([] { bifurcation_kind_from_name("cusp"); }), ErrorKind::io);
}

TEST(Csv, TrajectoryRoundTripIsByteIdentical)
{
    Trajectory traj{ModelSpec::holistic(5, 20.0), Geometry::odd(4), {0.0, 0.001, 0.002}, {}};
    for (int i = 0; i < 3; ++i) traj.states.push_back({0.1 * i, -0.2, 1.0 / 7.0, std::exp(-i)});
    const CsvTable t = trajectory_csv(traj);
    const Trajectory back = trajectory_from_csv(reread(t), traj.geometry, traj.spec);
    EXPECT_EQ(back.states, traj.states);
    EXPECT_EQ(text_of(trajectory_csv(back)), text_of(t));

    CsvTable bad = t;
    bad.rows[2][0] = "0.0005";
    EXPECT_EQ(kind_of([&] { trajectory_from_csv(bad, traj.geometry); }), ErrorKind::io);
}

TEST(Csv, RejectsRaggedRowsAndWrongHeaders)
{
    std::istringstream ragged("alpha,signed_norm,n_unstable,u_1\n1,2,0\n");
    EXPECT_THROW(branch_records_from_csv(read_csv(ragged)), Error);
    std::istringstream wrong("t,u_1\n0,1\n");
    EXPECT_THROW(branch_records_from_csv(read_csv(wrong)), Error);
}

TEST(Manifest, RoundTripWithCommentsAndSpaces)
{
    const KeyValues kv{{"command", "sim"}, {"model", "hol:5"}, {"alpha", "20"}, {"ic", "random(7,0.01)"}};
    std::ostringstream out;
    write_manifest(out, kv);
    std::istringstream in("# run\n" + out.str() + "\n  dt =  1e-4 \n");
    const KeyValues back = read_manifest(in);
    ASSERT_EQ(back.size(), 5u);
    for (std::size_t i = 0; i < kv.size(); ++i) EXPECT_EQ(back[i], kv[i]);
    EXPECT_EQ(back[4], (std::pair<std::string, std::string>{"dt", "1e-4"}));
    std::istringstream bad("model hol:5\n");
    EXPECT_EQ(kind_of([&] { read_manifest(bad); }), ErrorKind::io);
}

TEST(InitialConditions, HalfWaveOnEightPoints)
{
    const System sys(ModelSpec::holistic(3, 5.0), Geometry::full(8));
    const Vector u = builtin_ic("halfwave", sys);
    ASSERT_EQ(u.size(), 8u);
    for (std::size_t j = 0; j < 8; ++j) {
        const double x = 2.0 * std::numbers::pi * static_cast<double>(j) / 8.0;
        EXPECT_NEAR(u[j], std::abs(std::sin(0.5 * x)), 1e-15);
    }
}

TEST(InitialConditions, HalfWaveGalerkinProjection)
{
    // b_k = (2/pi) int_0^pi sin(x/2) sin(kx) dx = (-1)^(k+1) 8k / (pi (4k^2 - 1))
    const System sys(ModelSpec::galerkin(4, 5.0));
    const Vector b = builtin_ic("halfwave", sys);
    for (int k = 1; k <= 4; ++k) {
        const double want = (k % 2 ? 8.0 : -8.0) * k / (std::numbers::pi * (4.0 * k * k - 1.0));
        EXPECT_NEAR(b[static_cast<std::size_t>(k - 1)], want, 1e-10) << k;
    }
}

TEST(InitialConditions, ZeroSineAndRandom)
{
    const System sys(ModelSpec::holistic(5, 5.0), Geometry::odd(8));
    EXPECT_EQ(builtin_ic("zero", sys), Vector(8, 0.0));
    const Vector s = builtin_ic("sine(2)", sys);
    const Vector x = sys.nodes();
    for (std::size_t j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(s[j], std::sin(2.0 * x[j]));
    const Vector a = builtin_ic("random(7)", sys);
    EXPECT_EQ(a, builtin_ic("random(7)", sys));
    EXPECT_NE(a, builtin_ic("random(8)", sys));
    for (double v : builtin_ic("random(3, 0.5)", sys)) EXPECT_LE(std::abs(v), 0.5);
    EXPECT_EQ(kind_of([&] { builtin_ic("gaussian", sys); }), ErrorKind::usage);
    EXPECT_EQ(kind_of([&] { builtin_ic("random()", sys); }), ErrorKind::usage);
    EXPECT_EQ(kind_of([&] { builtin_ic("sine(0)", sys); }), ErrorKind::usage);
}

TEST(RunConfig, TypedAccessAndErrors)
{
    RunConfig cfg("cont", {{"alpha-range", "0:70"}, {"grids", "32,64,128"}, {"dt", "1e-4"}, {"model", "hol:5"}});
    cfg.set("dt", "2e-4");
    EXPECT_EQ(cfg.number("dt"), 2e-4);
    EXPECT_EQ(cfg.range("alpha-range"), (std::pair<double, double>{0.0, 70.0}));
    EXPECT_EQ(cfg.integer_list("grids"), (std::vector<int>{32, 64, 128}));
    EXPECT_EQ(cfg.manifest().front().second, "cont");
    EXPECT_EQ(cfg.manifest().size(), 5u);
    EXPECT_EQ(kind_of([&] { cfg.text("seed"); }), ErrorKind::usage);
    EXPECT_EQ(kind_of([&] { cfg.range("dt"); }), ErrorKind::usage);
    EXPECT_EQ(kind_of([&] { cfg.integer("model"); }), ErrorKind::usage);
}

TEST(RunConfig, ModelGeometryCompatibility)
{
    EXPECT_EQ(kind_of([] { system_from_config(RunConfig("sim", {{"model", "gal:4"}, {"geometry", "odd:8"}})); }),
              ErrorKind::usage);
    EXPECT_EQ(kind_of([] { system_from_config(RunConfig("sim", {{"model", "hol:5"}})); }), ErrorKind::usage);
    EXPECT_THROW(system_from_config(RunConfig("sim", {{"model", "hol:6"}, {"geometry", "odd:8"}})), Error);
    EXPECT_EQ(system_from_config(RunConfig("sim", {{"model", "gal:4"}})).dim(), 4u);
    EXPECT_EQ(system_from_config(RunConfig("sim", {{"model", "cd:6"}, {"geometry", "odd:24"}}), 10.0).dim(), 24u);
}
