#include "ks/analysis.hpp"
#include "ks/tables.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ks;

namespace {

Vector sampled(std::size_t n, double shift, const std::function<double(double)>& f)
{
    Vector u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = f(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n) + shift);
    return u;
}

double parseval_gap(std::span<const double> u)
{
    const std::size_t n = u.size();
    const auto p = dft_power(u);
    const auto full = dft(u);
    const double inv = 1.0 / static_cast<double>(n);
    double total = std::norm(full[0] * inv) + (n % 2 == 0 ? std::norm(full[n / 2] * inv) : 0.0);
    for (double v : p.power) total += 2.0 * v;
    if (n % 2 == 1) total += 2.0 * std::norm(full[n / 2] * inv);
    double mean_sq = 0.0;
    for (double v : u) mean_sq += v * v;
    return std::abs(total - mean_sq / static_cast<double>(n));
}

} // namespace

TEST(Spectrum, SingleSineMode)
{
    const auto p = dft_power(sampled(16, 0.0, [](double x) { return std::sin(x); }));
    ASSERT_EQ(p.wavenumbers.size(), 7u);
    EXPECT_EQ(p.wavenumbers.front(), 1);
    EXPECT_EQ(p.wavenumbers.back(), 7);
    EXPECT_NEAR(p.power[0], 0.25, 1e-15);
    for (std::size_t k = 1; k < p.power.size(); ++k) EXPECT_NEAR(p.power[k], 0.0, 1e-30);
}

TEST(Spectrum, ConstantHasNoPower)
{
    const auto p = dft_power(Vector(12, 2.5));
    for (double v : p.power) EXPECT_NEAR(v, 0.0, 1e-28);
    EXPECT_THROW(dft_power(Vector(3, 1.0)), Error);
}

TEST(Spectrum, Parseval)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (std::size_t n : {8u, 12u, 15u, 48u, 256u}) {
        Vector u(n);
        for (double& v : u) v = d(rng);
        EXPECT_LT(parseval_gap(u), 1e-12) << n;
    }
}

TEST(Spectrum, TranslationInvariant)
{
    auto f = [](double x) { return std::sin(x) + 0.3 * std::cos(2.0 * x) - 0.1 * std::sin(5.0 * x); };
    const Vector u = sampled(24, 0.0, f);
    Vector r(24);
    for (std::size_t j = 0; j < 24; ++j) r[j] = u[(j + 7) % 24];
    const auto a = dft_power(u), b = dft_power(r);
    for (std::size_t k = 0; k < a.power.size(); ++k) EXPECT_NEAR(a.power[k], b.power[k], 1e-12);
}

TEST(Spectrum, TimeAverageOfASteadyState)
{
    Trajectory traj;
    traj.spec = ModelSpec::holistic(5, 20.0);
    traj.geometry = Geometry::full(16);
    const Vector u = sampled(16, 0.3, [](double x) { return std::sin(x) + 0.5 * std::cos(3.0 * x); });
    for (int i = 0; i <= 20; ++i) {
        traj.times.push_back(0.1 * i);
        traj.states.push_back(u);
    }
    const auto avg = time_averaged_spectrum(traj, 0.5);
    const auto one = dft_power(u);
    EXPECT_EQ(avg.samples_used, 15);
    EXPECT_EQ(avg.transient_skipped, 0.5);
    for (std::size_t k = 0; k < one.power.size(); ++k) EXPECT_NEAR(avg.power[k], one.power[k], 1e-15);
}

TEST(Spectrum, NeedsSamplesAfterTheTransient)
{
    Trajectory traj;
    traj.spec = ModelSpec::holistic(5, 20.0);
    traj.geometry = Geometry::full(16);
    traj.times = {0.0, 1.0};
    traj.states = {Vector(16, 0.0), Vector(16, 0.0)};
    try {
        time_averaged_spectrum(traj, 1.0);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
    }
}

TEST(Spectrum, OddGeometriesUseTheFullGrid)
{
    Trajectory traj;
    traj.spec = ModelSpec::holistic(5, 20.0);
    traj.geometry = Geometry::odd(8);
    traj.times = {1.0};
    traj.states = {Vector{1, 2, 3, 4, 5, 6, 7, 8}};
    EXPECT_EQ(time_averaged_spectrum(traj, 0.0).power.size(), 7u);
}

TEST(FitOrder, RecoversPowerLaws)
{
    const std::vector<double> h{0.4, 0.2, 0.1, 0.05};
    std::vector<double> e;
    for (double v : h) e.push_back(3.0 * std::pow(v, 4));
    EXPECT_NEAR(fit_order(h, e), 4.0, 1e-12);
    EXPECT_THROW(fit_order(std::vector<double>{0.1}, std::vector<double>{1.0}), Error);
}

TEST(Consistency, LinearOrdersAtZeroAlpha)
{
    const struct {
        ModelSpec spec;
        double order;
    } cases[] = {{ModelSpec::holistic(3, 0.0), 2.0}, {ModelSpec::holistic(4, 0.0), 4.0}, {ModelSpec::holistic(5, 0.0), 6.0}};
    for (const auto& c : cases) {
        const auto r = consistency_order(c.spec, {32, 64, 128, 256});
        EXPECT_NEAR(r.fitted_order, c.order, 0.3) << c.spec.selector();
        EXPECT_TRUE(r.monotone);
    }
}

TEST(Consistency, RejectsBadGrids)
{
    EXPECT_THROW(consistency_order(ModelSpec::holistic(5, 7.0), {64}), Error);
    EXPECT_THROW(consistency_order(ModelSpec::holistic(5, 7.0), {64, 32}), Error);
    EXPECT_THROW(consistency_order(ModelSpec::holistic(5, 7.0), {6, 32}), Error);
    EXPECT_THROW(consistency_order(ModelSpec::galerkin(4, 7.0), {32, 64}), Error);
}

TEST(ProfileCompare, IdenticalAndDownsampled)
{
    auto f = [](double x) { return std::sin(x) + 0.3 * std::cos(2.0 * x); };
    const GridField a = GridField::on_period(sampled(16, 0.0, f));
    EXPECT_EQ(profile_compare(a, a), 0.0);
    const GridField fine = GridField::on_period(sampled(64, 0.0, f));
    EXPECT_LT(profile_compare(a, fine), 1e-12);

    // cell-centred samples against a nodal reference
    const double h = 2.0 * std::numbers::pi / 16.0;
    GridField c = GridField::on_period(sampled(16, 0.5 * h, f));
    c.offset = 0.5;
    EXPECT_LT(profile_compare(c, fine), 1e-12);
}

TEST(ProfileCompare, RejectsMismatchedDomains)
{
    const GridField a = GridField::on_period(Vector(16, 1.0));
    const GridField b = GridField::on_period(Vector(32, 1.0), 4.0);
    EXPECT_THROW(profile_compare(a, b), Error);
    EXPECT_THROW(profile_compare(GridField::on_period(Vector(32, 1.0)), a), Error);
}

TEST(ProfileCompare, Holistic5SteadyStateBeatsCentered6)
{
    const System reference(ModelSpec::centered(6, 0.0), Geometry::odd(24));
    const SteadyState ref = branch_state(reference, "bimodal-", 20.0);
    const GridField fine = full_field(reference, ref.x);
    double err[2];
    int i = 0;
    for (const ModelSpec& spec : {ModelSpec::holistic(5, 0.0), ModelSpec::centered(6, 0.0)}) {
        const System coarse(spec, Geometry::odd(8));
        const SteadyState s = branch_state(coarse, "bimodal-", 20.0);
        err[i++] = profile_compare(full_field(coarse, s.x), fine);
    }
    EXPECT_LT(err[0], err[1]);
}
