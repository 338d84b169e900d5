#include "ks/errors.hpp"
#include "ks/stencil.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ks;

namespace {

PeriodicSequence impulse(std::size_t n, std::size_t at)
{
    PeriodicSequence u(n, 0.0);
    u[at] = 1.0;
    return u;
}

PeriodicSequence random_sequence(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    PeriodicSequence u(n);
    for (double& v : u) v = d(rng);
    return u;
}

double max_abs(const PeriodicSequence& u)
{
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

TEST(Stencil, WrapIndexIsEuclidean)
{
    EXPECT_EQ(wrap_index(-1, 9), 8u);
    EXPECT_EQ(wrap_index(-10, 9), 8u);
    EXPECT_EQ(wrap_index(9, 9), 0u);
    EXPECT_EQ(wrap_index(20, 9), 2u);
}

TEST(Stencil, FourthDifferenceOfImpulse)
{
    const auto d = central_diff_even(impulse(9, 2), 4);
    const double expect[9] = {1, -4, 6, -4, 1, 0, 0, 0, 0};
    for (std::size_t j = 0; j < 9; ++j) EXPECT_DOUBLE_EQ(d[j], expect[j]) << "j=" << j;
}

TEST(Stencil, DeltaMuOfImpulse)
{
    const auto d = central_diff_odd_mu(impulse(9, 2), 1);
    for (std::size_t j = 0; j < 9; ++j) {
        const double expect = j == 3 ? -0.5 : (j == 1 ? 0.5 : 0.0);
        EXPECT_DOUBLE_EQ(d[j], expect) << "j=" << j;
    }
}

TEST(Stencil, DeltaCubedMuWeights)
{
    const Stencil& s = odd_difference_mean_stencil(3);
    ASSERT_EQ(s.half_width, 2);
    const double expect[5] = {-0.5, 1.0, 0.0, -1.0, 0.5};
    for (int k = -2; k <= 2; ++k) EXPECT_DOUBLE_EQ(s.weight(k), expect[k + 2]);
}

TEST(Stencil, ConstantsAreAnnihilated)
{
    const PeriodicSequence c(17, 3.25);
    for (int a : {2, 4, 6, 8}) EXPECT_LT(max_abs(central_diff_even(c, a)), 1e-12) << a;
    for (int a : {1, 3, 5, 7}) EXPECT_LT(max_abs(central_diff_odd_mu(c, a)), 1e-12) << a;
}

TEST(Stencil, SecondDifferenceSymbol)
{
    const std::size_t n = 16;
    PeriodicSequence u(n);
    const double th = 2.0 * std::numbers::pi / n;
    for (std::size_t j = 0; j < n; ++j) u[j] = std::sin(th * static_cast<double>(j));
    const auto d = central_diff_even(u, 2);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(d[j], (2.0 * std::cos(th) - 2.0) * u[j], 1e-14);
}

TEST(Stencil, CompositionOfSecondDifferences)
{
    const auto u = random_sequence(23, 11);
    const auto twice = central_diff_even(central_diff_even(u, 2), 2);
    const auto once = central_diff_even(u, 4);
    for (std::size_t j = 0; j < u.size(); ++j) EXPECT_NEAR(twice[j], once[j], 1e-13 * max_abs(once));
}

TEST(Stencil, Linearity)
{
    const auto u = random_sequence(20, 1);
    const auto v = random_sequence(20, 2);
    PeriodicSequence w(20);
    for (std::size_t j = 0; j < 20; ++j) w[j] = 1.5 * u[j] - 0.25 * v[j];
    for (int a : {2, 4, 6, 8, 1, 3, 5, 7}) {
        auto op = [a](const PeriodicSequence& x) { return a % 2 == 0 ? central_diff_even(x, a) : central_diff_odd_mu(x, a); };
        const auto lw = op(w), lu = op(u), lv = op(v);
        for (std::size_t j = 0; j < 20; ++j) EXPECT_NEAR(lw[j], 1.5 * lu[j] - 0.25 * lv[j], 1e-13 * max_abs(lw)) << a;
    }
}

TEST(Stencil, ShiftEquivariance)
{
    const auto u = random_sequence(19, 5);
    PeriodicSequence s(19);
    for (std::size_t j = 0; j < 19; ++j) s[j] = u[wrap_index(static_cast<long>(j) + 3, 19)];
    for (int a : {2, 4, 6, 8, 1, 3, 5, 7}) {
        auto op = [a](const PeriodicSequence& x) { return a % 2 == 0 ? central_diff_even(x, a) : central_diff_odd_mu(x, a); };
        const auto lu = op(u), ls = op(s);
        for (std::size_t j = 0; j < 19; ++j) EXPECT_EQ(ls[j], lu[wrap_index(static_cast<long>(j) + 3, 19)]) << a;
    }
}

TEST(Stencil, WeightSymmetries)
{
    for (int a : {2, 4, 6, 8}) {
        const Stencil& s = even_difference_stencil(a);
        double sum = 0.0;
        for (double w : s.weights) sum += w;
        EXPECT_EQ(sum, 0.0) << a;
    }
    for (int a : {1, 3, 5, 7}) {
        const Stencil& s = odd_difference_mean_stencil(a);
        for (int k = 0; k <= s.half_width; ++k) EXPECT_EQ(s.weight(k), -s.weight(-k)) << a;
    }
}

TEST(Stencil, InvalidOrdersAreRejected)
{
    const PeriodicSequence u(12, 0.0);
    for (int a : {3, 10, 0}) {
        try {
            central_diff_even(u, a);
            ADD_FAILURE() << "accepted a = " << a;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::invalid_operator);
        }
    }
    EXPECT_THROW(central_diff_odd_mu(u, 2), Error);
    EXPECT_THROW(central_diff_odd_mu(u, 9), Error);
}

TEST(Stencil, TooShortSequenceIsRejected)
{
    const PeriodicSequence u(8, 0.0); // delta^8 needs at least 10 points
    try {
        central_diff_even(u, 8);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::grid_too_coarse);
    }
}
