#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "simstudy/error.hpp"
#include "simstudy/seeding.hpp"
#include "simstudy/study_var.hpp"
#include "support.hpp"

using namespace simstudy;
using namespace simstudy::var;

namespace {

double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y)
{
    double conc = 0, disc = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double a = (x[i] > x[j]) - (x[i] < x[j]);
            const double b = (y[i] > y[j]) - (y[i] < y[j]);
            if (a == 0 && b == 0) continue;
            if (a == 0) {
                ++tx;
            } else if (b == 0) {
                ++ty;
            } else if (a == b) {
                ++conc;
            } else {
                ++disc;
            }
        }
    return (conc - disc) / std::sqrt((conc + disc + tx) * (conc + disc + ty));
}

}  // namespace

TEST(Qnorm, ReferenceValues)
{
    const std::pair<double, double> ref[] = {
        {1e-300, -37.0470962993612},   {1e-20, -9.262340089798409},   {1e-10, -6.361340902404056},
        {0.001, -3.090232306167813},   {0.02425, -1.972961051311885}, {0.1, -1.2815515655446004},
        {0.3, -0.5244005127080409},    {0.5, 0.0},                    {0.75, 0.6744897501960817},
        {0.975, 1.959963984540054},    {0.9999999, 5.199337582290661}};
    for (auto [p, q] : ref) EXPECT_NEAR(qnorm(p), q, 1e-14 * std::max(1.0, std::abs(q))) << p;
    EXPECT_EQ(qnorm(0), -INFINITY);
    EXPECT_EQ(qnorm(1), INFINITY);
    EXPECT_TRUE(std::isnan(qnorm(1.5)));
}

TEST(Itau, InvertsKendallsTau)
{
    EXPECT_DOUBLE_EQ(itau(Family::Clayton, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(itau(Family::Clayton, 0.25), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(itau(Family::Gumbel, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(itau(Family::Gumbel, 0.25), 4.0 / 3.0);
    EXPECT_THROW(itau(Family::Gumbel, 1.0), ConfigError);
    EXPECT_THROW(itau(Family::Clayton, 0.0), ConfigError);
    EXPECT_EQ(parse_family("Gumbel"), Family::Gumbel);
    EXPECT_THROW(parse_family("Frank"), ConfigError);
}

TEST(Quantile, Type7Oracle)
{
    EXPECT_NEAR(quantile_type7({1, 2, 3, 4}, 0.95), 3.85, 1e-12);
    EXPECT_EQ(quantile_type7({4, 1, 3, 2}, 0.0), 1.0);
    EXPECT_EQ(quantile_type7({4, 1, 3, 2}, 1.0), 4.0);
    EXPECT_EQ(quantile_type7({7}, 0.3), 7.0);
    EXPECT_NEAR(quantile_type7({10, 20, 30}, 0.25), 15.0, 1e-12);
    EXPECT_THROW(quantile_type7({}, 0.5), Error);
    EXPECT_THROW(quantile_type7({1}, 1.5), Error);
    std::vector<double> s{1, 2, 3, 4, 5};
    const std::vector<double> p{0.1, 0.5, 0.9};
    EXPECT_EQ(quantiles_type7_sorted(s, p), (std::vector<double>{1.4, 3.0, 4.6}));
}

TEST(RobustStats, MedianMadHuber)
{
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_NEAR(mad({1, 2, 3, 4, 5}), 1.4826, 1e-12);
    EXPECT_EQ(huber_mean({2, 2, 2, 9}), 2.0);  // zero MAD gives the median
    const double h = huber_mean({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 1000});
    EXPECT_GT(h, 3.5);
    EXPECT_LT(h, 6.5);
    const double sym = huber_mean({-3, -1, 0, 1, 3});
    EXPECT_NEAR(sym, 0.0, 1e-12);
}

TEST(Kendall, MatchesBruteForceWithAndWithoutTies)
{
    std::mt19937 gen(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + gen() % 60;
        const bool ties = trial % 2;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = ties ? double(gen() % 5) : double(gen());
            y[i] = ties ? double(gen() % 4) : double(gen());
        }
        const double b = brute_tau_b(x, y);
        if (std::isnan(b)) continue;
        EXPECT_NEAR(kendall_tau(x, y), b, 1e-12) << "n=" << n;
    }
    const std::vector<double> a{1, 2, 3}, r{3, 2, 1};
    EXPECT_DOUBLE_EQ(kendall_tau(a, a), 1.0);
    EXPECT_DOUBLE_EQ(kendall_tau(a, r), -1.0);
}

TEST(Copula, SamplesAreUniformWithTheRightDependence)
{
    Rng rng(derive_from_integer(17));
    for (Family f : {Family::Clayton, Family::Gumbel}) {
        const std::size_t n = 3000;
        const auto u = sample_copula(f, itau(f, 0.5), n, 2, rng);
        ASSERT_EQ(u.size(), 2 * n);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = u[2 * i];
            b[i] = u[2 * i + 1];
            ASSERT_GT(a[i], 0.0);
            ASSERT_LT(a[i], 1.0);
        }
        EXPECT_NEAR(kendall_tau(a, b), 0.5, 0.04) << to_string(f);
        EXPECT_LT(ks_uniform(a), 1.628 / std::sqrt(double(n)));
    }
}

TEST(Copula, FrailtyVariates)
{
    Rng rng(derive_from_integer(99));
    const int n = 40000;
    for (double shape : {0.3, 1.0, 2.5}) {
        double sum = 0;
        for (int i = 0; i < n; ++i) sum += rgamma(shape, rng);
        EXPECT_NEAR(sum / n, shape, 4 * std::sqrt(shape / n)) << shape;
    }
    for (double alpha : {0.5, 0.75}) {
        double lt = 0;
        for (int i = 0; i < n; ++i) lt += std::exp(-rstable(alpha, rng));
        EXPECT_NEAR(lt / n, std::exp(-1.0), 0.01) << alpha;
    }
    EXPECT_EQ(rstable(1.0, rng), 1.0);
    EXPECT_THROW(rgamma(0, rng), ConfigError);
}

TEST(Losses, RecycleWeightsAndUseTheQuantile)
{
    const std::vector<double> u{0.5, 0.975, 0.5, 0.975, 0.5, 0.5};
    const std::vector<double> w{1, 2};
    const auto l = losses(u, 2, 3, qnorm, w);
    const double e = std::expm1(qnorm(0.975));
    ASSERT_EQ(l.size(), 2u);
    EXPECT_NEAR(l[0], -(0 + 2 * e + 0), 1e-12);
    EXPECT_NEAR(l[1], -(e + 0 + 0), 1e-12);
    EXPECT_THROW(losses(u, 4, 2, qnorm, w), Error);
}

TEST(VarStudy, EstimatesAreOrderedInAlpha)
{
    StudyArgs a;
    a.n = 256;
    a.d = 20;
    a.family = Family::Gumbel;
    a.tau = 0.5;
    a.alpha = {0.95, 0.99, 0.999};
    Rng rng(derive_from_integer(1));
    const auto v = do_one_var(a, rng);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_LE(v[0], v[1]);
    EXPECT_LE(v[1], v[2]);
    a.alpha = {0.99, 0.95};
    EXPECT_THROW(a.check(), ConfigError);
}

TEST(VarStudy, ConfigHandling)
{
    auto vl = simstudy::testing::var_study_varlist().with_n_sim(1);
    RunOptions o;
    const auto s = store_or_throw(run_study(vl, var_copula_study(), o));
    for (const auto& r : s.records) {
        ASSERT_TRUE(r.value) << r.error->message;
        EXPECT_EQ(r.value->dim_names(), std::vector<std::string>{"alpha"});
    }

    const auto g = store_or_throw(run_study(vl.with_type("alpha", VarType::Grid), var_copula_study(), o));
    for (const auto& r : g.records) EXPECT_EQ(r.value->rank(), 0u);

    VarList bad;
    bad.add(simstudy::testing::grid_var("n", {64}));
    bad.add(simstudy::testing::grid_var("d", {5}));
    bad.add(simstudy::testing::grid_var("family", {"Frank"}));
    bad.add(simstudy::testing::grid_var("tau", {0.5}));
    bad.add(simstudy::testing::inner_var("alpha", {0.9}));
    const auto b = store_or_throw(run_study(bad, var_copula_study(), o));
    ASSERT_TRUE(b.records[0].error);
    EXPECT_NE(b.records[0].error->message.find("Frank"), std::string::npos);
}

TEST(FirstUniform, ReturnsTheFirstDraw)
{
    VarList vl;
    vl.add(simstudy::testing::n_var(3));
    vl.add(simstudy::testing::grid_var("g", {1, 2}));
    const auto s = store_or_throw(run_study(vl, first_uniform_study()));
    for (std::size_t rep = 1; rep <= 3; ++rep) {
        Rng rng(derive_from_integer(std::int64_t(rep)));
        const double u = rng.uniform();
        EXPECT_EQ(s.records[2 * (rep - 1)].value->data()[0], u);
        EXPECT_EQ(s.records[2 * (rep - 1) + 1].value->data()[0], u);
    }
}
