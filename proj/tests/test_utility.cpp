#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cohortrisk/errors.hpp"
#include "cohortrisk/rng.hpp"
#include "cohortrisk/utility.hpp"

using namespace cohortrisk;
using namespace cohortrisk::utility;

namespace {

// Brute-force midrank percentile: O(n^2) count of strictly-below and equal values.
std::vector<double> oracle_percentiles(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    std::vector<double> out;
    for (double x : v) {
        double below = 0, equal = 0;
        for (double y : v) {
            below += y < x;
            equal += y == x;
        }
        out.push_back(100.0 * (below + 0.5 * equal) / n);
    }
    return out;
}

double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto rank = [](const std::vector<double>& v) {
        std::vector<double> r;
        for (double x : v) {
            double below = 0, equal = 0;
            for (double y : v) {
                below += y < x;
                equal += y == x;
            }
            r.push_back(below + (equal + 1.0) / 2.0);
        }
        return r;
    };
    const auto ra = rank(a), rb = rank(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Percentiles, MidrankConvention) {
    EXPECT_EQ(percentile_ranks({10, 20, 30, 40}), (std::vector<double>{12.5, 37.5, 62.5, 87.5}));
    EXPECT_EQ(percentile_ranks({5, 5}), (std::vector<double>{50, 50}));
    Rng rng(1);
    std::vector<double> v(60);
    for (auto& x : v) x = static_cast<double>(rng.index(15));
    const auto got = percentile_ranks(v);
    const auto want = oracle_percentiles(v);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(RankVariance, Examples) {
    const std::vector<double> t{1, 2, 3};
    EXPECT_EQ(rank_variance(t, t), 0.0);
    EXPECT_EQ(rank_variance(t, {11, 12, 13}), 0.0);
    // swap of the first two: percentile shifts (+33.3, -33.3, 0), mean 0
    const double d = 100.0 / 3.0;
    EXPECT_NEAR(rank_variance(t, {2, 1, 3}), (d * d + d * d) / 3.0, 1e-9);
    EXPECT_THROW(rank_variance({1, 2}, {1}), ValidationError);
    EXPECT_THROW(rank_variance({1}, {1}), ValidationError);
}

TEST(Spearman, Extremes) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    EXPECT_THROW(spearman({1, 1, 1}, {1, 2, 3}), UndefinedCorrelation);
}

TEST(Spearman, MatchesOracleOnRandomVectors) {
    Rng rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> a(10), b(10);
        for (auto& x : a) x = rng.normal();
        for (auto& x : b) x = static_cast<double>(rng.index(6));
        EXPECT_NEAR(spearman(a, b), oracle_spearman(a, b), 1e-12);
    }
}

TEST(Spearman, AllPermutationsUpToSix) {
    for (int n = 2; n <= 6; ++n) {
        std::vector<double> base(n);
        std::iota(base.begin(), base.end(), 0.0);
        auto p = base;
        do {
            EXPECT_NEAR(spearman(base, p), oracle_spearman(base, p), 1e-12);
        } while (std::next_permutation(p.begin(), p.end()));
    }
}

TEST(UserErrorRate, Examples) {
    std::vector<double> t(10);
    std::iota(t.begin(), t.end(), 0.0);
    EXPECT_EQ(user_error_rate(t, t), 0.0);
    // move member 0 up two places: it shifts 20pp, the two it passes shift 10pp (not strictly more)
    auto noisy = t;
    noisy[0] = 2.5;
    EXPECT_DOUBLE_EQ(user_error_rate(t, noisy), 0.1);
    std::vector<double> rev(t.rbegin(), t.rend());
    EXPECT_EQ(user_error_rate(t, rev, 100.0), 0.0);
}

TEST(Mae, Examples) {
    const std::vector<double> t{1, 2, 3, 4};
    EXPECT_EQ(percentile_mae(t, t), 0.0);
    // ranks 12.5/37.5/62.5/87.5; swapping members 1 and 4 shifts each by 75
    EXPECT_NEAR(percentile_mae(t, {4, 2, 3, 1}), (75.0 + 0 + 0 + 75.0) / 4.0, 1e-12);
    Rng rng(3);
    std::vector<double> a(50), b(50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = a[i] + rng.normal();
    }
    const auto pa = percentile_ranks(a), pb = percentile_ranks(b);
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(pa[i] - pb[i]));
    EXPECT_LE(percentile_mae(a, b), worst);
}

TEST(Metrics, InvariantUnderIncreasingTransform) {
    Rng rng(4);
    std::vector<double> a(80), b(80);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = a[i] + 0.5 * rng.normal();
    }
    std::vector<double> ta(a.size()), tb(b.size());
    std::transform(a.begin(), a.end(), ta.begin(), [](double x) { return std::exp(3 * x) + 7; });
    std::transform(b.begin(), b.end(), tb.begin(), [](double x) { return std::exp(3 * x) + 7; });
    const auto r1 = utility_report(a, b), r2 = utility_report(ta, tb);
    EXPECT_EQ(r1.spearman_rho, r2.spearman_rho);
    EXPECT_EQ(r1.rank_variance, r2.rank_variance);
    EXPECT_EQ(r1.percentile_mae, r2.percentile_mae);
    EXPECT_EQ(r1.user_error_rate, r2.user_error_rate);
}

TEST(Simulate, MonotoneInEpsilon) {
    UtilityConfig c;
    c.seed = 5;
    double prev_rho = 2.0, prev_err = -1.0;
    for (double eps : {1.0, 0.5, 0.3, 0.1}) {
        c.epsilon = eps;
        const auto r = simulate_utility(c);
        EXPECT_LE(r.spearman_rho, prev_rho);
        EXPECT_GE(r.user_error_rate, prev_err);
        EXPECT_GE(r.spearman_rho, -1.0);
        EXPECT_LE(r.spearman_rho, 1.0);
        prev_rho = r.spearman_rho;
        prev_err = r.user_error_rate;
    }
}

TEST(Simulate, DeterministicAndValidated) {
    UtilityConfig c;
    c.repetitions = 5;
    const auto a = simulate_utility(c), b = simulate_utility(c);
    EXPECT_EQ(a.spearman_rho, b.spearman_rho);
    EXPECT_EQ(a.percentile_mae, b.percentile_mae);
    c.cohort_size = 1;
    EXPECT_THROW(simulate_utility(c), InvalidParameter);
}
