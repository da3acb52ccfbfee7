#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cohortrisk/errors.hpp"
#include "cohortrisk/quantile_sketch.hpp"
#include "cohortrisk/rng.hpp"

using namespace cohortrisk;
using namespace cohortrisk::cohort;

namespace {

// Ranks (1-based) that value v could occupy in sorted data.
std::pair<long, long> rank_range(const std::vector<double>& sorted, double v) {
    const long lo = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin() + 1;
    const long hi = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
    return {lo, hi};
}

void check_rank_error(const std::vector<double>& data, double delta) {
    QuantileSketch sk(delta);
    for (double x : data) sk.insert(x);
    std::vector<double> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(data.size());
    for (int i = 0; i <= 100; ++i) {
        const double q = i / 100.0;
        const double v = sk.query(q);
        const auto [lo, hi] = rank_range(sorted, v);
        ASSERT_LE(lo, hi) << "returned value not in data";
        const double target = std::max(1.0, std::ceil(q * n));
        const double err = std::max({0.0, lo - target, target - hi});
        EXPECT_LE(err, delta * n + 1e-9) << "q=" << q;
    }
}

}  // namespace

TEST(Sketch, RankErrorUniform) {
    Rng rng(1);
    std::vector<double> data(100000);
    for (auto& x : data) x = rng.uniform();
    check_rank_error(data, 0.01);
}

TEST(Sketch, RankErrorSortedAndReversed) {
    std::vector<double> data(20000);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(i);
    check_rank_error(data, 0.005);
    std::reverse(data.begin(), data.end());
    check_rank_error(data, 0.005);
}

TEST(Sketch, RankErrorWithTies) {
    Rng rng(2);
    std::vector<double> data(30000);
    for (auto& x : data) x = static_cast<double>(rng.index(20));
    check_rank_error(data, 0.01);
}

TEST(Sketch, SummaryIsSublinear) {
    QuantileSketch sk(0.01);
    Rng rng(3);
    for (int i = 0; i < 100000; ++i) sk.insert(rng.normal());
    EXPECT_EQ(sk.count(), 100000);
    EXPECT_LT(sk.summary_size(), 2000u);
}

TEST(Sketch, MedianOfOneToThousand) {
    QuantileSketch sk(0.01);
    for (int i = 1; i <= 1000; ++i) sk.insert(i);
    const double v = sk.query(0.5);
    EXPECT_GE(v, 490.0);
    EXPECT_LE(v, 510.0);
}

TEST(Sketch, SingleElement) {
    QuantileSketch sk(0.05);
    sk.insert(42.0);
    for (double q : {0.0, 0.3, 1.0}) EXPECT_EQ(sk.query(q), 42.0);
}

TEST(Sketch, ExtremesWithinRankError) {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> data(10000);
        for (auto& x : data) x = rng.normal();
        QuantileSketch sk(0.01);
        for (double x : data) sk.insert(x);
        std::sort(data.begin(), data.end());
        EXPECT_LE(rank_range(data, sk.query(0.0)).first, 1 + 100);
        EXPECT_GE(rank_range(data, sk.query(1.0)).second, 10000 - 100);
    }
}

TEST(Sketch, SmallExactInputs) {
    QuantileSketch sk(0.01);
    for (double x : {5.0, 1.0, 3.0}) sketch_insert(sk, x);
    EXPECT_EQ(sketch_query(sk, 0.0), 1.0);
    EXPECT_EQ(sketch_query(sk, 0.5), 3.0);
    EXPECT_EQ(sketch_query(sk, 1.0), 5.0);
}

TEST(Sketch, Errors) {
    QuantileSketch sk(0.01);
    EXPECT_THROW(sk.query(0.5), EmptySketch);
    EXPECT_THROW(sk.insert(std::nan("")), ValidationError);
    sk.insert(1.0);
    EXPECT_THROW(sk.query(1.5), InvalidParameter);
    sk.freeze();
    EXPECT_THROW(sk.insert(2.0), Error);
    EXPECT_EQ(sk.query(0.5), 1.0);
    EXPECT_THROW(QuantileSketch(0.0), InvalidParameter);
    EXPECT_THROW(QuantileSketch(0.5), InvalidParameter);
}
