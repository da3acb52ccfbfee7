#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cohortrisk/composition.hpp"
#include "cohortrisk/errors.hpp"
#include "cohortrisk/rng.hpp"

using namespace cohortrisk;
using namespace cohortrisk::accounting;

TEST(Basic, Sums) {
    EXPECT_NEAR(basic_compose({0.1, 0.1, 0.1}), 0.3, 1e-15);
    EXPECT_EQ(basic_compose({}), 0.0);
    EXPECT_NEAR(basic_compose(std::vector<double>(100, 0.01)), 1.0, 1e-12);
    EXPECT_THROW(basic_compose({0.1, -0.1}), InvalidParameter);
}

TEST(Advanced, KnownValues) {
    EXPECT_NEAR(advanced_compose(0.1, 1, 1e-5), 0.4903, 1e-4);
    const double v = advanced_compose(0.01, 10000, 1e-6);
    EXPECT_GT(v, 6.2);
    EXPECT_LT(v, 6.3);
    EXPECT_LT(v, basic_compose(std::vector<double>(10000, 0.01)));
    EXPECT_LT(advanced_compose(1e-12, 1, 1e-5), 1e-10);
}

TEST(Advanced, RejectsBadDelta) {
    EXPECT_THROW(advanced_compose(0.1, 10, 0.0), InvalidParameter);
    EXPECT_THROW(advanced_compose(0.1, 10, 1.0), InvalidParameter);
    EXPECT_THROW(advanced_compose(0.1, 0, 0.5), InvalidParameter);
}

TEST(Advanced, TighterThanBasicOnGrid) {
    for (double eps : {0.001, 0.01}) {
        for (long n : {1000L, 10000L}) {
            EXPECT_LT(advanced_compose(eps, n, 1e-6), n * eps) << eps << " " << n;
        }
    }
}

TEST(Parallel, MaxAndDisjointness) {
    EXPECT_EQ(parallel_compose(std::vector<double>{0.1, 0.5, 0.3}), 0.5);
    EXPECT_EQ(parallel_compose(std::vector<double>{0.2}), 0.2);
    EXPECT_EQ(parallel_compose(std::vector<double>{}), 0.0);
    EXPECT_EQ(parallel_compose(std::vector<CohortQuery>{{"a", 0.1}, {"b", 0.4}}), 0.4);
    EXPECT_THROW(parallel_compose(std::vector<CohortQuery>{{"a", 0.1}, {"a", 0.4}}), NonDisjoint);
}

TEST(Parallel, AccountDefaultsToSequential) {
    std::vector<CohortQuery> q{{"a", 0.1}, {"b", 0.2}};
    EXPECT_NEAR(account(q, false), 0.3, 1e-15);
    EXPECT_EQ(account(q, true), 0.2);
}

TEST(Renyi, ClosedForms) {
    EXPECT_NEAR(renyi_compose({0.3}), 0.3, 1e-15);
    EXPECT_NEAR(renyi_compose({0.1, 0.1}, 32), 0.1 + std::log(2.0) / 32, 1e-12);
    for (int k : {1, 2, 5, 100}) {
        EXPECT_NEAR(renyi_compose(std::vector<double>(k, 0.05), 32), 0.05 + std::log(k) / 32, 1e-12);
    }
    EXPECT_THROW(renyi_compose({0.1}, 1.0), InvalidParameter);
    EXPECT_EQ(kDefaultRenyiOrder, 32.0);
}

TEST(Renyi, StableForLargeArguments) {
    // exp(32 * 50) overflows a double; log-sum-exp must not.
    EXPECT_NEAR(renyi_compose({50.0, 50.0}), 50.0 + std::log(2.0) / 32, 1e-12);
}

TEST(GaussianApprox, Moments) {
    const auto g = gaussian_loss_approx(100, 0.1);
    EXPECT_NEAR(g.mean, 10.0, 1e-12);
    EXPECT_NEAR(g.variance, 1.0, 1e-12);
    const auto one = gaussian_loss_approx(1, 0.3);
    EXPECT_EQ(one.mean, 0.3);
    EXPECT_NEAR(one.variance, 0.09, 1e-15);
    EXPECT_THROW(gaussian_loss_approx(0, 0.1), InvalidParameter);
}

TEST(Ledger, CohortDayLimit) {
    CompositionLedger ledger;
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(ledger.charge("u" + std::to_string(i), "c", 0.01, 0));
    const auto r = ledger.charge("u99", "c", 0.01, 0);
    EXPECT_FALSE(r.accepted);
    ASSERT_TRUE(r.rejected_tier);
    EXPECT_EQ(*r.rejected_tier, Tier::per_cohort_day);
    // next day resets the cohort-day window
    EXPECT_TRUE(ledger.charge("u99", "c", 0.01, 1));
}

TEST(Ledger, PerQueryLimit) {
    CompositionLedger ledger;
    const auto r = ledger.charge("u", "c", 0.02, 0);
    EXPECT_FALSE(r);
    EXPECT_EQ(*r.rejected_tier, Tier::per_query);
    EXPECT_EQ(ledger.size(), 0u);
    EXPECT_EQ(ledger.rejections().size(), 1u);
    EXPECT_TRUE(ledger.charge("u", "c", 0.01, 0));
}

TEST(Ledger, UserMonthLimit) {
    CompositionLedger ledger;
    // 100 charges of 0.01 across distinct cohorts within one 30-day window
    for (int i = 0; i < 100; ++i) ASSERT_TRUE(ledger.charge("u", "c" + std::to_string(i), 0.01, i % 30));
    const auto r = ledger.charge("u", "other", 0.01, 29);
    EXPECT_EQ(*r.rejected_tier, Tier::per_user_month);
    EXPECT_TRUE(ledger.charge("u", "other", 0.01, 30));
    EXPECT_NEAR(ledger.user_month_total("u", 0), 1.0, 1e-12);
}

TEST(Ledger, MultiCohortUserLoss) {
    CompositionLedger ledger;
    for (int d = 0; d < 3; ++d) {
        ledger.charge("u", "a", 0.01, d);
        ledger.charge("u", "b", 0.01, d);
    }
    EXPECT_NEAR(ledger.multi_cohort_user_loss("u", 2), 0.06, 1e-12);
    EXPECT_NEAR(ledger.multi_cohort_user_loss("u", 0), 0.02, 1e-12);
    EXPECT_EQ(ledger.multi_cohort_user_loss("nobody", 10), 0.0);
    double prev = 0.0;
    for (int d = 0; d < 5; ++d) {
        const double v = ledger.multi_cohort_user_loss("u", d);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Ledger, RejectionLeavesSumsUnchanged) {
    CompositionLedger ledger;
    Rng rng(17);
    for (int i = 0; i < 5000; ++i) {
        const std::string user = "u" + std::to_string(rng.index(5));
        const std::string cohort = "c" + std::to_string(rng.index(4));
        const long day = static_cast<long>(rng.index(60));
        const double eps = (1 + rng.index(3)) * 0.005;
        const double before_c = ledger.cohort_day_total(cohort, day);
        const double before_u = ledger.user_month_total(user, day);
        const auto n = ledger.size();
        if (!ledger.charge(user, cohort, eps, day)) {
            EXPECT_EQ(ledger.size(), n);
            EXPECT_EQ(ledger.cohort_day_total(cohort, day), before_c);
            EXPECT_EQ(ledger.user_month_total(user, day), before_u);
        }
    }
}

TEST(Ledger, NdjsonRoundTrip) {
    CompositionLedger a;
    a.charge("u1", "c1", 0.01, 0);
    a.charge("u2", "c1", 0.005, 3);
    a.charge("u1", "c2", 0.01, 40);
    std::stringstream ss;
    a.export_ndjson(ss);
    CompositionLedger b;
    b.import_ndjson(ss);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b.multi_cohort_user_loss("u1", 100), a.multi_cohort_user_loss("u1", 100));
    std::stringstream out_a, out_b;
    a.export_ndjson(out_a);
    b.export_ndjson(out_b);
    EXPECT_EQ(out_a.str(), out_b.str());
}

TEST(Ledger, ImportRejectsOverBudgetReplay) {
    std::stringstream ss("{\"day\":0,\"user\":\"u\",\"cohort\":\"c\",\"epsilon\":0.5}\n");
    CompositionLedger b;
    EXPECT_THROW(b.import_ndjson(ss), ValidationError);
    std::stringstream bad("{not json\n");
    EXPECT_THROW(b.import_ndjson(bad), ValidationError);
}
