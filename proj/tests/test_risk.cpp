#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cohortrisk/errors.hpp"
#include "cohortrisk/risk.hpp"

using namespace cohortrisk;
using namespace cohortrisk::risk;

namespace {

std::vector<double> one_to_hundred() {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    return v;
}

SimulationConfig small_config() {
    SimulationConfig c;
    c.k_min = 50;
    c.horizon = 30;
    c.n_sim = 200;
    c.seed = 11;
    return c;
}

}  // namespace

TEST(PVar, OrderStatistic) {
    EXPECT_EQ(p_var(one_to_hundred(), 0.95), 95.0);
    EXPECT_EQ(p_var(one_to_hundred(), 0.99), 99.0);
    EXPECT_EQ(p_var(one_to_hundred(), 0.5), 50.0);
    auto shuffled = one_to_hundred();
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(p_var(shuffled, 0.95), 95.0);
    for (double a : {0.1, 0.5, 0.95, 0.999}) EXPECT_EQ(p_var(std::vector<double>(37, 2.5), a), 2.5);
    EXPECT_THROW(p_var({}, 0.95), InvalidParameter);
    EXPECT_THROW(p_var({1.0}, 1.0), InvalidParameter);
}

TEST(PVar, BruteForceConvention) {
    Rng rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> v(1 + rng.index(300));
        for (auto& x : v) x = rng.normal();
        const double alpha = 0.01 + 0.98 * rng.uniform();
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(v.size())));
        EXPECT_EQ(p_var(v, alpha), sorted[std::max<std::size_t>(k, 1) - 1]);
    }
}

TEST(CPVar, TailMean) {
    EXPECT_EQ(cp_var(one_to_hundred(), 0.95), 98.0);
    const auto flat = cp_var_detail(std::vector<double>(10, 3.0), 0.95);
    EXPECT_EQ(flat.value, 3.0);
    EXPECT_TRUE(flat.degenerate_tail);
    EXPECT_FALSE(cp_var_detail(one_to_hundred(), 0.95).degenerate_tail);
}

TEST(VaR, ExponentialSample) {
    Rng rng(2);
    std::vector<double> v(100000);
    for (auto& x : v) x = -std::log(rng.uniform());
    EXPECT_NEAR(p_var(v, 0.95), -std::log(0.05), 0.05);
    EXPECT_NEAR(cp_var(v, 0.95), 1.0 - std::log(0.05), 0.05);
}

TEST(Report, Examples) {
    const auto r = risk_report(one_to_hundred());
    EXPECT_EQ(r.p_var_95, 95.0);
    EXPECT_EQ(r.p_var_99, 99.0);
    EXPECT_EQ(r.cp_var_95, 98.0);
    EXPECT_EQ(r.max_loss, 100.0);
    EXPECT_EQ(r.n_sim, 100);
    const auto one = risk_report(std::vector<double>{1.7});
    EXPECT_EQ(one.p_var_95, 1.7);
    EXPECT_EQ(one.p_var_99, 1.7);
    EXPECT_EQ(one.cp_var_95, 1.7);
    EXPECT_EQ(one.max_loss, 1.7);
}

TEST(Report, OrderingOnRandomSamples) {
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> v(1 + rng.index(500));
        for (auto& x : v) x = rng.normal() * 3.0;
        const auto r = risk_report(v);
        EXPECT_LE(r.p_var_95, r.p_var_99);
        EXPECT_LE(r.p_var_99, r.max_loss);
        EXPECT_GE(r.cp_var_95, r.p_var_95);
    }
}

TEST(Query, IndependentAtRhoZero) {
    Rng rng(4);
    const int M = 5, n = 100000;
    std::vector<std::vector<double>> table(M, std::vector<double>(M, 0.0));
    Query prev = generate_query(0, nullptr, 0.0, M, rng);
    for (int i = 1; i <= n; ++i) {
        const Query q = generate_query(i, &prev, 0.0, M, rng);
        table[prev.metric][q.metric] += 1.0;
        prev = q;
    }
    double chi2 = 0.0;
    std::vector<double> row(M, 0.0), col(M, 0.0);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            row[a] += table[a][b];
            col[b] += table[a][b];
        }
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            const double e = row[a] * col[b] / n;
            chi2 += (table[a][b] - e) * (table[a][b] - e) / e;
        }
    // 16 degrees of freedom, upper 1% point is 32.0
    EXPECT_LT(chi2, 32.0);
}

TEST(Query, RepeatRate) {
    Rng rng(5);
    const int M = 10, n = 100000;
    Query prev = generate_query(0, nullptr, 0.99, M, rng);
    int repeats = 0;
    for (int i = 1; i <= n; ++i) {
        const Query q = generate_query(i, &prev, 0.99, M, rng);
        repeats += q.metric == prev.metric;
        prev = q;
    }
    // a fresh draw can also land on the same metric: 0.99 + 0.01 / 10
    EXPECT_NEAR(static_cast<double>(repeats) / n, 0.99, 0.01);
    EXPECT_THROW(generate_query(0, nullptr, 1.0, M, rng), InvalidParameter);
}

TEST(Simulation, Deterministic) {
    const auto cfg = small_config();
    const auto a = run_simulation(cfg, 1);
    const auto b = run_simulation(cfg, 3);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].loss, b[i].loss);
        EXPECT_EQ(a[i].cohort_size, b[i].cohort_size);
        EXPECT_EQ(a[i].flag, b[i].flag);
    }
    const auto single = simulate_run(cfg, 17);
    EXPECT_EQ(single.loss, a[17].loss);
}

TEST(Simulation, PermutationInvariantReport) {
    const auto cfg = small_config();
    auto runs = run_simulation(cfg, 1);
    const auto r1 = risk_report(runs);
    std::reverse(runs.begin(), runs.end());
    const auto r2 = risk_report(runs);
    EXPECT_EQ(r1.p_var_95, r2.p_var_95);
    EXPECT_EQ(r1.p_var_99, r2.p_var_99);
    EXPECT_EQ(r1.cp_var_95, r2.cp_var_95);
    EXPECT_EQ(r1.max_loss, r2.max_loss);
}

TEST(Simulation, TrajectoryShape) {
    const auto cfg = small_config();
    for (const auto& t : run_simulation(cfg, 1)) {
        ASSERT_EQ(t.loss.size(), static_cast<std::size_t>(cfg.horizon));
        EXPECT_EQ(t.terminal, t.loss.back());
        EXPECT_LE(std::abs(t.terminal), t.epsilon_spent + 1e-9);
        for (std::size_t d = 0; d < t.loss.size(); ++d) {
            EXPECT_GE(t.cohort_size[d], 1);
            if (t.flag[d] & kFlagSuppressed) EXPECT_LT(t.cohort_size[d], cfg.k_min);
        }
    }
}

TEST(Simulation, CompositionCeiling) {
    auto cfg = small_config();
    cfg.epsilon = 1.0;
    cfg.known_fraction = 0.9;
    cfg.queries_per_day = 3;
    for (const auto& t : run_simulation(cfg, 1)) {
        EXPECT_LE(std::abs(t.terminal), t.epsilon_spent + 1e-9);
        EXPECT_LE(t.epsilon_spent, cfg.epsilon * 3 * cfg.horizon + 1e-9);
    }
}

TEST(Simulation, ZeroHorizon) {
    auto cfg = small_config();
    cfg.horizon = 0;
    for (const auto& t : run_simulation(cfg, 1)) {
        EXPECT_TRUE(t.loss.empty());
        EXPECT_EQ(t.terminal, 0.0);
    }
}

TEST(Simulation, VanishingEpsilon) {
    auto cfg = small_config();
    cfg.epsilon = 1e-6;
    cfg.n_sim = 10000;
    cfg.horizon = 10;
    EXPECT_LT(risk_report(run_simulation(cfg)).p_var_95, 0.05);
}

TEST(Simulation, GateSuppressesSmallCohorts) {
    auto cfg = small_config();
    cfg.k_min = 100;
    cfg.k_max = 100;
    cfg.lambda_join = 0.0;
    cfg.p_churn = 0.2;
    cfg.horizon = 20;
    cfg.n_sim = 20;
    for (const auto& t : run_simulation(cfg, 1)) {
        // every day the cohort is below k_min: nothing released, belief untouched
        EXPECT_EQ(t.releases, 0);
        EXPECT_EQ(t.terminal, 0.0);
    }
}

TEST(Simulation, FullChurnIsDegenerate) {
    auto cfg = small_config();
    cfg.p_churn = 1.0;
    cfg.lambda_join = 0.0;
    cfg.gate = false;
    cfg.n_sim = 10;
    const auto runs = run_simulation(cfg, 1);
    for (const auto& t : runs) {
        EXPECT_TRUE(t.degenerate);
        EXPECT_TRUE(t.flag.back() & kFlagDegenerate);
        EXPECT_TRUE(std::isfinite(t.terminal));
    }
    EXPECT_EQ(risk_report(runs).degenerate_runs, 10);
}

TEST(Simulation, ConfigValidation) {
    SimulationConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.effective_k_max(), 1000);
    c.k_max = 50;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = {};
    c.rho = 1.0;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = {};
    c.n_sim = 0;
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(PVarByDay, MatchesPerDayOrderStatistic) {
    const auto cfg = small_config();
    const auto runs = run_simulation(cfg, 1);
    const auto curve = p_var_by_day(runs, 0.95);
    ASSERT_EQ(curve.size(), static_cast<std::size_t>(cfg.horizon));
    std::vector<double> last;
    for (const auto& t : runs) last.push_back(t.terminal);
    EXPECT_EQ(curve.back(), p_var(last, 0.95));
}

TEST(Csv, RoundTrip) {
    const auto runs = run_simulation(small_config(), 1);
    std::stringstream ss;
    write_trajectories_csv(ss, runs);
    const std::string first = ss.str();
    EXPECT_EQ(first.substr(0, first.find('\n')), "run,t,loss,cohort_size,flag");
    const auto back = read_trajectories_csv(ss);
    ASSERT_EQ(back.size(), runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        EXPECT_EQ(back[i].loss, runs[i].loss);
        EXPECT_EQ(back[i].cohort_size, runs[i].cohort_size);
        EXPECT_EQ(back[i].flag, runs[i].flag);
    }
    std::stringstream again;
    write_trajectories_csv(again, back);
    EXPECT_EQ(again.str(), first);
}

TEST(Csv, RejectsBadInput) {
    std::stringstream header("a,b,c\n");
    EXPECT_THROW(read_trajectories_csv(header), ValidationError);
    std::stringstream bad("run,t,loss,cohort_size,flag\n0,1,abc,10,0\n");
    EXPECT_THROW(read_trajectories_csv(bad), ValidationError);
}
