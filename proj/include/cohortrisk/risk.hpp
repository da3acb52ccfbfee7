#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortrisk/rng.hpp"

namespace cohortrisk::risk {

// Members carry a persistent trait per metric; a query counts members whose
// trait + daily shock + noise is positive.
struct MetricModel {
    int metrics = 10;
    double trait_sd = 1.0;
    double noise_sd = 0.5;
    double shock_sd = 0.0;   // day effect shared by the other members
    double target_sd = 1.0;  // target's own persistent trait
    double threshold = 0.0;  // indicator is 1 when the latent value exceeds this
    // AR(1) coefficient per day for member traits; 1 keeps traits fixed.
    double trait_persistence = 1.0;
};

// Adversary's prior on the daily indicator rate: mean and variance over the shock.
struct RateModel {
    double q0 = 0.5;
    double vq0 = 0.0;
};

RateModel rate_model(const MetricModel& metric);

struct SimulationConfig {
    std::int64_t k_min = 100;
    std::int64_t k_max = 0;  // 0 means 10 * k_min
    double epsilon = 0.3;
    double lambda_join = 10.0;
    double p_churn = 0.05;
    double known_fraction = 0.1;
    // Fraction of known_fraction applied to members who join after day 0.
    double joiner_known_rate = 1.0;
    double rho = 0.0;
    long horizon = 365;
    std::int64_t n_sim = 10000;
    std::uint64_t seed = 1;
    int queries_per_day = 1;
    int q_max = 100;
    double prior = 0.01;
    bool gate = true;
    MetricModel metric;

    std::int64_t effective_k_max() const { return k_max > 0 ? k_max : 10 * k_min; }
    void validate() const;
};

enum TrajectoryFlag : std::uint8_t {
    kFlagNone = 0,
    kFlagSuppressed = 1,  // N < k_min, nothing released
    kFlagDegenerate = 2,  // nobody but the target left in the cohort
};

struct LossTrajectory {
    std::int64_t run = 0;
    std::vector<double> loss;                // L_t, t = 1..T
    std::vector<std::int64_t> cohort_size;  // N_t including the target
    std::vector<std::uint8_t> flag;
    double terminal = 0.0;
    double epsilon_spent = 0.0;
    long releases = 0;
    bool degenerate = false;
};

struct Query {
    long day = 0;
    int metric = 0;
    std::string statistic = "count";
};

// Repeats the previous metric with probability rho, otherwise draws uniformly from `metrics`.
Query generate_query(long t, const Query* previous, double rho, int metrics, Rng& rng);

// One run of the simulation. Deterministic in (config.seed, run).
LossTrajectory simulate_run(const SimulationConfig& config, std::int64_t run);

// workers <= 0 picks the default pool size (see default_workers()).
std::vector<LossTrajectory> run_simulation(const SimulationConfig& config, int workers = 0);

// COHORTRISK_WORKERS if set, else hardware concurrency.
int default_workers();

double p_var(std::vector<double> losses, double alpha);

struct TailMean {
    double value = 0.0;
    bool degenerate_tail = false;
};

TailMean cp_var_detail(std::vector<double> losses, double alpha);
double cp_var(std::vector<double> losses, double alpha);

struct RiskReport {
    double p_var_95 = 0.0;
    double p_var_99 = 0.0;
    double cp_var_95 = 0.0;
    double max_loss = 0.0;
    std::int64_t n_sim = 0;
    std::int64_t degenerate_runs = 0;
    bool degenerate_tail = false;
};

RiskReport risk_report(const std::vector<double>& terminal_losses, std::int64_t degenerate_runs = 0);
RiskReport risk_report(const std::vector<LossTrajectory>& trajectories);

// P-VaR at `alpha` of L_t across runs, for each day t.
std::vector<double> p_var_by_day(const std::vector<LossTrajectory>& trajectories, double alpha);

nlohmann::ordered_json to_json(const SimulationConfig& config);
nlohmann::ordered_json to_json(const RiskReport& report);

// CSV: run,t,loss,cohort_size,flag
void write_trajectories_csv(std::ostream& out, const std::vector<LossTrajectory>& trajectories);
std::vector<LossTrajectory> read_trajectories_csv(std::istream& in);

}  // namespace cohortrisk::risk
