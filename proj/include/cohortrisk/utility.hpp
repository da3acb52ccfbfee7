#pragma once

#include <cstdint>
#include <vector>

#include "cohortrisk/dp.hpp"

namespace cohortrisk::utility {

// 100 * (count strictly below + 0.5 * count equal, self included) / n
std::vector<double> percentile_ranks(const std::vector<double>& values);

// Average (1-based) ranks, ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

// Population variance of the per-member percentile shift.
double rank_variance(const std::vector<double>& true_values, const std::vector<double>& noisy_values);
double spearman(const std::vector<double>& true_values, const std::vector<double>& noisy_values);
double user_error_rate(const std::vector<double>& true_values, const std::vector<double>& noisy_values,
                       double threshold_pp = 10.0);
double percentile_mae(const std::vector<double>& true_values, const std::vector<double>& noisy_values);

struct UtilityReport {
    double rank_variance = 0.0;
    double spearman_rho = 0.0;
    double percentile_mae = 0.0;
    double user_error_rate = 0.0;
};

UtilityReport utility_report(const std::vector<double>& true_values, const std::vector<double>& noisy_values);

struct UtilityConfig {
    std::int64_t cohort_size = 200;
    double epsilon = 0.3;
    int repetitions = 100;
    double metric_mean = 50.0;
    double metric_sd = 10.0;
    dp::ClipBounds bounds{0.0, 100.0};
    std::uint64_t seed = 1;
    double threshold_pp = 10.0;
};

// Per-member Laplace noise at the clipped-mean scale (upper - lower) / (n * epsilon), averaged over
// repetitions. One cohort of values is drawn per repetition and shared across epsilons with the same seed.
UtilityReport simulate_utility(const UtilityConfig& config);

}  // namespace cohortrisk::utility
