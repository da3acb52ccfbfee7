#pragma once

#include <vector>

#include "cohortrisk/rng.hpp"

namespace cohortrisk::dp {

enum class SensitivityKind { count, clipped_mean, clipped_quantile };

struct Sensitivity {
    double value = 1.0;
    SensitivityKind kind = SensitivityKind::count;

    static Sensitivity count() { return {1.0, SensitivityKind::count}; }
};

struct ClipBounds {
    double lower = 0.0;
    double upper = 1.0;

    double width() const { return upper - lower; }
};

enum class Mechanism { laplace };

struct NoisyRelease {
    double value = 0.0;
    double epsilon_spent = 0.0;
    Mechanism mechanism = Mechanism::laplace;
    bool true_value_hidden = true;
    double true_value = 0.0;  // meaningful only when true_value_hidden is false
};

void validate(const ClipBounds& bounds);

// Inverse CDF of Laplace(0, scale) at u in (0, 1).
double laplace_quantile(double u, double scale);

double sample_laplace(double scale, Rng& rng);

double laplace_log_density(double x, double scale);

// simulation=true keeps the true value on the release for likelihood computations.
NoisyRelease laplace_mechanism(double true_value, const Sensitivity& sensitivity, double epsilon, Rng& rng,
                               bool simulation = false);

std::vector<double> clip(const std::vector<double>& values, const ClipBounds& bounds);

Sensitivity clipped_mean_sensitivity(const ClipBounds& bounds, long n);

}  // namespace cohortrisk::dp
