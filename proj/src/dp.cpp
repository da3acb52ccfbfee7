#include "cohortrisk/dp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::dp {

void validate(const ClipBounds& bounds) {
    if (!(bounds.lower < bounds.upper)) {
        throw InvalidParameter("clip bounds require lower < upper");
    }
}

double laplace_quantile(double u, double scale) {
    if (!(scale > 0.0)) throw InvalidParameter("laplace scale must be positive");
    if (!(u > 0.0 && u < 1.0)) throw InvalidParameter("laplace quantile needs u in (0, 1)");
    if (u < 0.5) return scale * std::log(2.0 * u);
    if (u > 0.5) return -scale * std::log(2.0 * (1.0 - u));
    return 0.0;
}

double sample_laplace(double scale, Rng& rng) {
    if (!(scale > 0.0)) throw InvalidParameter("laplace scale must be positive");
    return laplace_quantile(rng.uniform(), scale);
}

double laplace_log_density(double x, double scale) {
    return -std::abs(x) / scale - std::log(2.0 * scale);
}

NoisyRelease laplace_mechanism(double true_value, const Sensitivity& sensitivity, double epsilon, Rng& rng,
                               bool simulation) {
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
    if (!(sensitivity.value > 0.0)) throw InvalidParameter("sensitivity must be positive");
    NoisyRelease out;
    out.value = true_value + sample_laplace(sensitivity.value / epsilon, rng);
    out.epsilon_spent = epsilon;
    out.true_value_hidden = !simulation;
    if (simulation) out.true_value = true_value;
    return out;
}

std::vector<double> clip(const std::vector<double>& values, const ClipBounds& bounds) {
    validate(bounds);
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [&](double v) { return std::clamp(v, bounds.lower, bounds.upper); });
    return out;
}

Sensitivity clipped_mean_sensitivity(const ClipBounds& bounds, long n) {
    validate(bounds);
    if (n < 1) throw InvalidParameter("clipped mean needs n >= 1, got " + std::to_string(n));
    return {bounds.width() / static_cast<double>(n), SensitivityKind::clipped_mean};
}

}  // namespace cohortrisk::dp
