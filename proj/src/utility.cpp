#include "cohortrisk/utility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cohortrisk/errors.hpp"
#include "cohortrisk/rng.hpp"

namespace cohortrisk::utility {

namespace {

void require_same_length(const std::vector<double>& a, const std::vector<double>& b, std::size_t min_len) {
    if (a.size() != b.size()) throw ValidationError("value sequences differ in length");
    if (a.size() < min_len) throw ValidationError("need at least " + std::to_string(min_len) + " values");
}

std::vector<double> shifts(const std::vector<double>& t, const std::vector<double>& n) {
    const auto pt = percentile_ranks(t);
    const auto pn = percentile_ranks(n);
    std::vector<double> d(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) d[i] = pn[i] - pt[i];
    return d;
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

std::vector<double> percentile_ranks(const std::vector<double>& values) {
    // average rank r of a tie group spanning positions i..j (1-based) equals below + (ties + 1) / 2,
    // so below + ties / 2 = r - 1/2.
    const auto r = average_ranks(values);
    const double n = static_cast<double>(values.size());
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 100.0 * (r[i] - 0.5) / n;
    return out;
}

double rank_variance(const std::vector<double>& t, const std::vector<double>& n) {
    require_same_length(t, n, 2);
    const auto d = shifts(t, n);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(d.size());
}

double spearman(const std::vector<double>& t, const std::vector<double>& n) {
    require_same_length(t, n, 2);
    const auto a = average_ranks(t);
    const auto b = average_ranks(n);
    const double m = (static_cast<double>(a.size()) + 1.0) / 2.0;  // both rank vectors average to (n+1)/2
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - m) * (b[i] - m);
        saa += (a[i] - m) * (a[i] - m);
        sbb += (b[i] - m) * (b[i] - m);
    }
    if (saa == 0.0 || sbb == 0.0) throw UndefinedCorrelation("ranks are constant on one side");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double user_error_rate(const std::vector<double>& t, const std::vector<double>& n, double threshold_pp) {
    require_same_length(t, n, 1);
    const auto d = shifts(t, n);
    const auto moved = std::count_if(d.begin(), d.end(), [&](double x) { return std::abs(x) > threshold_pp; });
    return static_cast<double>(moved) / static_cast<double>(d.size());
}

double percentile_mae(const std::vector<double>& t, const std::vector<double>& n) {
    require_same_length(t, n, 1);
    const auto d = shifts(t, n);
    double s = 0.0;
    for (double x : d) s += std::abs(x);
    return s / static_cast<double>(d.size());
}

UtilityReport utility_report(const std::vector<double>& t, const std::vector<double>& n) {
    return {rank_variance(t, n), spearman(t, n), percentile_mae(t, n), user_error_rate(t, n)};
}

UtilityReport simulate_utility(const UtilityConfig& c) {
    if (c.cohort_size < 2) throw InvalidParameter("utility cohort needs at least 2 members");
    if (!(c.epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
    if (c.repetitions < 1) throw InvalidParameter("repetitions must be positive");
    dp::validate(c.bounds);
    const double scale = c.bounds.width() / (static_cast<double>(c.cohort_size) * c.epsilon);
    UtilityReport acc;
    for (int rep = 0; rep < c.repetitions; ++rep) {
        Rng data = Rng::stream(c.seed, static_cast<std::uint64_t>(rep), 101);
        Rng noise = Rng::stream(c.seed, static_cast<std::uint64_t>(rep), 102);
        std::vector<double> values(static_cast<std::size_t>(c.cohort_size));
        for (auto& v : values) v = data.normal(c.metric_mean, c.metric_sd);
        values = dp::clip(values, c.bounds);
        std::vector<double> noisy(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) noisy[i] = values[i] + dp::sample_laplace(scale, noise);
        acc.rank_variance += rank_variance(values, noisy);
        acc.spearman_rho += spearman(values, noisy);
        acc.percentile_mae += percentile_mae(values, noisy);
        acc.user_error_rate += user_error_rate(values, noisy, c.threshold_pp);
    }
    const double k = static_cast<double>(c.repetitions);
    acc.rank_variance /= k;
    acc.spearman_rho /= k;
    acc.percentile_mae /= k;
    acc.user_error_rate /= k;
    return acc;
}

}  // namespace cohortrisk::utility
