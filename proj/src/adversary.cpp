#include "cohortrisk/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::adversary {

namespace {

// log Phi(x), stable in the lower tail.
double log_ndtr(double x) {
    if (x > -5.0) return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
    // Asymptotic series for the Mills ratio.
    const double x2 = x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -(2.0 * k - 1.0) / x2;
        sum += term;
    }
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log(sum);
}

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

bool BackgroundKnowledge::contains(MemberId id) const {
    return std::any_of(known.begin(), known.end(), [&](const KnownRecord& r) { return r.id == id; });
}

BackgroundKnowledge init_knowledge(const std::vector<MemberId>& members, MemberId target, double known_fraction,
                                   Rng& rng) {
    if (!(known_fraction >= 0.0 && known_fraction <= 1.0)) {
        throw InvalidParameter("known_fraction must lie in [0, 1]");
    }
    std::vector<MemberId> pool;
    pool.reserve(members.size());
    for (auto id : members) {
        if (id != target) pool.push_back(id);
    }
    const auto want = static_cast<std::size_t>(std::floor(known_fraction * static_cast<double>(members.size())));
    const std::size_t take = std::min(want, pool.size());
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    BackgroundKnowledge k;
    k.known_fraction = known_fraction;
    for (std::size_t i = 0; i < take; ++i) k.known.push_back({pool[i], {}, 1.0});
    return k;
}

double log_laplace_gauss(double x, double b, double s) {
    if (!(b > 0.0)) throw InvalidParameter("laplace scale must be positive");
    if (s < 0.0) throw InvalidParameter("gaussian sd must be non-negative");
    if (s == 0.0) return dp::laplace_log_density(x, b);
    const double base = s * s / (2.0 * b * b);
    const double a1 = base - x / b + log_ndtr(x / s - s / b);
    const double a2 = base + x / b + log_ndtr(-x / s - s / b);
    return log_add_exp(a1, a2) - std::log(2.0 * b);
}

double log_observation_likelihood(const dp::NoisyRelease& release, Hypothesis h, const CountObservationModel& m) {
    if (!(release.epsilon_spent > 0.0)) throw InvalidParameter("release carries no epsilon");
    const double b = 1.0 / release.epsilon_spent;
    double centre = m.known_count + m.unknown_mean;
    if (h == Hypothesis::target_in_cohort) centre += m.target_value;
    return log_laplace_gauss(release.value - centre, b, m.unknown_sd);
}

double observation_likelihood(const dp::NoisyRelease& release, Hypothesis h, const CountObservationModel& m) {
    return std::exp(log_observation_likelihood(release, h, m));
}

double observation_likelihood(const dp::NoisyRelease& release, Hypothesis h, const std::vector<double>& others,
                              double target_value, const dp::ClipBounds& bounds) {
    dp::validate(bounds);
    auto clipped = dp::clip(others, bounds);
    if (h == Hypothesis::target_in_cohort) clipped.push_back(std::clamp(target_value, bounds.lower, bounds.upper));
    if (clipped.empty()) throw DegenerateCohort("mean of an empty cohort under the exclusion hypothesis");
    const double n = static_cast<double>(clipped.size());
    const double stat = std::accumulate(clipped.begin(), clipped.end(), 0.0) / n;
    // The mechanism's scale is fixed by the release, not by the hypothesis.
    const double scale = bounds.width() / (static_cast<double>(others.size() + 1) * release.epsilon_spent);
    return std::exp(dp::laplace_log_density(release.value - stat, scale));
}

AdversaryBelief::AdversaryBelief(std::map<std::string, double> priors) : priors_(std::move(priors)) {
    if (priors_.empty()) throw InvalidParameter("belief needs at least one candidate");
    double total = 0.0;
    for (const auto& [c, p] : priors_) {
        if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("prior for " + c + " must lie in (0, 1]");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidParameter("priors must sum to 1");
    for (const auto& [c, p] : priors_) log_weight_[c] = std::log(p);
}

AdversaryBelief AdversaryBelief::membership(double prior_in) {
    if (!(prior_in > 0.0 && prior_in < 1.0)) throw InvalidParameter("membership prior must lie in (0, 1)");
    return AdversaryBelief({{kIn, prior_in}, {kOut, 1.0 - prior_in}});
}

std::map<std::string, double> AdversaryBelief::posteriors() const {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& [_, w] : log_weight_) top = std::max(top, w);
    double z = 0.0;
    for (const auto& [_, w] : log_weight_) z += std::exp(w - top);
    std::map<std::string, double> out;
    for (const auto& [c, w] : log_weight_) out[c] = std::exp(w - top) / z;
    return out;
}

double AdversaryBelief::posterior(const std::string& candidate) const {
    auto post = posteriors();
    auto it = post.find(candidate);
    if (it == post.end()) throw InvalidParameter("unknown candidate " + candidate);
    return it->second;
}

void AdversaryBelief::update_log(const std::map<std::string, double>& log_likelihoods) {
    bool any_finite = false;
    for (const auto& [c, _] : log_weight_) {
        auto it = log_likelihoods.find(c);
        if (it == log_likelihoods.end()) throw InvalidParameter("missing likelihood for candidate " + c);
        if (std::isnan(it->second)) throw NumericalDegeneracy("NaN likelihood for candidate " + c);
        if (std::isfinite(it->second)) any_finite = true;
    }
    if (!any_finite) throw NumericalDegeneracy("all candidate likelihoods are zero");
    for (auto& [c, w] : log_weight_) w += log_likelihoods.at(c);
    // Re-centre so long update sequences never drift towards over/underflow.
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& [_, w] : log_weight_) top = std::max(top, w);
    for (auto& [_, w] : log_weight_) w -= top;
}

void AdversaryBelief::update(const std::map<std::string, double>& likelihoods) {
    std::map<std::string, double> logs;
    for (const auto& [c, l] : likelihoods) {
        if (l < 0.0 || std::isnan(l)) throw InvalidParameter("likelihoods must be non-negative");
        logs[c] = l > 0.0 ? std::log(l) : -std::numeric_limits<double>::infinity();
    }
    update_log(logs);
}

AdversaryBelief belief_update(AdversaryBelief belief, const std::map<std::string, double>& likelihoods) {
    belief.update(likelihoods);
    return belief;
}

double privacy_loss_value(double posterior, double prior) {
    if (!(prior > 0.0)) throw InvalidParameter("prior must be positive");
    const double p = std::clamp(posterior, kPosteriorFloor, 1.0 - kPosteriorFloor);
    return std::log(p / prior);
}

PrivacyLoss privacy_loss(const AdversaryBelief& belief, const std::string& target, double prior, long t) {
    return {privacy_loss_value(belief.posterior(target), prior), target, t};
}

}  // namespace cohortrisk::adversary
