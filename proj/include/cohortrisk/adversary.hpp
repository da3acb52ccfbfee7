#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cohortrisk/dp.hpp"
#include "cohortrisk/rng.hpp"

namespace cohortrisk::adversary {

using MemberId = std::int64_t;

struct KnownRecord {
    MemberId id = 0;
    std::map<std::string, double> attributes;
    double confidence = 1.0;  // p_i in (0, 1]
};

struct BackgroundKnowledge {
    std::vector<KnownRecord> known;
    double known_fraction = 0.0;

    bool contains(MemberId id) const;
};

// Marks floor(fraction * members.size()) members, chosen uniformly, as known with certainty.
// The target never enters the known set.
BackgroundKnowledge init_knowledge(const std::vector<MemberId>& members, MemberId target, double known_fraction,
                                   Rng& rng);

enum class Hypothesis { target_in_cohort, target_not_in_cohort };

// What the adversary can reconstruct about one count release. Known members contribute an
// exact count; the unknown remainder is modelled as Gaussian with the given mean and sd.
// With unknown_sd == 0 this is the exact Laplace density around the true count.
struct CountObservationModel {
    double known_count = 0.0;
    double unknown_mean = 0.0;
    double unknown_sd = 0.0;
    double target_value = 1.0;  // target's contribution when present
};

// Log density at x of Laplace(0, b) convolved with N(0, s^2). s == 0 gives the Laplace density.
double log_laplace_gauss(double x, double b, double s);

double log_observation_likelihood(const dp::NoisyRelease& release, Hypothesis h, const CountObservationModel& model);
double observation_likelihood(const dp::NoisyRelease& release, Hypothesis h, const CountObservationModel& model);

// Laplace density of a clipped-mean release with target included vs excluded. Both member
// sets are fully known here; an empty exclusion set throws DegenerateCohort.
double observation_likelihood(const dp::NoisyRelease& release, Hypothesis h, const std::vector<double>& others,
                              double target_value, const dp::ClipBounds& bounds);

class AdversaryBelief {
public:
    AdversaryBelief() = default;
    explicit AdversaryBelief(std::map<std::string, double> priors);

    // Membership belief about one target: the two candidates are "in" and "out".
    static AdversaryBelief membership(double prior_in);

    const std::map<std::string, double>& priors() const { return priors_; }
    std::map<std::string, double> posteriors() const;
    double posterior(const std::string& candidate) const;

    // Multiply in one observation's likelihoods and renormalize (kept in log space).
    void update(const std::map<std::string, double>& likelihoods);
    void update_log(const std::map<std::string, double>& log_likelihoods);

private:
    std::map<std::string, double> priors_;
    std::map<std::string, double> log_weight_;
};

inline constexpr const char* kIn = "in";
inline constexpr const char* kOut = "out";

AdversaryBelief belief_update(AdversaryBelief belief, const std::map<std::string, double>& likelihoods);

inline constexpr double kPosteriorFloor = 1e-12;

struct PrivacyLoss {
    double value = 0.0;
    std::string individual;
    long t = 0;
};

double privacy_loss_value(double posterior, double prior);
PrivacyLoss privacy_loss(const AdversaryBelief& belief, const std::string& target, double prior, long t = 0);

}  // namespace cohortrisk::adversary
