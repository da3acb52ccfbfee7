#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortrisk/rng.hpp"

namespace cohortrisk::cohort {

enum class Sex { male, female, other_or_undisclosed };

const char* to_string(Sex sex);
Sex parse_sex(const std::string& s);

inline constexpr const char* kNoCondition = "none";

struct CohortKey {
    int age_lower = 0;  // inclusive, multiple of bin_width
    int bin_width = 5;
    Sex sex = Sex::other_or_undisclosed;
    std::string condition = kNoCondition;
    std::string region;

    std::string age_bin() const;  // "25-29"
    std::string str() const;      // "25-29/female/cardiovascular/US"
    static CohortKey parse(const std::string& s);

    auto operator<=>(const CohortKey&) const = default;
};

struct Taxonomy {
    int bin_width = 5;
    int max_age = 120;
    std::vector<std::string> condition_categories;
    std::map<std::string, std::string> condition_map;  // condition -> category
    std::vector<std::string> regions;

    static Taxonomy defaults();
    static Taxonomy from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool has_category(const std::string& c) const;
    bool has_region(const std::string& r) const;
};

struct UserAttributes {
    double age = 0.0;
    std::optional<std::string> sex;
    std::set<std::string> conditions;
    std::string region;
};

// One key per matched condition category plus the no-condition key.
std::set<CohortKey> assign_cohorts(const UserAttributes& user, const Taxonomy& taxonomy = Taxonomy::defaults());

std::int64_t step_dynamics(std::int64_t n, double lambda_join, double p_churn, Rng& rng);

double attribute_entropy(const std::vector<double>& distribution);

struct CohortState {
    CohortKey key;
    std::int64_t size = 0;
    std::map<std::string, std::int64_t> attribute_counts;
    std::vector<double> member_values;  // simulation mode only
    long t = 0;

    std::map<std::string, double> attribute_distribution() const;
};

enum class GateDecision { release, suppress };

GateDecision gate_release(const CohortState& state, std::int64_t k_min);
GateDecision gate_release(std::int64_t size, std::int64_t k_min);

inline constexpr const char* kOtherBucket = "other";
inline constexpr std::int64_t kDefaultMinCount = 5;

CohortState suppress_rare_attributes(const CohortState& state, std::int64_t min_count = kDefaultMinCount);

}  // namespace cohortrisk::cohort
