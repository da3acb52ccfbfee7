#include "cohortrisk/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::cohort {

const char* to_string(Sex sex) {
    switch (sex) {
        case Sex::male: return "male";
        case Sex::female: return "female";
        case Sex::other_or_undisclosed: return "other_or_undisclosed";
    }
    return "other_or_undisclosed";
}

Sex parse_sex(const std::string& s) {
    if (s == "male" || s == "M" || s == "m") return Sex::male;
    if (s == "female" || s == "F" || s == "f") return Sex::female;
    if (s == "other_or_undisclosed" || s == "other" || s.empty()) return Sex::other_or_undisclosed;
    throw ValidationError("unrecognized sex value: " + s);
}

std::string CohortKey::age_bin() const {
    return std::to_string(age_lower) + "-" + std::to_string(age_lower + bin_width - 1);
}

std::string CohortKey::str() const {
    return age_bin() + "/" + to_string(sex) + "/" + condition + "/" + region;
}

CohortKey CohortKey::parse(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, '/')) parts.push_back(part);
    if (parts.size() != 4) throw ValidationError("cohort key needs 4 '/'-separated fields: " + s);
    auto dash = parts[0].find('-');
    if (dash == std::string::npos) throw ValidationError("bad age bin: " + parts[0]);
    CohortKey k;
    try {
        k.age_lower = std::stoi(parts[0].substr(0, dash));
        int hi = std::stoi(parts[0].substr(dash + 1));
        k.bin_width = hi - k.age_lower + 1;
    } catch (const std::exception&) {
        throw ValidationError("bad age bin: " + parts[0]);
    }
    if (k.bin_width <= 0 || k.age_lower < 0 || k.age_lower % k.bin_width != 0) {
        throw ValidationError("age bin must start on a multiple of its width: " + parts[0]);
    }
    k.sex = parse_sex(parts[1]);
    k.condition = parts[2];
    k.region = parts[3];
    return k;
}

Taxonomy Taxonomy::defaults() {
    Taxonomy t;
    t.condition_categories = {"cardiovascular", "metabolic", "respiratory", "musculoskeletal", "mental_health"};
    t.condition_map = {
        {"hypertension", "cardiovascular"},   {"coronary_artery_disease", "cardiovascular"},
        {"arrhythmia", "cardiovascular"},     {"type2_diabetes", "metabolic"},
        {"type1_diabetes", "metabolic"},      {"obesity", "metabolic"},
        {"asthma", "respiratory"},            {"copd", "respiratory"},
        {"osteoarthritis", "musculoskeletal"}, {"back_pain", "musculoskeletal"},
        {"depression", "mental_health"},      {"anxiety", "mental_health"},
    };
    t.regions = {"US", "UK", "DE", "FR", "CA", "AU", "JP", "IN", "BR", "other"};
    return t;
}

bool Taxonomy::has_category(const std::string& c) const {
    return c == kNoCondition ||
           std::find(condition_categories.begin(), condition_categories.end(), c) != condition_categories.end();
}

bool Taxonomy::has_region(const std::string& r) const {
    return std::find(regions.begin(), regions.end(), r) != regions.end();
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j) {
    static const std::set<std::string> allowed = {"bin_width", "max_age", "condition_categories", "condition_map",
                                                  "regions"};
    if (!j.is_object()) throw ConfigError("taxonomy", "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError("taxonomy." + it.key(), "unknown field");
    }
    Taxonomy t = defaults();
    try {
        if (j.contains("bin_width")) t.bin_width = j.at("bin_width").get<int>();
        if (j.contains("max_age")) t.max_age = j.at("max_age").get<int>();
        if (j.contains("condition_categories")) {
            t.condition_categories = j.at("condition_categories").get<std::vector<std::string>>();
        }
        if (j.contains("condition_map")) {
            t.condition_map = j.at("condition_map").get<std::map<std::string, std::string>>();
        }
        if (j.contains("regions")) t.regions = j.at("regions").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("taxonomy", e.what());
    }
    if (t.bin_width <= 0) throw ConfigError("taxonomy.bin_width", "must be positive");
    for (const auto& [cond, cat] : t.condition_map) {
        if (!t.has_category(cat)) throw ConfigError("taxonomy.condition_map." + cond, "unknown category " + cat);
    }
    return t;
}

nlohmann::json Taxonomy::to_json() const {
    nlohmann::ordered_json j;
    j["bin_width"] = bin_width;
    j["max_age"] = max_age;
    j["condition_categories"] = condition_categories;
    j["condition_map"] = condition_map;
    j["regions"] = regions;
    return j;
}

std::set<CohortKey> assign_cohorts(const UserAttributes& user, const Taxonomy& taxonomy) {
    if (!(user.age >= 0.0)) throw ValidationError("age must be non-negative");
    if (user.age > taxonomy.max_age) {
        throw ValidationError("age above " + std::to_string(taxonomy.max_age) + " is not plausible");
    }
    if (!taxonomy.has_region(user.region)) throw ValidationError("region not in taxonomy: " + user.region);

    CohortKey base;
    base.bin_width = taxonomy.bin_width;
    const int years = static_cast<int>(std::floor(user.age));
    base.age_lower = years - years % taxonomy.bin_width;
    base.sex = user.sex ? parse_sex(*user.sex) : Sex::other_or_undisclosed;
    base.region = user.region;
    base.condition = kNoCondition;

    std::set<CohortKey> keys{base};
    for (const auto& cond : user.conditions) {
        std::string category;
        if (taxonomy.has_category(cond) && cond != kNoCondition) {
            category = cond;
        } else {
            auto it = taxonomy.condition_map.find(cond);
            if (it == taxonomy.condition_map.end()) throw ValidationError("condition not in taxonomy: " + cond);
            category = it->second;
        }
        CohortKey k = base;
        k.condition = category;
        keys.insert(k);
    }
    return keys;
}

std::int64_t step_dynamics(std::int64_t n, double lambda_join, double p_churn, Rng& rng) {
    if (n < 0) throw InvalidParameter("cohort size must be non-negative");
    if (!(p_churn >= 0.0 && p_churn <= 1.0)) throw InvalidParameter("p_churn must lie in [0, 1]");
    if (!(lambda_join >= 0.0)) throw InvalidParameter("lambda_join must be non-negative");
    const std::int64_t joins = rng.poisson(lambda_join);
    const std::int64_t leaves = rng.binomial(n, p_churn);
    return n + joins - leaves;
}

double attribute_entropy(const std::vector<double>& distribution) {
    double total = 0.0;
    for (double p : distribution) {
        if (!(p >= 0.0)) throw ValidationError("probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("distribution does not sum to 1");
    double h = 0.0;
    for (double p : distribution) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

std::map<std::string, double> CohortState::attribute_distribution() const {
    std::int64_t total = 0;
    for (const auto& [_, c] : attribute_counts) total += c;
    std::map<std::string, double> out;
    if (total == 0) return out;
    for (const auto& [v, c] : attribute_counts) out[v] = static_cast<double>(c) / static_cast<double>(total);
    return out;
}

GateDecision gate_release(std::int64_t size, std::int64_t k_min) {
    return size >= k_min ? GateDecision::release : GateDecision::suppress;
}

GateDecision gate_release(const CohortState& state, std::int64_t k_min) { return gate_release(state.size, k_min); }

CohortState suppress_rare_attributes(const CohortState& state, std::int64_t min_count) {
    if (min_count < 1) throw InvalidParameter("min_count must be positive");
    CohortState out = state;
    out.attribute_counts.clear();
    std::int64_t other = 0;
    bool merged = false;
    for (const auto& [value, count] : state.attribute_counts) {
        if (count < min_count || value == kOtherBucket) {
            other += count;
            merged = merged || value != kOtherBucket || count > 0;
        } else {
            out.attribute_counts[value] = count;
        }
    }
    if (merged) out.attribute_counts[kOtherBucket] = other;
    return out;
}

}  // namespace cohortrisk::cohort
