#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cohortrisk/cohort.hpp"

namespace cohortrisk::baseline {

struct DistanceWeights {
    double age_step = 1.0;
    double sex = 2.0;
    double condition = 3.0;
    double region = 2.0;
};

double taxonomy_distance(const cohort::CohortKey& a, const cohort::CohortKey& b, const DistanceWeights& w = {});

// Minimum-distance key with size >= k_min; ties go to the larger cohort, then the smaller key string.
// Throws GlobalFallback when no cohort is large enough.
cohort::CohortKey nearest_cohort(const cohort::CohortKey& target,
                                 const std::vector<std::pair<cohort::CohortKey, std::int64_t>>& available,
                                 std::int64_t k_min, const DistanceWeights& w = {});

struct AttributeAdjustment {
    double location_shift = 0.0;  // age: per bin step, signed by direction from source to target
    double scale_factor = 1.0;
};

struct NormEntry {
    cohort::CohortKey key;
    double location = 0.0;
    double scale = 1.0;
    std::vector<std::pair<double, double>> quantiles;  // (q, value)
    std::map<std::string, AttributeAdjustment> adjustments;  // keys: age_bin, sex, condition, region
};

struct NormTable {
    std::string source;
    std::string provenance;
    std::vector<NormEntry> entries;

    static NormTable from_json(const nlohmann::json& j);
    const NormEntry* find(const cohort::CohortKey& key) const;
};

struct QuantilePoint {
    double q = 0.0;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;

    bool operator==(const QuantilePoint&) const = default;
};

struct SyntheticBaseline {
    double location = 0.0;
    double scale = 1.0;
    std::vector<QuantilePoint> quantiles;
    bool synthetic = true;
    cohort::CohortKey source;
    cohort::CohortKey target;
    std::string adjustment;
    bool warning = false;
    std::string provenance;

    bool operator==(const SyntheticBaseline&) const = default;
};

struct AdjustOptions {
    double inflation_per_step = 1.15;
    double base_interval = 0.1;  // half-width at distance 0, in units of scale
    DistanceWeights weights;
};

SyntheticBaseline adjust_baseline(const NormEntry& reference, const cohort::CohortKey& target,
                                  const cohort::CohortKey& source, const AdjustOptions& options = {},
                                  const std::string& provenance = "user-supplied norm table");

nlohmann::ordered_json emit_with_uncertainty(const SyntheticBaseline& baseline);
SyntheticBaseline parse_baseline(const nlohmann::json& j);

}  // namespace cohortrisk::baseline
