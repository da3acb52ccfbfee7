#include "cohortrisk/baseline.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::baseline {

namespace {

// Default quantile grid for entries without one, as standard-normal z values.
const std::vector<std::pair<double, double>> kDefaultGrid = {
    {0.05, -1.6448536269514722}, {0.10, -1.2815515655446004}, {0.25, -0.6744897501960817}, {0.50, 0.0},
    {0.75, 0.6744897501960817},  {0.90, 1.2815515655446004},  {0.95, 1.6448536269514722},
};

void check_fields(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError(where + "." + it.key(), "unknown field");
    }
}

}  // namespace

double taxonomy_distance(const cohort::CohortKey& a, const cohort::CohortKey& b, const DistanceWeights& w) {
    const int width = std::max(1, std::min(a.bin_width, b.bin_width));
    const double age_steps = std::abs(a.age_lower - b.age_lower) / static_cast<double>(width);
    double d = w.age_step * age_steps;
    if (a.sex != b.sex) d += w.sex;
    if (a.condition != b.condition) d += w.condition;
    if (a.region != b.region) d += w.region;
    return d;
}

cohort::CohortKey nearest_cohort(const cohort::CohortKey& target,
                                 const std::vector<std::pair<cohort::CohortKey, std::int64_t>>& available,
                                 std::int64_t k_min, const DistanceWeights& w) {
    const std::pair<cohort::CohortKey, std::int64_t>* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& cand : available) {
        if (cand.second < k_min) continue;
        const double d = taxonomy_distance(target, cand.first, w);
        bool better = false;
        if (best == nullptr || d < best_d) {
            better = true;
        } else if (d == best_d) {
            if (cand.second != best->second) {
                better = cand.second > best->second;
            } else {
                better = cand.first.str() < best->first.str();
            }
        }
        if (better) {
            best = &cand;
            best_d = d;
        }
    }
    if (best == nullptr) throw GlobalFallback("no cohort reaches k_min; use the all-population cohort");
    return best->first;
}

NormTable NormTable::from_json(const nlohmann::json& j) {
    check_fields(j, {"source", "provenance", "entries"}, "norm_table");
    NormTable t;
    try {
        t.source = j.at("source").get<std::string>();
        t.provenance = j.value("provenance", std::string("user-supplied norm table: ") + t.source);
        std::size_t i = 0;
        for (const auto& e : j.at("entries")) {
            const std::string where = "norm_table.entries[" + std::to_string(i++) + "]";
            check_fields(e, {"cohort_key", "location", "scale", "quantiles", "adjustments"}, where);
            NormEntry entry;
            entry.key = cohort::CohortKey::parse(e.at("cohort_key").get<std::string>());
            entry.location = e.at("location").get<double>();
            entry.scale = e.at("scale").get<double>();
            if (!(entry.scale > 0.0)) throw ConfigError(where + ".scale", "must be positive");
            if (e.contains("quantiles")) {
                for (const auto& q : e.at("quantiles")) {
                    entry.quantiles.emplace_back(q.at(0).get<double>(), q.at(1).get<double>());
                }
                for (std::size_t k = 1; k < entry.quantiles.size(); ++k) {
                    if (entry.quantiles[k].first <= entry.quantiles[k - 1].first ||
                        entry.quantiles[k].second < entry.quantiles[k - 1].second) {
                        throw ConfigError(where + ".quantiles", "grid must be increasing in q and non-decreasing");
                    }
                }
            }
            if (e.contains("adjustments")) {
                for (auto it = e.at("adjustments").begin(); it != e.at("adjustments").end(); ++it) {
                    static const std::set<std::string> attrs = {"age_bin", "sex", "condition", "region"};
                    if (!attrs.count(it.key())) throw ConfigError(where + ".adjustments." + it.key(), "unknown attribute");
                    check_fields(it.value(), {"location_shift", "scale_factor"}, where + ".adjustments." + it.key());
                    AttributeAdjustment a;
                    a.location_shift = it.value().value("location_shift", 0.0);
                    a.scale_factor = it.value().value("scale_factor", 1.0);
                    if (!(a.scale_factor > 0.0)) {
                        throw ConfigError(where + ".adjustments." + it.key() + ".scale_factor", "must be positive");
                    }
                    entry.adjustments[it.key()] = a;
                }
            }
            t.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("norm_table", e.what());
    } catch (const ValidationError& e) {
        throw ConfigError("norm_table", e.what());
    }
    return t;
}

const NormEntry* NormTable::find(const cohort::CohortKey& key) const {
    for (const auto& e : entries) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

SyntheticBaseline adjust_baseline(const NormEntry& ref, const cohort::CohortKey& target,
                                  const cohort::CohortKey& source, const AdjustOptions& opt,
                                  const std::string& provenance) {
    if (!(ref.scale > 0.0)) throw ValidationError("reference scale must be positive");
    SyntheticBaseline out;
    out.source = source;
    out.target = target;
    out.provenance = provenance;

    double location = ref.location;
    double scale_mult = 1.0;
    double missing_steps = 0.0;
    std::ostringstream desc;
    auto apply = [&](const std::string& attr, double steps) {
        auto it = ref.adjustments.find(attr);
        if (it == ref.adjustments.end()) {
            out.warning = true;
            missing_steps += 1.0;
            desc << attr << ": no factor, unadjusted; ";
            return;
        }
        location += it->second.location_shift * steps;
        scale_mult *= std::pow(it->second.scale_factor, std::abs(steps));
        desc << attr << ": shift " << it->second.location_shift * steps << ", scale x"
             << std::pow(it->second.scale_factor, std::abs(steps)) << "; ";
    };
    if (target.age_lower != source.age_lower) {
        const int width = std::max(1, source.bin_width);
        apply("age_bin", static_cast<double>(target.age_lower - source.age_lower) / width);
    }
    if (target.sex != source.sex) apply("sex", 1.0);
    if (target.condition != source.condition) apply("condition", 1.0);
    if (target.region != source.region) apply("region", 1.0);

    out.location = location;
    out.scale = ref.scale * scale_mult;
    const double distance = taxonomy_distance(target, source, opt.weights) + missing_steps;
    const double half = opt.base_interval * out.scale * std::pow(opt.inflation_per_step, distance);
    const double shift = location - ref.location;
    if (!ref.quantiles.empty()) {
        for (const auto& [q, v] : ref.quantiles) {
            // Scale about the reference location, then shift.
            const double value = ref.location + (v - ref.location) * scale_mult + shift;
            out.quantiles.push_back({q, value, value - half, value + half});
        }
    } else {
        for (const auto& [q, z] : kDefaultGrid) {
            const double value = out.location + z * out.scale;
            out.quantiles.push_back({q, value, value - half, value + half});
        }
    }
    const std::string d = desc.str();
    out.adjustment = d.empty() ? "identity" : d.substr(0, d.size() - 2);
    return out;
}

nlohmann::ordered_json emit_with_uncertainty(const SyntheticBaseline& b) {
    nlohmann::ordered_json j;
    j["synthetic"] = true;
    j["target_cohort"] = b.target.str();
    j["source_cohort"] = b.source.str();
    j["location"] = b.location;
    j["scale"] = b.scale;
    j["quantiles"] = nlohmann::ordered_json::array();
    for (const auto& q : b.quantiles) {
        j["quantiles"].push_back({{"q", q.q}, {"value", q.value}, {"lower", q.lower}, {"upper", q.upper}});
    }
    j["adjustment"] = b.adjustment;
    j["warning"] = b.warning;
    j["provenance"] = b.provenance.empty() ? std::string("unspecified") : b.provenance;
    return j;
}

SyntheticBaseline parse_baseline(const nlohmann::json& j) {
    SyntheticBaseline b;
    try {
        b.synthetic = j.at("synthetic").get<bool>();
        if (!b.synthetic) throw ValidationError("baseline record is not marked synthetic");
        b.target = cohort::CohortKey::parse(j.at("target_cohort").get<std::string>());
        b.source = cohort::CohortKey::parse(j.at("source_cohort").get<std::string>());
        b.location = j.at("location").get<double>();
        b.scale = j.at("scale").get<double>();
        for (const auto& q : j.at("quantiles")) {
            b.quantiles.push_back({q.at("q").get<double>(), q.at("value").get<double>(), q.at("lower").get<double>(),
                                   q.at("upper").get<double>()});
        }
        b.adjustment = j.at("adjustment").get<std::string>();
        b.warning = j.at("warning").get<bool>();
        b.provenance = j.at("provenance").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("baseline record: ") + e.what());
    }
    return b;
}

}  // namespace cohortrisk::baseline
