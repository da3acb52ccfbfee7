#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortrisk/risk.hpp"
#include "cohortrisk/utility.hpp"

namespace cohortrisk::config {

// Utility settings applied per configuration; cohort_size 0 means "use k_min".
struct UtilitySettings {
    std::int64_t cohort_size = 0;
    int repetitions = 100;
    double metric_mean = 50.0;
    double metric_sd = 10.0;
    double clip_lower = 0.0;
    double clip_upper = 100.0;
    double threshold_pp = 10.0;

    utility::UtilityConfig for_point(std::int64_t k_min, double epsilon, std::uint64_t seed) const;
};

struct SensitivityAxes {
    std::vector<double> known_fraction;
    std::vector<double> p_churn;
    std::vector<double> rho;
    std::vector<long> horizon;

    bool empty() const { return known_fraction.empty() && p_churn.empty() && rho.empty() && horizon.empty(); }
};

struct ExperimentSpec {
    risk::SimulationConfig base;
    UtilitySettings utility;
    std::vector<std::int64_t> sweep_k_min;
    std::vector<double> sweep_epsilon;
    SensitivityAxes sensitivity;
    std::optional<std::uint64_t> seed;
};

// Strict parsing: unknown fields and wrong types throw ConfigError naming the field.
risk::SimulationConfig parse_simulation(const nlohmann::json& j, const std::string& where = "simulation");
UtilitySettings parse_utility(const nlohmann::json& j, const std::string& where = "utility");
ExperimentSpec parse_spec(const nlohmann::json& j);

// Reads and parses a file; JSON syntax errors are reported with line and column.
nlohmann::json read_json_file(const std::string& path);
ExperimentSpec load_spec(const std::string& path);

nlohmann::ordered_json to_json(const UtilitySettings& u);

}  // namespace cohortrisk::config
