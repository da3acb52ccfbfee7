#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortrisk/config.hpp"
#include "cohortrisk/risk.hpp"
#include "cohortrisk/utility.hpp"

namespace cohortrisk::experiment {

const char* version();

struct SimulateResult {
    risk::RiskReport report;
    utility::UtilityReport utility;
    std::vector<risk::LossTrajectory> trajectories;
};

SimulateResult simulate(const risk::SimulationConfig& config, const config::UtilitySettings& utility, int workers = 0);

// Report JSON: version, resolved config, risk statistics, utility metrics.
nlohmann::ordered_json report_json(const risk::SimulationConfig& config, const config::UtilitySettings& utility,
                                   const SimulateResult& result);

struct SweepRow {
    std::int64_t k_min = 0;
    double epsilon = 0.0;
    double pvar95 = 0.0;
    double pvar99 = 0.0;
    double cpvar95 = 0.0;
    double max = 0.0;
    double spearman = 0.0;
    double mae_pp = 0.0;
    double user_error_rate = 0.0;
};

// One row per (k_min, epsilon), ordered by k_min ascending then epsilon descending.
std::vector<SweepRow> run_sweep(const config::ExperimentSpec& spec, int workers = 0);

struct SensitivityRow {
    std::string axis;  // "baseline", "known_fraction", "p_churn", "rho", "horizon"
    double value = 0.0;
    double pvar95 = 0.0;
    double delta_pct = 0.0;
};

struct SensitivityResult {
    std::vector<SensitivityRow> rows;
    // Long format: axis, value, t, pvar95 for every day of every run set.
    struct CurvePoint {
        std::string axis;
        double value;
        long t;
        double pvar95;
    };
    std::vector<CurvePoint> curves;
};

SensitivityResult run_sensitivity(const config::ExperimentSpec& spec, int workers = 0);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);
void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows);
std::vector<SensitivityRow> read_sensitivity_csv(std::istream& in);
void write_curves_csv(std::ostream& out, const std::vector<SensitivityResult::CurvePoint>& curves);

// CLI entry points. They validate all inputs before touching out_dir and throw on failure.
risk::RiskReport cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
                              int workers = 0);
std::vector<SweepRow> cmd_sweep(const std::string& spec_path, const std::string& out_dir, int workers = 0);
SensitivityResult cmd_sensitivity(const std::string& spec_path, const std::string& out_dir, int workers = 0);
// Re-summarizes the outputs found in `in_dir`.
nlohmann::ordered_json cmd_report(const std::string& in_dir);

std::string format_number(double v);

}  // namespace cohortrisk::experiment
