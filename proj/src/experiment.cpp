#include "cohortrisk/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::experiment {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, long lineno) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ValidationError("CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
    return v;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

config::ExperimentSpec load_for_simulate(const std::string& path) {
    const auto j = config::read_json_file(path);
    return config::parse_spec(j);
}

double delta_pct(double value, double base) {
    if (base == 0.0) return value == 0.0 ? 0.0 : (value > 0.0 ? INFINITY : -INFINITY);
    return 100.0 * (value - base) / base;
}

}  // namespace

const char* version() { return COHORTRISK_VERSION; }

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

SimulateResult simulate(const risk::SimulationConfig& cfg, const config::UtilitySettings& u, int workers) {
    SimulateResult r;
    r.trajectories = risk::run_simulation(cfg, workers);
    r.report = risk::risk_report(r.trajectories);
    r.utility = utility::simulate_utility(u.for_point(cfg.k_min, cfg.epsilon, cfg.seed));
    return r;
}

nlohmann::ordered_json report_json(const risk::SimulationConfig& cfg, const config::UtilitySettings& u,
                                   const SimulateResult& r) {
    nlohmann::ordered_json j;
    j["version"] = version();
    j["config"] = risk::to_json(cfg);
    j["utility_config"] = config::to_json(u);
    j["report"] = risk::to_json(r.report);
    j["utility"] = {{"rank_variance", r.utility.rank_variance},
                    {"spearman", r.utility.spearman_rho},
                    {"mae_pp", r.utility.percentile_mae},
                    {"user_error_rate", r.utility.user_error_rate}};
    return j;
}

std::vector<SweepRow> run_sweep(const config::ExperimentSpec& spec, int workers) {
    if (spec.sweep_k_min.empty() || spec.sweep_epsilon.empty()) {
        throw ConfigError("sweep", "sweep mode needs non-empty k_min and epsilon lists");
    }
    auto ks = spec.sweep_k_min;
    auto es = spec.sweep_epsilon;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    std::sort(es.begin(), es.end(), std::greater<>());
    es.erase(std::unique(es.begin(), es.end()), es.end());

    std::vector<SweepRow> rows;
    for (auto k : ks) {
        for (double e : es) {
            risk::SimulationConfig cfg = spec.base;
            cfg.k_min = k;
            // k_max follows k_min unless pinned explicitly
            if (spec.base.k_max > 0 && spec.base.k_max < k) cfg.k_max = 0;
            cfg.epsilon = e;
            const auto rep = risk::risk_report(risk::run_simulation(cfg, workers));
            const auto util = utility::simulate_utility(spec.utility.for_point(k, e, cfg.seed));
            rows.push_back({k, e, rep.p_var_95, rep.p_var_99, rep.cp_var_95, rep.max_loss, util.spearman_rho,
                            util.percentile_mae, util.user_error_rate});
        }
    }
    return rows;
}

SensitivityResult run_sensitivity(const config::ExperimentSpec& spec, int workers) {
    if (spec.sensitivity.empty()) throw ConfigError("sensitivity", "no sensitivity axes given");
    SensitivityResult out;

    auto add_curve = [&](const std::string& axis, double value, const std::vector<risk::LossTrajectory>& trs) {
        const auto curve = risk::p_var_by_day(trs, 0.95);
        for (std::size_t t = 0; t < curve.size(); ++t) {
            out.curves.push_back({axis, value, static_cast<long>(t + 1), curve[t]});
        }
    };

    const auto base_trs = risk::run_simulation(spec.base, workers);
    const double base = risk::risk_report(base_trs).p_var_95;
    out.rows.push_back({"baseline", 0.0, base, 0.0});
    add_curve("baseline", 0.0, base_trs);

    auto sweep_axis = [&](const std::string& axis, const auto& values, auto apply, auto current) {
        for (auto v : values) {
            const double dv = static_cast<double>(v);
            if (dv == static_cast<double>(current)) {
                out.rows.push_back({axis, dv, base, 0.0});
                continue;
            }
            risk::SimulationConfig cfg = spec.base;
            apply(cfg, v);
            const auto trs = risk::run_simulation(cfg, workers);
            const double p = risk::risk_report(trs).p_var_95;
            out.rows.push_back({axis, dv, p, delta_pct(p, base)});
            add_curve(axis, dv, trs);
        }
    };
    sweep_axis("known_fraction", spec.sensitivity.known_fraction,
               [](risk::SimulationConfig& c, double v) { c.known_fraction = v; }, spec.base.known_fraction);
    sweep_axis("p_churn", spec.sensitivity.p_churn, [](risk::SimulationConfig& c, double v) { c.p_churn = v; },
               spec.base.p_churn);
    sweep_axis("rho", spec.sensitivity.rho, [](risk::SimulationConfig& c, double v) { c.rho = v; }, spec.base.rho);
    sweep_axis("horizon", spec.sensitivity.horizon, [](risk::SimulationConfig& c, long v) { c.horizon = v; },
               spec.base.horizon);
    return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "k_min,epsilon,pvar95,pvar99,cpvar95,max,spearman,mae_pp,user_error_rate\n";
    for (const auto& r : rows) {
        out << r.k_min << ',' << format_number(r.epsilon) << ',' << format_number(r.pvar95) << ','
            << format_number(r.pvar99) << ',' << format_number(r.cpvar95) << ',' << format_number(r.max) << ','
            << format_number(r.spearman) << ',' << format_number(r.mae_pp) << ','
            << format_number(r.user_error_rate) << '\n';
    }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "k_min,epsilon,pvar95,pvar99,cpvar95,max,spearman,mae_pp,user_error_rate") {
        throw ValidationError("sweep CSV: unexpected header");
    }
    std::vector<SweepRow> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 9) throw ValidationError("sweep CSV line " + std::to_string(lineno) + ": expected 9 fields");
        SweepRow r;
        r.k_min = static_cast<std::int64_t>(parse_double(f[0], lineno));
        r.epsilon = parse_double(f[1], lineno);
        r.pvar95 = parse_double(f[2], lineno);
        r.pvar99 = parse_double(f[3], lineno);
        r.cpvar95 = parse_double(f[4], lineno);
        r.max = parse_double(f[5], lineno);
        r.spearman = parse_double(f[6], lineno);
        r.mae_pp = parse_double(f[7], lineno);
        r.user_error_rate = parse_double(f[8], lineno);
        rows.push_back(r);
    }
    return rows;
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
    out << "axis,value,pvar95,delta_pct\n";
    for (const auto& r : rows) {
        out << r.axis << ',' << format_number(r.value) << ',' << format_number(r.pvar95) << ','
            << format_number(r.delta_pct) << '\n';
    }
}

std::vector<SensitivityRow> read_sensitivity_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "axis,value,pvar95,delta_pct") {
        throw ValidationError("sensitivity CSV: unexpected header");
    }
    std::vector<SensitivityRow> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) throw ValidationError("sensitivity CSV line " + std::to_string(lineno) + ": expected 4 fields");
        rows.push_back({f[0], parse_double(f[1], lineno), parse_double(f[2], lineno), parse_double(f[3], lineno)});
    }
    return rows;
}

void write_curves_csv(std::ostream& out, const std::vector<SensitivityResult::CurvePoint>& curves) {
    out << "axis,value,t,pvar95\n";
    for (const auto& c : curves) {
        out << c.axis << ',' << format_number(c.value) << ',' << c.t << ',' << format_number(c.pvar95) << '\n';
    }
}

risk::RiskReport cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
                              int workers) {
    auto spec = load_for_simulate(config_path);
    spec.base.seed = seed;
    const auto result = simulate(spec.base, spec.utility, workers);

    std::ostringstream report;
    report << report_json(spec.base, spec.utility, result).dump(2) << '\n';
    std::ostringstream csv;
    risk::write_trajectories_csv(csv, result.trajectories);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "report.json", report.str());
    write_file(fs::path(out_dir) / "trajectories.csv", csv.str());
    return result.report;
}

std::vector<SweepRow> cmd_sweep(const std::string& spec_path, const std::string& out_dir, int workers) {
    const auto spec = config::load_spec(spec_path);
    if (!spec.seed) throw ConfigError("seed", "sweep specs must set a seed");
    const auto rows = run_sweep(spec, workers);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    nlohmann::ordered_json meta;
    meta["version"] = version();
    meta["config"] = risk::to_json(spec.base);
    meta["utility_config"] = config::to_json(spec.utility);
    meta["sweep"] = {{"k_min", spec.sweep_k_min}, {"epsilon", spec.sweep_epsilon}};

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "sweep.csv", csv.str());
    write_file(fs::path(out_dir) / "sweep_config.json", meta.dump(2) + "\n");
    return rows;
}

SensitivityResult cmd_sensitivity(const std::string& spec_path, const std::string& out_dir, int workers) {
    const auto spec = config::load_spec(spec_path);
    if (!spec.seed) throw ConfigError("seed", "sensitivity specs must set a seed");
    auto result = run_sensitivity(spec, workers);
    std::ostringstream csv, curves;
    write_sensitivity_csv(csv, result.rows);
    write_curves_csv(curves, result.curves);
    nlohmann::ordered_json meta;
    meta["version"] = version();
    meta["config"] = risk::to_json(spec.base);
    meta["sensitivity"] = {{"known_fraction", spec.sensitivity.known_fraction},
                           {"p_churn", spec.sensitivity.p_churn},
                           {"rho", spec.sensitivity.rho},
                           {"horizon", spec.sensitivity.horizon}};

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "sensitivity.csv", csv.str());
    write_file(fs::path(out_dir) / "pvar_by_day.csv", curves.str());
    write_file(fs::path(out_dir) / "sensitivity_config.json", meta.dump(2) + "\n");
    return result;
}

nlohmann::ordered_json cmd_report(const std::string& in_dir) {
    const fs::path dir(in_dir);
    if (!fs::is_directory(dir)) throw Error("not a directory: " + in_dir);
    nlohmann::ordered_json j;
    j["version"] = version();
    bool found = false;
    if (fs::exists(dir / "trajectories.csv")) {
        std::ifstream in(dir / "trajectories.csv", std::ios::binary);
        const auto trs = risk::read_trajectories_csv(in);
        j["report"] = risk::to_json(risk::risk_report(trs));
        found = true;
    }
    if (fs::exists(dir / "sweep.csv")) {
        std::ifstream in(dir / "sweep.csv", std::ios::binary);
        auto& arr = j["sweep"] = nlohmann::ordered_json::array();
        for (const auto& r : read_sweep_csv(in)) {
            arr.push_back({{"k_min", r.k_min},
                           {"epsilon", r.epsilon},
                           {"pvar95", r.pvar95},
                           {"pvar99", r.pvar99},
                           {"cpvar95", r.cpvar95},
                           {"max", r.max},
                           {"cp_ratio", r.pvar95 != 0.0 ? r.cpvar95 / r.pvar95 : 0.0},
                           {"spearman", r.spearman},
                           {"mae_pp", r.mae_pp},
                           {"user_error_rate", r.user_error_rate}});
        }
        found = true;
    }
    if (fs::exists(dir / "sensitivity.csv")) {
        std::ifstream in(dir / "sensitivity.csv", std::ios::binary);
        const auto rows = read_sensitivity_csv(in);
        auto& axes = j["sensitivity"] = nlohmann::ordered_json::object();
        std::map<std::string, std::pair<double, double>> range;
        double base = 0.0;
        for (const auto& r : rows) {
            if (r.axis == "baseline") {
                base = r.pvar95;
                continue;
            }
            axes[r.axis].push_back({{"value", r.value}, {"pvar95", r.pvar95}, {"delta_pct", r.delta_pct}});
            auto [it, fresh] = range.try_emplace(r.axis, r.pvar95, r.pvar95);
            if (!fresh) {
                it->second.first = std::min(it->second.first, r.pvar95);
                it->second.second = std::max(it->second.second, r.pvar95);
            }
        }
        auto& swing = j["relative_swing"] = nlohmann::ordered_json::object();
        for (const auto& [axis, mm] : range) swing[axis] = base != 0.0 ? (mm.second - mm.first) / base : 0.0;
        found = true;
    }
    if (!found) throw Error("no trajectories.csv, sweep.csv or sensitivity.csv in " + in_dir);
    return j;
}

}  // namespace cohortrisk::experiment
