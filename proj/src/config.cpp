#include "cohortrisk/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::config {

namespace {

using nlohmann::json;

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

void check_fields(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError(join(where, it.key()), "unknown field");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    const std::string field = join(where, key);
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                throw ConfigError(field, "expected a non-negative integer");
            }
        }
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(field, "expected a number");
    }
    out = v.get<T>();
}

template <typename T>
std::vector<T> read_list(const json& j, const char* key, const std::string& where) {
    std::vector<T> out;
    if (!j.contains(key)) return out;
    const std::string field = join(where, key);
    if (!j.at(key).is_array()) throw ConfigError(field, "expected an array");
    std::size_t i = 0;
    for (const auto& v : j.at(key)) {
        const std::string f = field + "[" + std::to_string(i++) + "]";
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(f, "expected an integer");
        } else {
            if (!v.is_number()) throw ConfigError(f, "expected a number");
        }
        out.push_back(v.get<T>());
    }
    return out;
}

}  // namespace

utility::UtilityConfig UtilitySettings::for_point(std::int64_t k_min, double epsilon, std::uint64_t seed) const {
    utility::UtilityConfig c;
    c.cohort_size = cohort_size > 0 ? cohort_size : k_min;
    c.epsilon = epsilon;
    c.repetitions = repetitions;
    c.metric_mean = metric_mean;
    c.metric_sd = metric_sd;
    c.bounds = {clip_lower, clip_upper};
    c.seed = seed;
    c.threshold_pp = threshold_pp;
    return c;
}

risk::SimulationConfig parse_simulation(const json& j, const std::string& where) {
    check_fields(j,
                 {"k_min", "k_max", "epsilon", "lambda_join", "p_churn", "known_fraction", "joiner_known_rate", "rho",
                  "horizon", "n_sim", "seed", "queries_per_day", "q_max", "prior", "gate", "metric"},
                 where);
    risk::SimulationConfig c;
    read(j, "k_min", c.k_min, where);
    read(j, "k_max", c.k_max, where);
    read(j, "epsilon", c.epsilon, where);
    read(j, "lambda_join", c.lambda_join, where);
    read(j, "p_churn", c.p_churn, where);
    read(j, "known_fraction", c.known_fraction, where);
    read(j, "joiner_known_rate", c.joiner_known_rate, where);
    read(j, "rho", c.rho, where);
    read(j, "horizon", c.horizon, where);
    read(j, "n_sim", c.n_sim, where);
    read(j, "seed", c.seed, where);
    read(j, "queries_per_day", c.queries_per_day, where);
    read(j, "q_max", c.q_max, where);
    read(j, "prior", c.prior, where);
    read(j, "gate", c.gate, where);
    if (j.contains("metric")) {
        const std::string mw = where + ".metric";
        const json& m = j.at("metric");
        check_fields(m, {"metrics", "trait_sd", "noise_sd", "shock_sd", "target_sd", "threshold", "trait_persistence"}, mw);
        read(m, "metrics", c.metric.metrics, mw);
        read(m, "trait_sd", c.metric.trait_sd, mw);
        read(m, "noise_sd", c.metric.noise_sd, mw);
        read(m, "shock_sd", c.metric.shock_sd, mw);
        read(m, "target_sd", c.metric.target_sd, mw);
        read(m, "threshold", c.metric.threshold, mw);
        read(m, "trait_persistence", c.metric.trait_persistence, mw);
    }
    try {
        c.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(where, e.what());
    }
    return c;
}

UtilitySettings parse_utility(const json& j, const std::string& where) {
    check_fields(j, {"cohort_size", "repetitions", "metric_mean", "metric_sd", "clip", "threshold_pp"}, where);
    UtilitySettings u;
    read(j, "cohort_size", u.cohort_size, where);
    read(j, "repetitions", u.repetitions, where);
    read(j, "metric_mean", u.metric_mean, where);
    read(j, "metric_sd", u.metric_sd, where);
    read(j, "threshold_pp", u.threshold_pp, where);
    if (j.contains("clip")) {
        auto clip = read_list<double>(j, "clip", where);
        if (clip.size() != 2) throw ConfigError(where + ".clip", "expected [lower, upper]");
        u.clip_lower = clip[0];
        u.clip_upper = clip[1];
    }
    if (u.cohort_size < 0 || u.cohort_size == 1) throw ConfigError(where + ".cohort_size", "must be 0 or at least 2");
    if (u.repetitions < 1) throw ConfigError(where + ".repetitions", "must be positive");
    if (!(u.metric_sd >= 0.0)) throw ConfigError(where + ".metric_sd", "must be non-negative");
    if (!(u.clip_lower < u.clip_upper)) throw ConfigError(where + ".clip", "lower must be below upper");
    return u;
}

ExperimentSpec parse_spec(const json& j) {
    check_fields(j, {"simulation", "utility", "sweep", "sensitivity", "seed"}, "");
    ExperimentSpec s;
    s.base = parse_simulation(j.contains("simulation") ? j.at("simulation") : json::object());
    if (j.contains("utility")) s.utility = parse_utility(j.at("utility"));
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read(j, "seed", seed, "");
        s.seed = seed;
        s.base.seed = seed;
    }
    if (j.contains("sweep")) {
        const json& sw = j.at("sweep");
        check_fields(sw, {"k_min", "epsilon"}, "sweep");
        s.sweep_k_min = read_list<std::int64_t>(sw, "k_min", "sweep");
        s.sweep_epsilon = read_list<double>(sw, "epsilon", "sweep");
        for (auto k : s.sweep_k_min) {
            if (k < 1) throw ConfigError("sweep.k_min", "values must be positive");
        }
        for (auto e : s.sweep_epsilon) {
            if (!(e > 0.0)) throw ConfigError("sweep.epsilon", "values must be positive");
        }
    }
    if (j.contains("sensitivity")) {
        const json& se = j.at("sensitivity");
        check_fields(se, {"known_fraction", "p_churn", "rho", "horizon"}, "sensitivity");
        s.sensitivity.known_fraction = read_list<double>(se, "known_fraction", "sensitivity");
        s.sensitivity.p_churn = read_list<double>(se, "p_churn", "sensitivity");
        s.sensitivity.rho = read_list<double>(se, "rho", "sensitivity");
        s.sensitivity.horizon = read_list<long>(se, "horizon", "sensitivity");
        auto check = [](auto cfg, const char* field) {
            try {
                cfg.validate();
            } catch (const InvalidParameter& e) {
                throw ConfigError(std::string("sensitivity.") + field, e.what());
            }
        };
        for (double v : s.sensitivity.known_fraction) { auto c = s.base; c.known_fraction = v; check(c, "known_fraction"); }
        for (double v : s.sensitivity.p_churn) { auto c = s.base; c.p_churn = v; check(c, "p_churn"); }
        for (double v : s.sensitivity.rho) { auto c = s.base; c.rho = v; check(c, "rho"); }
        for (long v : s.sensitivity.horizon) { auto c = s.base; c.horizon = v; check(c, "horizon"); }
    }
    return s;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("", path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
    }
}

ExperimentSpec load_spec(const std::string& path) { return parse_spec(read_json_file(path)); }

nlohmann::ordered_json to_json(const UtilitySettings& u) {
    nlohmann::ordered_json j;
    j["cohort_size"] = u.cohort_size;
    j["repetitions"] = u.repetitions;
    j["metric_mean"] = u.metric_mean;
    j["metric_sd"] = u.metric_sd;
    j["clip"] = {u.clip_lower, u.clip_upper};
    j["threshold_pp"] = u.threshold_pp;
    return j;
}

}  // namespace cohortrisk::config
