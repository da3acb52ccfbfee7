#include "cohortrisk/risk.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "cohortrisk/adversary.hpp"
#include "cohortrisk/dp.hpp"
#include "cohortrisk/errors.hpp"

namespace cohortrisk::risk {

namespace {

enum Purpose : std::uint64_t {
    kInit = 1,
    kDynamics = 2,
    kTraits = 3,
    kKnowledge = 4,
    kQuery = 5,
    kValues = 6,
    kNoise = 7,
};

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::size_t order_index(double alpha, std::size_t n) {
    // 1-based index ceil(alpha * n); the epsilon guards against 0.95 * 100 landing on 95.000000000000014.
    auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

void SimulationConfig::validate() const {
    if (k_min < 1) throw InvalidParameter("k_min must be positive");
    if (effective_k_max() < k_min) throw InvalidParameter("k_max must be at least k_min");
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
    if (!(lambda_join >= 0.0)) throw InvalidParameter("lambda_join must be non-negative");
    if (!(p_churn >= 0.0 && p_churn <= 1.0)) throw InvalidParameter("p_churn must lie in [0, 1]");
    if (!(known_fraction >= 0.0 && known_fraction <= 1.0)) throw InvalidParameter("known_fraction must lie in [0, 1]");
    if (!(joiner_known_rate >= 0.0 && joiner_known_rate <= 1.0)) {
        throw InvalidParameter("joiner_known_rate must lie in [0, 1]");
    }
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidParameter("rho must lie in [0, 1)");
    if (horizon < 0) throw InvalidParameter("horizon must be non-negative");
    if (n_sim < 1) throw InvalidParameter("n_sim must be positive");
    if (queries_per_day < 0) throw InvalidParameter("queries_per_day must be non-negative");
    if (q_max < 1) throw InvalidParameter("q_max must be positive");
    if (!(prior > 0.0 && prior < 1.0)) throw InvalidParameter("prior must lie in (0, 1)");
    if (metric.metrics < 1) throw InvalidParameter("metric.metrics must be positive");
    if (!(metric.trait_persistence >= 0.0 && metric.trait_persistence <= 1.0)) {
        throw InvalidParameter("metric.trait_persistence must lie in [0, 1]");
    }
    if (!(metric.trait_sd >= 0.0 && metric.noise_sd >= 0.0 && metric.shock_sd >= 0.0 && metric.target_sd >= 0.0)) {
        throw InvalidParameter("metric standard deviations must be non-negative");
    }
}

RateModel rate_model(const MetricModel& mm) {
    // Daily rate q(w) = Phi((w - threshold) / s) with w ~ N(0, shock_sd^2); trapezoid over +-8 sd.
    const double s = std::sqrt(mm.trait_sd * mm.trait_sd + mm.noise_sd * mm.noise_sd);
    auto rate_at = [&](double w) {
        if (s == 0.0) return w > mm.threshold ? 1.0 : 0.0;
        return 0.5 * std::erfc(-(w - mm.threshold) / (s * std::sqrt(2.0)));
    };
    if (mm.shock_sd == 0.0) return {rate_at(0.0), 0.0};
    const int steps = 4000;
    const double lo = -8.0 * mm.shock_sd, h = 16.0 * mm.shock_sd / steps;
    double m1 = 0.0, m2 = 0.0, wsum = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double w = lo + i * h;
        const double z = w / mm.shock_sd;
        const double weight = std::exp(-0.5 * z * z) * ((i == 0 || i == steps) ? 0.5 : 1.0);
        const double q = rate_at(w);
        m1 += weight * q;
        m2 += weight * q * q;
        wsum += weight;
    }
    m1 /= wsum;
    m2 /= wsum;
    return {m1, std::max(0.0, m2 - m1 * m1)};
}

Query generate_query(long t, const Query* previous, double rho, int metrics, Rng& rng) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidParameter("rho must lie in [0, 1)");
    if (metrics < 1) throw InvalidParameter("query mix needs at least one metric");
    // Both draws are always taken so the stream position does not depend on rho.
    const bool repeat = rng.uniform() < rho;
    const int fresh = static_cast<int>(rng.index(static_cast<std::uint64_t>(metrics)));
    Query q;
    q.day = t;
    q.metric = (repeat && previous != nullptr) ? previous->metric : fresh;
    return q;
}

LossTrajectory simulate_run(const SimulationConfig& cfg, std::int64_t run) {
    const auto r = static_cast<std::uint64_t>(run);
    Rng init = Rng::stream(cfg.seed, r, kInit);
    Rng dyn = Rng::stream(cfg.seed, r, kDynamics);
    Rng traits_rng = Rng::stream(cfg.seed, r, kTraits);
    Rng know = Rng::stream(cfg.seed, r, kKnowledge);
    Rng query_rng = Rng::stream(cfg.seed, r, kQuery);
    Rng values = Rng::stream(cfg.seed, r, kValues);
    Rng noise = Rng::stream(cfg.seed, r, kNoise);

    const MetricModel& mm = cfg.metric;
    const int M = mm.metrics;
    const std::int64_t kmax = cfg.effective_k_max();
    const auto span = static_cast<double>(kmax - cfg.k_min + 1);
    const std::int64_t n0 = cfg.k_min + static_cast<std::int64_t>(std::floor(init.uniform() * span));

    std::vector<double> target(M);
    for (auto& x : target) x = init.normal() * mm.target_sd;

    // Everyone except the target; the target stays in the cohort for the whole run.
    std::vector<float> traits;
    std::vector<std::int32_t> stamp;  // day each trait was last brought up to date
    std::vector<std::uint8_t> known;
    long today = 0;
    auto add_member = [&](bool is_known) {
        for (int m = 0; m < M; ++m) {
            traits.push_back(static_cast<float>(traits_rng.normal() * mm.trait_sd));
            stamp.push_back(static_cast<std::int32_t>(today));
        }
        known.push_back(is_known ? 1 : 0);
    };
    const bool drifting = mm.trait_persistence < 1.0;
    const std::int64_t others0 = n0 - 1;
    for (std::int64_t i = 0; i < others0; ++i) add_member(false);
    {
        std::vector<adversary::MemberId> ids(static_cast<std::size_t>(n0));
        for (std::int64_t i = 0; i < n0; ++i) ids[static_cast<std::size_t>(i)] = i;
        const auto k = adversary::init_knowledge(ids, others0, cfg.known_fraction, know);
        for (const auto& rec : k.known) known[static_cast<std::size_t>(rec.id)] = 1;
    }

    const RateModel rate = rate_model(mm);
    const double q0 = rate.q0;
    const double vq0 = rate.vq0;
    const double vb = std::max(q0 * (1.0 - q0), 1e-12);

    auto belief = adversary::AdversaryBelief::membership(cfg.prior);
    const double joiner_known_p = cfg.known_fraction * cfg.joiner_known_rate;
    const int per_day = std::min(cfg.queries_per_day, cfg.q_max);

    LossTrajectory out;
    out.run = run;
    out.loss.reserve(static_cast<std::size_t>(cfg.horizon));
    out.cohort_size.reserve(static_cast<std::size_t>(cfg.horizon));
    out.flag.reserve(static_cast<std::size_t>(cfg.horizon));

    Query prev;
    bool have_prev = false;
    double loss = 0.0;
    for (long t = 1; t <= cfg.horizon; ++t) {
        today = t;
        // Churn: one draw per current member, swap-remove leavers.
        std::size_t n = known.size();
        for (std::size_t i = 0; i < n;) {
            if (dyn.uniform() < cfg.p_churn) {
                --n;
                if (i != n) {
                    std::copy_n(traits.begin() + static_cast<std::ptrdiff_t>(n * M), M,
                                traits.begin() + static_cast<std::ptrdiff_t>(i * M));
                    std::copy_n(stamp.begin() + static_cast<std::ptrdiff_t>(n * M), M,
                                stamp.begin() + static_cast<std::ptrdiff_t>(i * M));
                    known[i] = known[n];
                }
                known.resize(n);
                traits.resize(n * M);
                stamp.resize(n * M);
                // Slot i now holds an untested member; test it next.
            } else {
                ++i;
            }
        }
        const std::int64_t joins = dyn.poisson(cfg.lambda_join);
        for (std::int64_t j = 0; j < joins; ++j) add_member(know.uniform() < joiner_known_p);

        const auto others = static_cast<std::int64_t>(known.size());
        const std::int64_t N = others + 1;
        std::uint8_t flag = kFlagNone;
        if (others == 0) {
            flag |= kFlagDegenerate;
            out.degenerate = true;
        }

        for (int qi = 0; qi < per_day; ++qi) {
            const Query q = generate_query(t, have_prev ? &prev : nullptr, cfg.rho, M, query_rng);
            prev = q;
            have_prev = true;

            const double shock = values.normal() * mm.shock_sd;
            std::int64_t known_count = 0, unknown_count = 0, n_known = 0;
            for (std::size_t i = 0; i < known.size(); ++i) {
                const std::size_t slot = i * M + static_cast<std::size_t>(q.metric);
                if (drifting && stamp[slot] != t) {
                    // k AR(1) steps at once: exact in distribution.
                    const double decay = std::pow(mm.trait_persistence, static_cast<double>(t - stamp[slot]));
                    traits[slot] = static_cast<float>(decay * traits[slot] +
                                                      std::sqrt(1.0 - decay * decay) * mm.trait_sd * traits_rng.normal());
                    stamp[slot] = static_cast<std::int32_t>(t);
                }
                const double latent = traits[slot] + shock + mm.noise_sd * values.normal();
                const bool z = latent > mm.threshold;
                if (known[i]) {
                    ++n_known;
                    known_count += z;
                } else {
                    unknown_count += z;
                }
            }
            const double zt = (target[q.metric] + mm.noise_sd * values.normal() > mm.threshold) ? 1.0 : 0.0;

            if (cfg.gate && N < cfg.k_min) {
                noise.uniform();  // keep the noise stream aligned across configs
                flag |= kFlagSuppressed;
                continue;
            }
            const double truth = zt + static_cast<double>(known_count + unknown_count);
            const auto release = dp::laplace_mechanism(truth, dp::Sensitivity::count(), cfg.epsilon, noise, true);

            // Gaussian update of the daily rate from the known members' indicators.
            const double nk = static_cast<double>(n_known);
            const double nu = static_cast<double>(others - n_known);
            double vq = 0.0, qh = q0;
            if (vq0 > 0.0) {
                vq = 1.0 / (1.0 / vq0 + nk / vb);
                qh = vq * (q0 / vq0 + static_cast<double>(known_count) / vb);
            }
            adversary::CountObservationModel model;
            model.known_count = static_cast<double>(known_count);
            model.unknown_mean = nu * qh;
            model.unknown_sd = std::sqrt(nu * vb + nu * nu * vq);
            model.target_value = zt;
            const double l_in =
                adversary::log_observation_likelihood(release, adversary::Hypothesis::target_in_cohort, model);
            const double l_out =
                adversary::log_observation_likelihood(release, adversary::Hypothesis::target_not_in_cohort, model);
            belief.update_log({{adversary::kIn, l_in}, {adversary::kOut, l_out}});
            out.epsilon_spent += release.epsilon_spent;
            ++out.releases;
        }
        if (per_day == 0) flag |= kFlagSuppressed;

        loss = adversary::privacy_loss_value(belief.posterior(adversary::kIn), cfg.prior);
        out.loss.push_back(loss);
        out.cohort_size.push_back(N);
        out.flag.push_back(flag);
    }
    out.terminal = loss;
    return out;
}

int default_workers() {
    if (const char* env = std::getenv("COHORTRISK_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<LossTrajectory> run_simulation(const SimulationConfig& config, int workers) {
    config.validate();
    if (workers <= 0) workers = default_workers();
    const auto n = static_cast<std::size_t>(config.n_sim);
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    std::vector<LossTrajectory> out(n);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t r = next++; r < n; r = next++) out[r] = simulate_run(config, static_cast<std::int64_t>(r));
    };
    if (workers <= 1) {
        work();
        return out;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return out;
}

double p_var(std::vector<double> losses, double alpha) {
    if (losses.empty()) throw InvalidParameter("p_var of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
    const std::size_t k = order_index(alpha, losses.size());
    std::nth_element(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(k - 1), losses.end());
    return losses[k - 1];
}

TailMean cp_var_detail(std::vector<double> losses, double alpha) {
    if (losses.empty()) throw InvalidParameter("cp_var of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
    std::sort(losses.begin(), losses.end());
    const double var = losses[order_index(alpha, losses.size()) - 1];
    auto first = std::upper_bound(losses.begin(), losses.end(), var);
    if (first == losses.end()) return {var, true};
    double sum = 0.0;
    for (auto it = first; it != losses.end(); ++it) sum += *it;
    return {sum / static_cast<double>(losses.end() - first), false};
}

double cp_var(std::vector<double> losses, double alpha) { return cp_var_detail(std::move(losses), alpha).value; }

RiskReport risk_report(const std::vector<double>& terminal_losses, std::int64_t degenerate_runs) {
    if (terminal_losses.empty()) throw InvalidParameter("risk report needs at least one run");
    std::vector<double> sorted = terminal_losses;
    std::sort(sorted.begin(), sorted.end());
    RiskReport rep;
    rep.p_var_95 = p_var(sorted, 0.95);
    rep.p_var_99 = p_var(sorted, 0.99);
    const auto tail = cp_var_detail(sorted, 0.95);
    rep.cp_var_95 = tail.value;
    rep.degenerate_tail = tail.degenerate_tail;
    rep.max_loss = sorted.back();
    rep.n_sim = static_cast<std::int64_t>(sorted.size());
    rep.degenerate_runs = degenerate_runs;
    return rep;
}

RiskReport risk_report(const std::vector<LossTrajectory>& trajectories) {
    std::vector<double> terminal;
    terminal.reserve(trajectories.size());
    std::int64_t degenerate = 0;
    for (const auto& tr : trajectories) {
        terminal.push_back(tr.terminal);
        degenerate += tr.degenerate ? 1 : 0;
    }
    return risk_report(terminal, degenerate);
}

std::vector<double> p_var_by_day(const std::vector<LossTrajectory>& trajectories, double alpha) {
    if (trajectories.empty()) return {};
    const std::size_t T = trajectories.front().loss.size();
    std::vector<double> out(T);
    std::vector<double> col(trajectories.size());
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t r = 0; r < trajectories.size(); ++r) col[r] = trajectories[r].loss.at(t);
        out[t] = p_var(col, alpha);
    }
    return out;
}

nlohmann::ordered_json to_json(const SimulationConfig& c) {
    nlohmann::ordered_json j;
    j["k_min"] = c.k_min;
    j["k_max"] = c.effective_k_max();
    j["epsilon"] = c.epsilon;
    j["lambda_join"] = c.lambda_join;
    j["p_churn"] = c.p_churn;
    j["known_fraction"] = c.known_fraction;
    j["joiner_known_rate"] = c.joiner_known_rate;
    j["rho"] = c.rho;
    j["horizon"] = c.horizon;
    j["n_sim"] = c.n_sim;
    j["seed"] = c.seed;
    j["queries_per_day"] = c.queries_per_day;
    j["q_max"] = c.q_max;
    j["prior"] = c.prior;
    j["gate"] = c.gate;
    j["metric"] = {{"metrics", c.metric.metrics},
                   {"trait_sd", c.metric.trait_sd},
                   {"noise_sd", c.metric.noise_sd},
                   {"shock_sd", c.metric.shock_sd},
                   {"target_sd", c.metric.target_sd},
                   {"threshold", c.metric.threshold},
                   {"trait_persistence", c.metric.trait_persistence}};
    return j;
}

nlohmann::ordered_json to_json(const RiskReport& r) {
    nlohmann::ordered_json j;
    j["p_var_95"] = r.p_var_95;
    j["p_var_99"] = r.p_var_99;
    j["cp_var_95"] = r.cp_var_95;
    j["max_loss"] = r.max_loss;
    j["n_sim"] = r.n_sim;
    j["degenerate_runs"] = r.degenerate_runs;
    j["degenerate_tail"] = r.degenerate_tail;
    return j;
}

void write_trajectories_csv(std::ostream& out, const std::vector<LossTrajectory>& trajectories) {
    out << "run,t,loss,cohort_size,flag\n";
    for (const auto& tr : trajectories) {
        for (std::size_t t = 0; t < tr.loss.size(); ++t) {
            out << tr.run << ',' << (t + 1) << ',' << fmt(tr.loss[t]) << ',' << tr.cohort_size[t] << ','
                << static_cast<int>(tr.flag[t]) << '\n';
        }
    }
}

std::vector<LossTrajectory> read_trajectories_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "run,t,loss,cohort_size,flag") {
        throw ValidationError("trajectory CSV: unexpected header");
    }
    std::map<std::int64_t, LossTrajectory> runs;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[5];
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(ss, f[i], ',')) throw ValidationError("trajectory CSV line " + std::to_string(lineno));
        }
        try {
            const auto run = std::stoll(f[0]);
            auto& tr = runs[run];
            tr.run = run;
            const long t = std::stol(f[1]);
            if (t != static_cast<long>(tr.loss.size()) + 1) {
                throw ValidationError("trajectory CSV line " + std::to_string(lineno) + ": days out of order");
            }
            tr.loss.push_back(std::stod(f[2]));
            tr.cohort_size.push_back(std::stoll(f[3]));
            const int flag = std::stoi(f[4]);
            tr.flag.push_back(static_cast<std::uint8_t>(flag));
            if (flag & kFlagDegenerate) tr.degenerate = true;
            tr.terminal = tr.loss.back();
        } catch (const std::logic_error&) {
            throw ValidationError("trajectory CSV line " + std::to_string(lineno) + ": bad number");
        }
    }
    std::vector<LossTrajectory> out;
    out.reserve(runs.size());
    for (auto& [_, tr] : runs) out.push_back(std::move(tr));
    return out;
}

}  // namespace cohortrisk::risk
