// cohortrisk: run privacy-risk simulations, sweeps and sensitivity analyses.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cohortrisk/errors.hpp"
#include "cohortrisk/experiment.hpp"

namespace ex = cohortrisk::experiment;

int main(int argc, char** argv) {
    CLI::App app{"Privacy-loss-at-risk simulation toolkit"};
    app.set_version_flag("--version", std::string(ex::version()));
    app.require_subcommand(1);

    int workers = 0;
    app.add_option("-j,--workers", workers, "Worker threads (default: $COHORTRISK_WORKERS or core count)")
        ->check(CLI::NonNegativeNumber);

    std::string config, spec, out, in;
    std::uint64_t seed = 0;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo run for one configuration");
    sim->add_option("--config", config, "Config JSON")->required();
    sim->add_option("--seed", seed, "RNG seed")->required();
    sim->add_option("--out", out, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "k_min x epsilon grid (risk and utility)");
    sweep->add_option("--spec", spec, "Experiment spec JSON")->required();
    sweep->add_option("--out", out, "Output directory")->required();

    auto* sens = app.add_subcommand("sensitivity", "One-at-a-time sensitivity around the baseline");
    sens->add_option("--spec", spec, "Experiment spec JSON")->required();
    sens->add_option("--out", out, "Output directory")->required();

    auto* rep = app.add_subcommand("report", "Re-summarize an output directory");
    rep->add_option("--in", in, "Directory written by simulate/sweep/sensitivity")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const auto r = ex::cmd_simulate(config, seed, out, workers);
            std::cout << "p_var_95=" << r.p_var_95 << " p_var_99=" << r.p_var_99 << " cp_var_95=" << r.cp_var_95
                      << " max=" << r.max_loss << " n_sim=" << r.n_sim << "\n";
        } else if (*sweep) {
            const auto rows = ex::cmd_sweep(spec, out, workers);
            ex::write_sweep_csv(std::cout, rows);
        } else if (*sens) {
            const auto res = ex::cmd_sensitivity(spec, out, workers);
            ex::write_sensitivity_csv(std::cout, res.rows);
        } else if (*rep) {
            std::cout << ex::cmd_report(in).dump(2) << "\n";
        }
    } catch (const cohortrisk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
