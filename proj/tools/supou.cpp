#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "supou/commands.hpp"
#include "supou/parallel.hpp"

namespace {

int report(const char* kind, const std::string& message, int code) {
    supou::Json err = {{"error", {{"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph supOU processes: simulation, moments and GMM estimation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned jobs = supou::default_jobs();
    app.add_option("--config", config_path, "run configuration (JSON, or a provenance.json)")->required();
    app.add_option("--out", out, "output directory (overrides output.directory)");
    app.add_option("--seed", seed, "master seed (overrides sim.master_seed)");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "simulate paths and write path_<i>.csv");
    auto* moments = app.add_subcommand("moments", "theoretical mean, variance and autocovariances");
    auto* estimate = app.add_subcommand("estimate", "two-step GMM on one path CSV");
    std::string path_csv;
    estimate->add_option("path", path_csv, "path CSV")->required();
    auto* mc = app.add_subcommand("mc-study", "simulate and estimate many paths");
    auto* check = app.add_subcommand("check", "stability, existence, CLT and zeta diagnostics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const supou::RunConfig cfg = supou::RunConfig::from_file(config_path, seed);
        supou::CommandOptions opt{out, jobs};
        supou::Json summary;
        if (*simulate) summary = supou::cmd_simulate(cfg, opt);
        else if (*moments) summary = supou::cmd_moments(cfg, opt);
        else if (*estimate) summary = supou::cmd_estimate(cfg, path_csv, opt);
        else if (*mc) summary = supou::cmd_mc_study(cfg, opt);
        else if (*check) summary = supou::cmd_check(cfg, opt);
        std::cout << summary.dump(2) << "\n";
        return 0;
    } catch (const supou::ConfigError& e) {
        return report("config", e.what(), 2);
    } catch (const supou::DomainError& e) {
        return report("domain", e.what(), 3);
    } catch (const supou::IoError& e) {
        return report("io", e.what(), 4);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
}
