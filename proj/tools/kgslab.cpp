// kgslab: run one experiment from a config file.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "kgs/cli_runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments for the radial Klein-Gordon-Schrodinger system"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 0;
    auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
    run_cmd->add_option("--config,-c", config_path, "config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out,-o", out_dir, "output directory (overrides the config's out)");
    run_cmd->add_option("--threads,-j", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);

    auto* list_cmd = app.add_subcommand("list-experiments", "print the available experiments");

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        for (auto e : kgs::all_experiments()) std::printf("%-18s %s\n", kgs::experiment_name(e), kgs::experiment_summary(e));
        return 0;
    }

    try {
        auto cfg = kgs::load_config(config_path);
        kgs::validate(cfg);
        const int nthreads = threads > 0 ? threads : cfg.threads;
        const std::string dir = out_dir.empty() ? cfg.out : out_dir;
        const auto outcome = kgs::run(cfg, dir, nthreads);
        std::printf("%s: %s\n", kgs::experiment_name(*cfg.experiment), outcome.message.c_str());
        for (const auto& a : outcome.artifacts) std::printf("  %s/%s\n", dir.c_str(), a.c_str());
        return outcome.exit_status;
    } catch (const kgs::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
