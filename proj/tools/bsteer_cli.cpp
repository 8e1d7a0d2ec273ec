#include <CLI11.hpp>

#include <iostream>

#include "bsteer/config.hpp"
#include "bsteer/error.hpp"
#include "bsteer/runner.hpp"

namespace {

constexpr int exit_failed_assertion = 1;
constexpr int exit_invalid_config = 2;
constexpr int exit_runtime_error = 3;

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bilinear steering of sign-changing states for the controlled heat equation"};
    app.require_subcommand(1);

    std::string run_path;
    std::string out_dir;
    unsigned threads = 1;
    auto* run = app.add_subcommand("run", "Run an experiment config and write its artifacts");
    run->add_option("config", run_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--threads", threads, "Worker threads for sweep indices")->check(CLI::Range(1u, 256u));

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config without running it");
    validate->add_option("config", validate_path, "Config file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) {
        try {
            const auto config = bsteer::load_config(validate_path);
            const auto diagnostics = bsteer::validate_config(config);
            std::cout << bsteer::format_diagnostics(config, diagnostics);
            return diagnostics.empty() ? 0 : exit_invalid_config;
        } catch (const bsteer::Error& e) {
            std::cout << e.what() << '\n';
            return exit_invalid_config;
        }
    }

    bsteer::ExperimentConfig config;
    try {
        config = bsteer::load_config(run_path);
    } catch (const bsteer::Error& e) {
        std::cerr << "error " << e.what() << '\n';
        return exit_invalid_config;
    }
    bsteer::RunOptions options;
    if (!out_dir.empty()) {
        options.out_dir = out_dir;
    }
    options.threads = threads;
    try {
        const auto result = bsteer::run_experiment(config, options);
        std::cout << bsteer::format_summary(result.summary);
        for (const auto& f : result.failures) {
            std::cerr << f << '\n';
        }
        return result.ok() ? 0 : exit_failed_assertion;
    } catch (const bsteer::Error& e) {
        std::cerr << "error " << e.what() << '\n';
        return e.code() == bsteer::Errc::config ? exit_invalid_config : exit_runtime_error;
    } catch (const std::exception& e) {
        std::cerr << "error " << e.what() << '\n';
        return exit_runtime_error;
    }
}
