#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "bsee/errors.hpp"
#include "bsee/harness.hpp"
#include "bsee/reference_solutions.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Time-stepping experiments for backward stochastic evolution equations"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::string out_dir = "results";
    unsigned threads = 1;
    bool no_timing = false;
    app.add_option("--seed", seed, "Seed for the regression backend (overrides the config)");
    app.add_option("--out-dir", out_dir, "Directory for the CSV and JSON reports")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads for independent cells")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_flag("--no-timing", no_timing, "Write wall_ms = 0 so reports are byte-reproducible");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the refinement matrix of a config");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();

    std::string csv_path, rate_of = "combined";
    auto* fit = app.add_subcommand("fit", "Fit convergence rates to a CSV report");
    fit->add_option("csv", csv_path, "CSV written by run")->required();
    fit->add_option("--rate-of", rate_of, "combined, p or z")->capture_default_str();

    auto* list = app.add_subcommand("list-cases", "List the reference cases");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : bsee::exit_config;
    }

    if (*run) {
        bsee::RunSettings settings;
        settings.threads = threads;
        settings.timing = !no_timing;
        if (app.count("--seed")) settings.seed = seed;
        return bsee::run_command(config_path, out_dir, settings, std::cerr);
    }
    if (*fit) {
        std::ifstream in(csv_path);
        if (!in) {
            std::cerr << "cannot open " << csv_path << '\n';
            return bsee::exit_config;
        }
        try {
            const bsee::RateTarget target = rate_of == "p"   ? bsee::RateTarget::p
                                            : rate_of == "z" ? bsee::RateTarget::z
                                                             : bsee::RateTarget::combined;
            if (rate_of != "p" && rate_of != "z" && rate_of != "combined")
                throw bsee::ConfigError("--rate-of must be combined, p or z");
            std::cout << bsee::fit_csv(in, target).dump(2) << '\n';
        } catch (const bsee::Error& e) {
            std::cerr << "fit error: " << e.what() << '\n';
            return bsee::exit_config;
        }
        return bsee::exit_pass;
    }
    if (*list) {
        for (const auto& id : bsee::case_ids()) {
            const bsee::ReferenceCase c = bsee::get_case(id);
            std::cout << id << '\t' << c.description << '\n';
        }
    }
    return bsee::exit_pass;
}
