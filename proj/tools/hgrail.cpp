#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "hgrail/harness.hpp"

using namespace hgrail;

int main(int argc, char** argv) {
    CLI::App app{"H-GRAIL tabletop open-ended learning experiments"};
    app.require_subcommand(1);

    // run ------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run the experiment and write result files");
    std::string config_path, variant_name = "all", out_dir = "results";
    int runs = 10, epochs = 1500;
    uint64_t seed = 1;
    int threads = 0;
    bool smoke = false;
    run->add_option("--config", config_path, "Scenario file (JSON); built-in default if omitted");
    run->add_option("--variant", variant_name, "hgrail|rnd-gd|s-gd|all")->capture_default_str();
    run->add_option("--runs", runs, "Independent runs per variant")->capture_default_str();
    run->add_option("--epochs", epochs, "Epochs per run")->capture_default_str();
    run->add_option("--seed", seed, "Base seed; run i uses seed + i")->capture_default_str();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--threads", threads, "Worker threads (0 = auto)")->capture_default_str();
    run->add_flag("--smoke", smoke, "CI preset: 2 runs x 100 epochs");

    // summarize ------------------------------------------------------------
    auto* summ = app.add_subcommand("summarize", "Recompute summary statistics from result files");
    std::string in_dir;
    summ->add_option("--in", in_dir, "Directory with run outputs")->required();

    // emit-config ----------------------------------------------------------
    auto* emit = app.add_subcommand("emit-config", "Print the default scenario as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            ExperimentConfig cfg;
            cfg.scenario = config_path.empty() ? default_scenario() : load_scenario(config_path);
            if (variant_name != "all") cfg.variants = {variant_from_string(variant_name)};
            cfg.runs = runs;
            cfg.epochs = epochs;
            cfg.base_seed = seed;
            cfg.threads = threads;
            if (smoke) {
                cfg.runs = 2;
                cfg.epochs = 100;
            }
            ResultsBundle bundle = run_experiment(cfg);
            write_outputs(bundle, out_dir);
            std::cout << "wrote results for " << cfg.variants.size() << " variant(s), "
                      << cfg.runs << " run(s) x " << cfg.epochs << " epochs to " << out_dir
                      << "\n";
        } else if (*summ) {
            int epochs_read = 0;
            auto data = read_outputs(in_dir, &epochs_read);
            std::cout << summarize(data, epochs_read).dump(2) << "\n";
        } else if (*emit) {
            std::cout << to_json(default_scenario()).dump(2) << "\n";
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
