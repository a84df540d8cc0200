// lambdalab: validate / run / demo experiment configs.

#include "lambdalab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int run_bundle(const lambdalab::ExperimentConfig& cfg, const std::string& out_dir, const std::string& format) {
    const auto fmt = lambdalab::report_format_from_string(format);
    const lambdalab::ReportBundle bundle = lambdalab::run_experiment(cfg);
    const auto written = lambdalab::emit_report(bundle, out_dir.empty() ? cfg.output_dir : out_dir, fmt);
    for (const auto& r : bundle.records) {
        std::cout << "[" << r.index << "] " << r.type << ": " << r.status << (r.gated ? "" : " (not gated)");
        if (!r.error.empty()) {
            std::cout << " - " << r.error;
        }
        std::cout << "\n";
    }
    for (const auto& p : written) {
        std::cout << "wrote " << p.string() << "\n";
    }
    return lambdalab::exit_status(bundle);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lambda-transformation laboratory: experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format = "both";
    std::optional<std::uint64_t> seed;

    auto* validate = app.add_subcommand("validate", "Check a config file and print its normalized form");
    validate->add_option("--config", config_path, "Config file (YAML)")->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "Run every experiment in a config and write the report");
    run->add_option("--config", config_path, "Config file (YAML)")->required()->check(CLI::ExistingFile);

    auto* demo = app.add_subcommand("demo", "Run the built-in demo config");
    for (auto* sub : {run, demo}) {
        sub->add_option("--out", out_dir, "Output directory (default: output_dir from the config)");
        sub->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
        sub->add_option("--seed", seed, "Override the config seed");
    }
    auto* print_demo = demo->add_flag("--print-config", "Print the demo config and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto cfg = lambdalab::load_config(config_path);
            std::cout << cfg.to_json().dump(2) << "\n";
            return 0;
        }
        if (demo->parsed() && print_demo->count() > 0) {
            std::cout << lambdalab::demo_config_text();
            return 0;
        }
        auto cfg = *run ? lambdalab::load_config(config_path) : lambdalab::parse_config(lambdalab::demo_config_text());
        if (seed) {
            cfg.seed = *seed;
        }
        return run_bundle(cfg, out_dir, format);
    } catch (const lambdalab::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
