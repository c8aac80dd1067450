// Command line front end: one subcommand per experiment preset.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "timebin/config.hpp"
#include "timebin/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"timebin-lab: pulsed time-bin entanglement simulator and analysis toolkit"};
    app.require_subcommand(1);

    timebin::RunOptions options;
    std::string chosen;
    bool check_config_only = false;

    for (const std::string& name : timebin::preset_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " preset");
        sub->add_option("--config", options.config_path, "JSON config file (preset defaults if omitted)");
        sub->add_option("--set", options.overrides, "override a config field, e.g. --set mu=0.1")
            ->take_all();
        sub->add_option("--out", options.output_dir, "output directory (default: current directory)");
        sub->add_option("--seed", [&options](const std::vector<std::string>& v) {
            options.seed = std::stoull(v.front());
            return true;
        }, "override the RNG seed")->expected(1);
        sub->add_flag("--check-config", check_config_only,
                      "resolve and validate the configuration, then exit");
        if (name == "tac-histogram")
            sub->add_flag("--dump-events", options.dump_events, "also write the event stream (events.txt)");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage error
    }

    try {
        if (check_config_only) {
            const timebin::ExperimentConfig config = timebin::resolve_config(chosen, options);
            const auto diagnostics = timebin::validate_config(config);
            for (const auto& d : diagnostics) std::fprintf(stderr, "config error: %s\n", d.str().c_str());
            return diagnostics.empty() ? 0 : 1;
        }
        const timebin::RunManifest manifest = timebin::run_preset(chosen, options);
        std::printf("%s: wrote %zu files to %s in %.2f s\n", manifest.preset.c_str(),
                    manifest.files.size(), manifest.output_dir.c_str(), manifest.duration_seconds);
        return 0;
    } catch (const timebin::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
