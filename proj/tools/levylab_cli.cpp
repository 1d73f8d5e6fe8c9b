// Command-line front end: one subcommand per experiment, one config file per
// run, optional section.key=value overrides.
//
//   levylab <subcommand> <config-path> [section.key=value ...]
//   levylab selftest
//
// Exit status: 0 all thresholds passed, 1 statistical failure, 2 usage or
// configuration error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "levylab/errors.hpp"
#include "levylab/experiments.hpp"

namespace {

void usage() {
    std::cerr << "usage: levylab <subcommand> <config-path> [section.key=value ...]\n"
              << "subcommands:";
    for (const auto& n : levylab::experiment_names()) std::cerr << ' ' << n;
    std::cerr << "\nThe subcommand must match experiment.name in the config (or override it).\n";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace levylab;
    if (argc < 2) {
        usage();
        return 2;
    }
    const std::string sub = argv[1];
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), sub) == names.end()) {
        std::cerr << "unknown subcommand: " << sub << "\n";
        usage();
        return 2;
    }

    try {
        ExperimentConfig cfg;
        int arg0 = 2;
        if (argc >= 3 && std::string(argv[2]).find('=') == std::string::npos) {
            cfg = ExperimentConfig::from_file(argv[2]);
            arg0 = 3;
        } else if (sub != "selftest") {
            std::cerr << "missing config path\n";
            usage();
            return 2;
        }
        if (cfg.experiment.empty()) {
            cfg.apply_override("experiment.name=" + sub);
        } else if (cfg.experiment != sub) {
            std::cerr << "config names experiment '" << cfg.experiment << "' but subcommand is '"
                      << sub << "'\n";
            return 2;
        }
        for (int i = arg0; i < argc; ++i) cfg.apply_override(argv[i]);

        const ExperimentReport rep = run_experiment(cfg);
        std::cout << rep.to_text();

        const std::string out_dir = cfg.out_dir();
        std::filesystem::create_directories(out_dir);
        const std::string json_path = out_dir + "/" + rep.experiment + "_report.json";
        write_file(json_path, rep.to_json());
        std::cout << "report: " << json_path << "\n";
        return rep.all_pass() ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UnknownExperimentError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
