#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ksub/errors.hpp"
#include "ksub/harness.hpp"

using namespace ksub;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    long seed_override = -1;
    double tol_scale = 0.0;
};

void add_common(CLI::App* app, CommonArgs& args) {
    app->add_option("--config", args.config_path, "configuration file")->required();
    app->add_option("--out", args.out_dir, "output directory for reports and CSV artifacts");
    app->add_option("--seed", args.seed_override, "override the configured RNG seed");
    app->add_option("--tol-scale", args.tol_scale, "scale factor applied to check tolerances");
}

Config load_config(const CommonArgs& args) {
    Config cfg = Config::load(args.config_path);
    if (args.seed_override >= 0) cfg.seed = static_cast<unsigned long long>(args.seed_override);
    if (args.tol_scale > 0) cfg.tol_scale = args.tol_scale;
    if (const char* w = std::getenv("KSUB_WORKERS")) cfg.workers = std::max(1, std::atoi(w));
    return cfg;
}

int run_one(const CommonArgs& args, const std::string& scenario, const std::string& command) {
    Config cfg = load_config(args);
    bool found = false;
    for (const auto& s : cfg.scenarios)
        if (s.name == scenario) {
            found = true;
            if (s.command != command)
                throw ConfigError("scenario \"" + scenario + "\" is a " + s.command +
                                  " scenario, not " + command);
        }
    if (!found) throw ConfigError("unknown scenario \"" + scenario + "\"");
    RunReport rep = run_scenario(cfg, scenario, args.out_dir);
    for (const CheckResult& c : rep.checks)
        std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << c.claim
                  << " (evidence " << format_double(c.evidence) << ")\n";
    if (!rep.error.empty()) std::cout << "error: " << rep.error << "\n";
    std::cout << (rep.pass ? "PASS " : "FAIL ") << scenario << "\n";
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical geometry engine for unit-Killing fibrations over negatively curved disks"};
    app.require_subcommand(1);

    static const char* kCommands[] = {"verify", "curvature", "geodesic",
                                      "foliate", "cylinder", "sweep"};
    struct Sub {
        CLI::App* app = nullptr;
        CommonArgs args;
        std::string scenario;
        std::string command;
    };
    std::vector<Sub> subs(6);
    for (int i = 0; i < 6; ++i) {
        Sub& s = subs[i];
        s.command = kCommands[i];
        s.app = app.add_subcommand(kCommands[i],
                                   std::string("run a ") + kCommands[i] + " scenario");
        add_common(s.app, s.args);
        s.app->add_option("--scenario", s.scenario, "scenario name in the config")->required();
    }

    CommonArgs suite_args;
    CLI::App* suite = app.add_subcommand("suite", "run every scenario tagged regression");
    add_common(suite, suite_args);

    try {
        app.parse(argc, argv);
        for (Sub& s : subs)
            if (s.app->parsed()) return run_one(s.args, s.scenario, s.command);
        if (suite->parsed()) {
            Config cfg = load_config(suite_args);
            SuiteReport rep = run_suite(cfg, suite_args.out_dir);
            std::cout << rep.summary_text();
            return rep.all_pass() ? 0 : 1;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
