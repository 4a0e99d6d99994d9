// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: validate and run scenario files, replay the
// mission presets and run the density stress scenario. All simulation logic
// lives in the library; this binary only maps flags to scenario objects and
// writes the result files.

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dronecast/scenario.hpp"
#include "dronecast/simcore.hpp"

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("DRONECAST_SIM_OUT");
    return env != nullptr && *env != '\0' ? env : "out";
}

int run_and_write(const dronecast::Scenario& scenario, const std::string& out_dir) {
    const auto report = dronecast::run(scenario);
    dronecast::write_outputs(report, scenario, out_dir);
    std::cout << dronecast::summary_text(report);
    std::cout << "outputs written to " << out_dir << "\n";
    return 0;
}

// Multi-seed sweep; jobs > 1 parallelizes across seeds only.
int run_sweep(const dronecast::Scenario& base, const std::vector<std::uint64_t>& seeds,
              const std::string& out_dir, unsigned jobs) {
    if (seeds.size() <= 1) {
        dronecast::Scenario sc = base;
        if (!seeds.empty()) sc.seed = seeds.front();
        return run_and_write(sc, out_dir);
    }
    std::vector<dronecast::SimulationReport> reports(seeds.size());
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    const unsigned n_workers = std::max(1u, std::min<unsigned>(jobs, seeds.size()));
    for (unsigned w = 0; w < n_workers; ++w) {
        workers.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1)) {
                dronecast::Scenario sc = base;
                sc.seed = seeds[i];
                reports[i] = dronecast::run(sc);
            }
        });
    }
    for (auto& t : workers) t.join();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        dronecast::Scenario sc = base;
        sc.seed = seeds[i];
        const std::string dir = out_dir + "/seed-" + std::to_string(seeds[i]);
        dronecast::write_outputs(reports[i], sc, dir);
        std::cout << "== seed " << seeds[i] << " ==\n" << dronecast::summary_text(reports[i]);
    }
    std::cout << "outputs written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drone-to-drone communication simulator"};
    app.require_subcommand(1);

    std::string out_dir = default_out_dir();
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    unsigned jobs = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "master random seed")->default_val(0);
        cmd->add_option("--seeds", seeds, "seed sweep (overrides --seed)")->delimiter(',');
        cmd->add_option("--jobs", jobs, "parallel workers for seed sweeps")->default_val(1);
    };

    auto* cmd_run = app.add_subcommand("run", "run a scenario file");
    std::string scenario_path;
    cmd_run->add_option("scenario", scenario_path, "scenario file")->required();
    add_common(cmd_run);

    auto* cmd_mission = app.add_subcommand("mission", "replicate a flight mission");
    int mission_id = 1;
    std::string radio = "experimental";
    cmd_mission->add_option("--id", mission_id, "mission id")
        ->required()
        ->check(CLI::Range(1, 3));
    cmd_mission->add_option("--radio", radio, "radio hardware")
        ->check(CLI::IsMember({"experimental", "cots"}));
    add_common(cmd_mission);

    auto* cmd_density = app.add_subcommand("density", "drone density stress scenario");
    int n_drones = 100;
    double area_km2 = 1.0;
    double duration = 60.0;
    cmd_density->add_option("--n", n_drones, "number of drones")->required();
    cmd_density->add_option("--area-km2", area_km2, "area in square kilometers")
        ->default_val(1.0);
    cmd_density->add_option("--duration", duration, "simulated seconds")->default_val(60.0);
    add_common(cmd_density);

    auto* cmd_validate = app.add_subcommand("validate", "validate a scenario file");
    std::string validate_path;
    cmd_validate->add_option("scenario", validate_path, "scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(cmd_validate)) {
            try {
                dronecast::load_scenario_file(validate_path);
            } catch (const dronecast::ConfigError& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
            std::cout << "OK\n";
            return 0;
        }
        if (app.got_subcommand(cmd_run)) {
            dronecast::Scenario sc;
            try {
                sc = dronecast::load_scenario_file(scenario_path);
            } catch (const dronecast::ConfigError& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
            if (seeds.empty()) sc.seed = seed;
            return run_sweep(sc, seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds,
                             out_dir, jobs);
        }
        if (app.got_subcommand(cmd_mission)) {
            const auto kind = radio == "cots" ? dronecast::RadioKind::kCots
                                              : dronecast::RadioKind::kExperimental;
            const auto base = dronecast::mission_scenario(mission_id, kind, seed);
            return run_sweep(base, seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds,
                             out_dir, jobs);
        }
        if (app.got_subcommand(cmd_density)) {
            const auto base = dronecast::density_scenario(n_drones, area_km2, duration, seed);
            return run_sweep(base, seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds,
                             out_dir, jobs);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
