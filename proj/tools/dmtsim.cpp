// dmtsim: scenario-driven DMT/IM-DD link simulator.
//
//   dmtsim run -s b2b-dsb -s dsb-dcf-40km -o results/
//   dmtsim run -s scenarios/vsb-10km.json --osnr 38,40,42,44,46 --quick
//   dmtsim list
//
// Scenarios are JSON files (schema in the README); bundled ones live under
// scenarios/ and can be referenced by bare name. Exit code is 0 when every
// requested sweep completed, nonzero on configuration errors.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dmtsim/runner.hpp>
#include <dmtsim/scenario.hpp>

namespace {

std::string resolve_scenario(const std::string& arg, const std::string& scenario_dir) {
    namespace fs = std::filesystem;
    if (fs::exists(arg) && fs::is_regular_file(arg)) return arg;
    const fs::path named = fs::path(scenario_dir) / (arg + ".json");
    if (fs::exists(named)) return named.string();
    throw std::runtime_error("scenario not found: '" + arg + "' (no such file, and no '" +
                             named.string() + "')");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"112 Gbit/s DMT over IM/DD fiber links: scenario runner"};
    app.require_subcommand(1);

    std::vector<std::string> scenario_args;
    std::string out_dir = "results";
    std::string scenario_dir = "scenarios";
    unsigned jobs = 1;
    std::uint64_t seed_override = 0;
    std::vector<double> sweep_override;
    bool quick = false;

    auto* run = app.add_subcommand("run", "Run scenarios and emit CSV datasets");
    run->add_option("-s,--scenario", scenario_args,
                    "Scenario file path or bundled scenario name (repeatable)")
        ->required();
    run->add_option("-o,--out", out_dir, "Output directory for the CSV datasets");
    run->add_option("--scenario-dir", scenario_dir,
                    "Directory searched when a scenario is given by name");
    run->add_option("-j,--jobs", jobs, "Concurrent sweep points (0 = all hardware threads)");
    auto* seed_opt = run->add_option("--seed", seed_override, "Override every scenario seed");
    run->add_option("--osnr", sweep_override,
                    "Override the OSNR sweep, comma-separated dB values (ascending)")
        ->delimiter(',');
    run->add_flag("--quick", quick, "Cap payload at 200 frames per point (CI-sized runs)");

    auto* list = app.add_subcommand("list", "List scenarios available by name");
    list->add_option("--scenario-dir", scenario_dir, "Directory to list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            namespace fs = std::filesystem;
            if (!fs::is_directory(scenario_dir)) {
                std::cerr << "error: no scenario directory '" << scenario_dir << "'\n";
                return 1;
            }
            std::vector<std::string> names;
            for (const auto& entry : fs::directory_iterator(scenario_dir))
                if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
            std::sort(names.begin(), names.end());
            for (const auto& n : names) std::cout << n << "\n";
            return 0;
        }

        std::vector<dmtsim::ScenarioResult> results;
        for (const auto& arg : scenario_args) {
            dmtsim::Scenario s = dmtsim::load_scenario(resolve_scenario(arg, scenario_dir));
            if (seed_opt->count() > 0) s.seed = seed_override;
            if (!sweep_override.empty()) s.osnr_sweep_db = sweep_override;
            if (quick) s.payload_frames = std::min<std::size_t>(s.payload_frames, 200);
            s.validate();

            std::cout << s.name << ": " << s.osnr_sweep_db.size() << " OSNR points, policy "
                      << dmtsim::to_string(s.rate_policy) << "\n";
            auto res = dmtsim::run_scenario(s, jobs);
            for (const auto& rec : res.records) {
                std::cout << "  " << dmtsim::detail::fmt("%.2f", rec.osnr_db) << " dB  "
                          << dmtsim::to_string(rec.outcome);
                if (rec.outcome == dmtsim::PointOutcome::ok) {
                    std::cout << "  rate=" << dmtsim::to_string(rec.rate)
                              << "  ber=" << dmtsim::detail::fmt("%.6e", rec.stats.ber())
                              << " (" << rec.stats.bit_errors << "/" << rec.stats.total_bits
                              << ")";
                }
                std::cout << "\n";
            }
            std::cout << "  required OSNR at BER " << dmtsim::detail::fmt("%.2e", s.target_ber)
                      << ": ";
            if (res.required_osnr_db)
                std::cout << dmtsim::detail::fmt("%.3f", *res.required_osnr_db) << " dB\n";
            else
                std::cout << "not reached\n";
            results.push_back(std::move(res));
        }
        dmtsim::emit_outputs(results, out_dir);
        std::cout << "wrote " << out_dir << "/{ber_vs_osnr,snr_profile,summary}.csv\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
