// evackit command line: scenario validation, single-run execution with
// artifact export, and oracle cross-checks of the production solvers.
//
// Exit codes: 0 success, 1 runtime error, 2 validation failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evackit/busevac.hpp"
#include "evackit/common.hpp"
#include "evackit/cover.hpp"
#include "evackit/dispatch.hpp"
#include "evackit/oracle.hpp"
#include "evackit/scenario.hpp"
#include "evackit/sim.hpp"

namespace fs = std::filesystem;
using namespace evackit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int cmd_validate(const std::string& scenario_path, bool quiet) {
    sim::Scenario scenario;
    try {
        scenario = sim::load_scenario(scenario_path);
    } catch (const std::exception& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitValidation;
    }
    auto problems = scenario.validate();
    if (problems.empty()) {
        if (!quiet)
            std::cout << "ok: " << scenario_path << "\n";
        return kExitOk;
    }
    for (const auto& p : problems)
        std::cerr << "invalid: " << p << "\n";
    return kExitValidation;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<std::string> solver, bool quiet) {
    sim::Scenario scenario = sim::load_scenario(scenario_path);
    if (seed) {
        scenario.rng_seed = *seed;
        scenario.evo_config.rng_seed = *seed;
    }
    if (solver)
        scenario.solver_mode = solver_mode_from_string(*solver);

    sim::SimResult result = sim::run(scenario);

    fs::create_directories(out_dir);
    fs::path out(out_dir);
    write_file(out / "trace.jsonl", sim::trace_to_jsonl(result.trace));
    write_file(out / "metrics.json", result.metrics.to_json().dump(2) + "\n");
    {
        std::ostringstream csv;
        csv << "tet_s,ct_s,max_patient_wait_s,total_evacuated,notification_latency_s\n"
            << result.metrics.tet << "," << result.metrics.ct << ","
            << result.metrics.max_patient_wait << "," << result.metrics.total_evacuated << ","
            << result.metrics.notification_latency << "\n";
        write_file(out / "metrics.csv", csv.str());
    }
    write_file(out / "cover.json", cover::assignment_to_json(result.cover_assignment).dump(2) + "\n");
    write_file(out / "dispatch_plan.json",
               dispatch::plan_to_json(result.dispatch_plan).dump(2) + "\n");
    write_file(out / "dispatch_waits.csv", dispatch::waits_to_csv(result.dispatch_plan));
    write_file(out / "evac_plan.json", busevac::plan_to_json(result.evac_plan).dump(2) + "\n");
    write_file(out / "evac_pickups.csv",
               busevac::pickup_summary_csv(result.evac_plan, scenario.pickups));
    {
        std::ostringstream log;
        for (const auto& n : result.notifications)
            log << ccu::notification_to_json(n).dump() << "\n";
        write_file(out / "notifications.jsonl", log.str());
    }
    for (const auto& [node, csv] : result.signal_traces)
        write_file(out / ("signal_" + std::to_string(node) + ".csv"), csv);

    if (!quiet) {
        std::cout << "metric                     value\n"
                  << "-------------------------  ----------\n"
                  << "TET (s)                    " << result.metrics.tet << "\n"
                  << "CT (s)                     " << result.metrics.ct << "\n"
                  << "max patient wait (s)       " << result.metrics.max_patient_wait << "\n"
                  << "total evacuated            " << result.metrics.total_evacuated << "\n"
                  << "notification latency (s)   " << result.metrics.notification_latency
                  << "\n";
        std::cout << "artifacts written to " << out_dir << "\n";
    }
    return kExitOk;
}

int cmd_oracle(const std::string& scenario_path, const std::string& module, bool quiet) {
    sim::Scenario s = sim::load_scenario(scenario_path);
    auto problems = s.validate();
    if (!problems.empty()) {
        for (const auto& p : problems)
            std::cerr << "invalid: " << p << "\n";
        return kExitValidation;
    }

    bool pass = false;
    std::ostringstream report;
    if (module == "cover") {
        if (s.hospitals.size() > cover::kExactMaxHospitals ||
            s.communities.size() > cover::kExactMaxCommunities)
            throw InstanceTooLargeError("cover oracle limited to 4 hospitals / 8 communities");
        auto solved = cover::solve_accp(s.network, s.hospitals, s.communities,
                                        s.coverage_threshold, s.t0, SolverMode::exact);
        auto ref = oracle::accp_optimum(s.network, s.hospitals, s.communities,
                                        s.coverage_threshold, s.t0);
        pass = solved.total_covered_population == ref.covered_population &&
               std::abs(solved.total_response_time - ref.response_time) < 1e-6;
        report << "cover: solver (" << solved.total_covered_population << ", "
               << solved.total_response_time << ") vs oracle (" << ref.covered_population << ", "
               << ref.response_time << ")";
    } else if (module == "dispatch") {
        std::size_t ambulances = 0;
        for (const auto& f : s.fleets)
            ambulances += static_cast<std::size_t>(f.ambulances);
        if (ambulances > dispatch::kExactMaxAmbulances ||
            s.patients.size() > dispatch::kExactMaxPatients)
            throw InstanceTooLargeError("dispatch oracle limited to 3 ambulances / 6 patients");
        auto plan = dispatch::solve_group_dispatch(s.network, s.fleets, s.patients, s.t0,
                                                   SolverMode::exact, s.dispatch_params);
        Seconds ref = oracle::dispatch_optimum(s.network, s.fleets, s.patients, s.t0,
                                               s.dispatch_params);
        pass = std::abs(plan.objective - ref) < 1e-6;
        report << "dispatch: solver " << plan.objective << " vs oracle " << ref;
    } else if (module == "busevac") {
        std::size_t buses = 0;
        for (const auto& d : s.depots)
            buses += static_cast<std::size_t>(d.fleet);
        if (buses > busevac::kExactMaxBuses || s.pickups.size() > busevac::kExactMaxPickups ||
            s.shelters.size() > busevac::kExactMaxShelters)
            throw InstanceTooLargeError("busevac oracle limited to 2 buses / 3 pickups / 2 shelters");
        auto plan = busevac::solve_ebpd(s.network, s.depots, s.pickups, s.shelters, s.deadline,
                                        s.t0, SolverMode::exact, s.bus_params);
        auto ref = oracle::ebpd_optimum(s.network, s.depots, s.pickups, s.shelters, s.deadline,
                                        s.t0, s.bus_params);
        pass = plan.total_evacuated == ref.evacuated &&
               std::abs(plan.completion_time - ref.completion) < 1e-6;
        report << "busevac: solver (" << plan.total_evacuated << ", " << plan.completion_time
               << ") vs oracle (" << ref.evacuated << ", " << ref.completion << ")";
    } else {
        std::cerr << "unknown module: " << module << " (expected cover|dispatch|busevac)\n";
        return kExitValidation;
    }

    if (!quiet)
        std::cout << report.str() << " -> " << (pass ? "pass" : "FAIL") << "\n";
    return pass ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evackit: emergency evacuation planning and simulation toolkit"};
    app.require_subcommand(1);

    std::string default_out = "out";
    if (const char* env = std::getenv("EVACKIT_OUT"))
        default_out = env;

    std::string scenario_path;
    std::string out_dir = default_out;
    std::string module;
    std::string solver;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    validate->add_flag("--quiet", quiet, "suppress informational output");

    auto* run = app.add_subcommand("run", "execute a scenario and export artifacts");
    run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    run->add_flag("--quiet", quiet, "suppress informational output");
    run->add_option("--out", out_dir, "output directory (default $EVACKIT_OUT or ./out)");
    run->add_option("--seed", seed, "override the scenario rng seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--solver", solver, "force solver mode: exact, evo, or greedy")
        ->check(CLI::IsMember({"exact", "evo", "greedy"}));

    auto* orc = app.add_subcommand("oracle", "cross-check a solver against brute force");
    orc->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    orc->add_option("--module", module, "module to check: cover, dispatch, or busevac")
        ->required();
    orc->add_flag("--quiet", quiet, "suppress informational output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed())
            return cmd_validate(scenario_path, quiet);
        if (run->parsed())
            return cmd_run(scenario_path, out_dir,
                           seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                           solver.empty() ? std::nullopt : std::optional<std::string>(solver),
                           quiet);
        if (orc->parsed())
            return cmd_oracle(scenario_path, module, quiet);
    } catch (const InstanceTooLargeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
