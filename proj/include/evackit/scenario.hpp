#pragma once

// Scenario file: one JSON document referencing the network file and
// embedding the module fragments (hospitals, fleets, depots, pickups,
// shelters, signal plans, incidents, hazard zone, solver config).

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evackit/busevac.hpp"
#include "evackit/ccu.hpp"
#include "evackit/common.hpp"
#include "evackit/cover.hpp"
#include "evackit/dispatch.hpp"
#include "evackit/evo.hpp"
#include "evackit/net.hpp"
#include "evackit/signal.hpp"

namespace evackit::sim {

struct SignalSite {
    NodeId node = 0;
    signal::SignalPlan plan;
};

struct Scenario {
    net::TimeDependentNetwork network;
    std::vector<cover::Hospital> hospitals;
    std::vector<cover::Community> communities;
    std::vector<dispatch::Fleet> fleets;
    std::vector<dispatch::Patient> patients;
    std::vector<busevac::BusDepot> depots;
    std::vector<busevac::PickupPoint> pickups;
    std::vector<busevac::Shelter> shelters;
    std::vector<SignalSite> signals;
    std::vector<ccu::IncidentMessage> incidents;
    std::set<NodeId> hazard_zone;
    std::set<ArcId> contraflow_arcs;
    net::PenaltyMap penalized_arcs;

    Seconds t0 = 0;
    Seconds deadline = 7200;
    Seconds coverage_threshold = 900;
    Seconds notification_latency = 1.0;
    std::uint64_t rng_seed = 0;
    dispatch::DispatchParams dispatch_params;
    busevac::BusParams bus_params;
    evo::EvoConfig evo_config;
    std::optional<SolverMode> solver_mode;

    /// Itemized cross-reference and sign checks; empty when valid.
    std::vector<std::string> validate() const {
        std::vector<std::string> problems;
        auto check_node = [&](NodeId n, const std::string& what) {
            if (!network.has_node(n))
                problems.push_back(what + " references missing node " + std::to_string(n));
        };
        for (const auto& h : hospitals) {
            check_node(h.location, "hospital " + std::to_string(h.id));
            if (h.capacity < 0)
                problems.push_back("hospital " + std::to_string(h.id) + " has negative capacity");
        }
        for (const auto& c : communities) {
            check_node(c.location, "community " + std::to_string(c.id));
            if (c.population <= 0)
                problems.push_back("community " + std::to_string(c.id) +
                                   " has non-positive population");
        }
        std::set<int> hospital_ids;
        for (const auto& h : hospitals)
            hospital_ids.insert(h.id);
        for (const auto& f : fleets) {
            if (!hospital_ids.count(f.hospital_id))
                problems.push_back("fleet references missing hospital " +
                                   std::to_string(f.hospital_id));
            if (f.ambulances < 0)
                problems.push_back("fleet at hospital " + std::to_string(f.hospital_id) +
                                   " has negative ambulance count");
        }
        for (const auto& p : patients)
            check_node(p.location, "patient " + std::to_string(p.id));
        for (const auto& d : depots) {
            check_node(d.location, "depot " + std::to_string(d.id));
            if (d.fleet < 0)
                problems.push_back("depot " + std::to_string(d.id) + " has negative fleet");
            if (d.bus_capacity < 1)
                problems.push_back("depot " + std::to_string(d.id) + " has bus capacity < 1");
        }
        for (const auto& p : pickups) {
            check_node(p.location, "pickup " + std::to_string(p.id));
            if (p.demand < 0)
                problems.push_back("pickup " + std::to_string(p.id) + " has negative demand");
            if (p.boarding_cap < 1)
                problems.push_back("pickup " + std::to_string(p.id) + " has boarding cap < 1");
        }
        for (const auto& s : shelters) {
            check_node(s.location, "shelter " + std::to_string(s.id));
            if (s.capacity < 0)
                problems.push_back("shelter " + std::to_string(s.id) + " has negative capacity");
        }
        for (const auto& s : signals)
            check_node(s.node, "signal site");
        for (const auto& i : incidents)
            check_node(i.location, "incident " + std::to_string(i.id));
        for (NodeId n : hazard_zone)
            check_node(n, "hazard zone");
        for (ArcId a : contraflow_arcs) {
            try {
                if (!network.arc(a).reversible)
                    problems.push_back("contraflow arc " + std::to_string(a) +
                                       " is not reversible");
            } catch (const UnknownEntityError&) {
                problems.push_back("contraflow references missing arc " + std::to_string(a));
            }
        }
        for (const auto& [a, factor] : penalized_arcs) {
            try {
                network.arc(a);
            } catch (const UnknownEntityError&) {
                problems.push_back("penalty references missing arc " + std::to_string(a));
            }
            if (factor < 1.0)
                problems.push_back("penalty factor < 1 on arc " + std::to_string(a));
        }
        if (deadline <= t0)
            problems.push_back("deadline must be after t0");
        if (coverage_threshold <= 0)
            problems.push_back("coverage threshold must be positive");
        return problems;
    }
};

inline Scenario scenario_from_json(const nlohmann::json& j,
                                   const std::string& base_dir = ".") {
    Scenario s;
    if (j.contains("network_file")) {
        std::string path = j.at("network_file").get<std::string>();
        if (!path.empty() && path.front() != '/')
            path = base_dir + "/" + path;
        std::ifstream in(path);
        if (!in)
            throw ValidationError("cannot open network file: " + path);
        nlohmann::json nj;
        in >> nj;
        s.network = net::network_from_json(nj);
    } else {
        s.network = net::network_from_json(j.at("network"));
    }

    for (const auto& h : j.value("hospitals", nlohmann::json::array()))
        s.hospitals.push_back({h.at("id").get<int>(), h.at("location").get<NodeId>(),
                               h.at("capacity").get<std::int64_t>()});
    for (const auto& c : j.value("communities", nlohmann::json::array()))
        s.communities.push_back({c.at("id").get<int>(), c.at("location").get<NodeId>(),
                                 c.at("population").get<std::int64_t>()});
    for (const auto& f : j.value("fleets", nlohmann::json::array())) {
        dispatch::Fleet fleet;
        fleet.hospital_id = f.at("hospital_id").get<int>();
        fleet.ambulances = f.at("ambulances").get<int>();
        for (const auto& h : s.hospitals)
            if (h.id == fleet.hospital_id)
                fleet.location = h.location;
        s.fleets.push_back(fleet);
    }
    for (const auto& p : j.value("patients", nlohmann::json::array())) {
        dispatch::Patient patient;
        patient.id = p.at("id").get<int>();
        patient.location = p.at("location").get<NodeId>();
        patient.group = p.at("group").get<std::string>() == "serious"
                            ? dispatch::PatientGroup::serious
                            : dispatch::PatientGroup::slight;
        patient.onset = p.value("onset_s", 0.0);
        s.patients.push_back(patient);
    }
    for (const auto& d : j.value("depots", nlohmann::json::array()))
        s.depots.push_back({d.at("id").get<int>(), d.at("location").get<NodeId>(),
                            d.at("fleet").get<int>(), d.at("bus_capacity").get<std::int64_t>()});
    for (const auto& p : j.value("pickups", nlohmann::json::array()))
        s.pickups.push_back({p.at("id").get<int>(), p.at("location").get<NodeId>(),
                             p.at("demand").get<std::int64_t>(),
                             p.value("boarding_cap", std::int64_t{40})});
    for (const auto& sh : j.value("shelters", nlohmann::json::array()))
        s.shelters.push_back({sh.at("id").get<int>(), sh.at("location").get<NodeId>(),
                              sh.at("capacity").get<std::int64_t>()});
    for (const auto& sg : j.value("signals", nlohmann::json::array()))
        s.signals.push_back({sg.at("node").get<NodeId>(), signal::plan_from_json(sg.at("plan"))});
    for (const auto& i : j.value("incidents", nlohmann::json::array()))
        s.incidents.push_back(ccu::incident_from_json(i));
    for (const auto& n : j.value("hazard_zone", nlohmann::json::array()))
        s.hazard_zone.insert(n.get<NodeId>());
    for (const auto& a : j.value("contraflow_arcs", nlohmann::json::array()))
        s.contraflow_arcs.insert(a.get<ArcId>());
    for (const auto& p : j.value("penalized_arcs", nlohmann::json::array()))
        s.penalized_arcs[p.at("arc").get<ArcId>()] = p.at("factor").get<double>();

    s.t0 = j.value("t0_s", 0.0);
    s.deadline = j.value("deadline_s", 7200.0);
    s.coverage_threshold = j.value("coverage_threshold_s", 900.0);
    s.notification_latency = j.value("notification_latency_s", 1.0);
    s.rng_seed = j.value("rng_seed", std::uint64_t{0});
    if (j.contains("solver"))
        s.solver_mode = solver_mode_from_string(j.at("solver").get<std::string>());
    if (j.contains("evo")) {
        const auto& e = j["evo"];
        s.evo_config.population_size = e.value("population_size", std::size_t{64});
        s.evo_config.generations = e.value("generations", std::size_t{500});
        s.evo_config.crossover_rate = e.value("crossover_rate", 0.9);
        s.evo_config.mutation_rate = e.value("mutation_rate", 0.2);
        s.evo_config.elitism_count = e.value("elitism_count", std::size_t{2});
    }
    s.evo_config.rng_seed = s.rng_seed;
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    std::string base_dir = ".";
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos)
        base_dir = path.substr(0, slash);
    return scenario_from_json(j, base_dir);
}

}  // namespace evackit::sim
