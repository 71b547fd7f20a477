#pragma once

// Ambulance operations: single-incident hospital->demand->hospital routing
// and disaster-scale group dispatch minimizing the longest patient wait.
// Slight patients are treated on site; serious patients are carried one at a
// time to hospital.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "evackit/common.hpp"
#include "evackit/evo.hpp"
#include "evackit/net.hpp"

namespace evackit::dispatch {

enum class PatientGroup { slight, serious };
enum class StopKind { treat_on_site, pickup, deliver_hospital };

inline const char* to_string(StopKind k) {
    switch (k) {
        case StopKind::treat_on_site: return "treat_on_site";
        case StopKind::pickup: return "pickup";
        case StopKind::deliver_hospital: return "deliver_hospital";
    }
    return "?";
}

struct Patient {
    int id = 0;
    NodeId location = 0;
    PatientGroup group = PatientGroup::slight;
    Seconds onset = 0;
};

struct Fleet {
    int hospital_id = 0;
    NodeId location = 0;
    int ambulances = 0;
};

struct DispatchParams {
    Seconds on_site_service = 300;   // slight patient, field treatment
    Seconds pickup_service = 180;    // serious patient, loading
    Seconds handover_service = 120;  // hospital delivery
};

struct Stop {
    StopKind kind = StopKind::treat_on_site;
    NodeId location = 0;
    int patient_id = -1;
    Seconds arrival = 0;
    Seconds service_start = 0;
    Seconds depart = 0;
};

struct AmbulanceRoute {
    int ambulance_id = 0;
    int hospital_id = 0;
    std::vector<Stop> stops;
};

struct DispatchPlan {
    std::vector<AmbulanceRoute> routes;
    std::map<int, Seconds> wait;  // patient id -> service_start - onset
    Seconds objective = 0;        // max wait over all patients
};

class UnreachablePatientError : public ValidationError {
public:
    explicit UnreachablePatientError(int patient_id)
        : ValidationError("patient unreachable: " + std::to_string(patient_id)) {}
};

constexpr std::size_t kExactMaxAmbulances = 3;
constexpr std::size_t kExactMaxPatients = 6;

// --- single pickup and drop-off (household DARP) --------------------------

struct RoundTrip {
    net::TimedPath outbound;  // hospital -> demand
    net::TimedPath inbound;   // demand -> hospital, after on-scene service
};

inline std::optional<RoundTrip> route_single(const net::TimeDependentNetwork& network,
                                             NodeId hospital, NodeId demand, Seconds departure,
                                             Seconds on_scene_service = 300) {
    if (hospital == demand) {
        RoundTrip trip;
        trip.outbound = {departure, {}, departure, {departure}};
        Seconds back = departure + on_scene_service;
        trip.inbound = {back, {}, back, {back}};
        return trip;
    }
    auto out = net::shortest_time_path(network, hospital, demand, departure);
    if (!out)
        return std::nullopt;
    auto back = net::shortest_time_path(network, demand, hospital,
                                        out->arrival + on_scene_service);
    if (!back)
        return std::nullopt;
    return RoundTrip{*out, *back};
}

// --- group dispatch -------------------------------------------------------

namespace detail {

struct Ambulance {
    int id = 0;
    int hospital_id = 0;
    NodeId home = 0;
};

inline std::vector<Ambulance> expand_fleets(const std::vector<Fleet>& fleets) {
    std::vector<Ambulance> out;
    int next_id = 0;
    for (const Fleet& f : fleets)
        for (int i = 0; i < f.ambulances; ++i)
            out.push_back({next_id++, f.hospital_id, f.location});
    return out;
}

/// Schedules one ambulance through `order` starting at t0; returns nullopt if
/// some leg is unreachable.
inline std::optional<AmbulanceRoute> build_route(const net::TimeDependentNetwork& network,
                                                 const Ambulance& amb,
                                                 const std::vector<Patient>& patients,
                                                 const std::vector<std::size_t>& order,
                                                 Seconds t0, const DispatchParams& params,
                                                 std::map<int, Seconds>* waits) {
    AmbulanceRoute route;
    route.ambulance_id = amb.id;
    route.hospital_id = amb.hospital_id;
    NodeId pos = amb.home;
    Seconds t = t0;
    for (std::size_t idx : order) {
        const Patient& p = patients[idx];
        Seconds arrival = t;
        if (pos != p.location) {
            auto leg = net::shortest_time_path(network, pos, p.location, t);
            if (!leg)
                return std::nullopt;
            arrival = leg->arrival;
        }
        if (waits)
            (*waits)[p.id] = arrival - p.onset;
        if (p.group == PatientGroup::slight) {
            route.stops.push_back({StopKind::treat_on_site, p.location, p.id, arrival, arrival,
                                   arrival + params.on_site_service});
            pos = p.location;
            t = arrival + params.on_site_service;
        } else {
            Seconds loaded = arrival + params.pickup_service;
            route.stops.push_back(
                {StopKind::pickup, p.location, p.id, arrival, arrival, loaded});
            Seconds at_hospital = loaded;
            if (p.location != amb.home) {
                auto leg = net::shortest_time_path(network, p.location, amb.home, loaded);
                if (!leg)
                    return std::nullopt;
                at_hospital = leg->arrival;
            }
            route.stops.push_back({StopKind::deliver_hospital, amb.home, p.id, at_hospital,
                                   at_hospital, at_hospital + params.handover_service});
            pos = amb.home;
            t = at_hospital + params.handover_service;
        }
    }
    return route;
}

/// Max wait over the ambulance's patients; infinity if infeasible.
inline Seconds route_objective(const net::TimeDependentNetwork& network, const Ambulance& amb,
                               const std::vector<Patient>& patients,
                               const std::vector<std::size_t>& order, Seconds t0,
                               const DispatchParams& params) {
    std::map<int, Seconds> waits;
    if (!build_route(network, amb, patients, order, t0, params, &waits))
        return std::numeric_limits<double>::infinity();
    Seconds worst = 0;
    for (const auto& [id, w] : waits)
        worst = std::max(worst, w);
    return worst;
}

/// Best visiting order for one ambulance over a fixed patient subset,
/// by exhaustive permutation (subset sizes stay tiny in exact mode).
inline std::vector<std::size_t> best_order(const net::TimeDependentNetwork& network,
                                           const Ambulance& amb,
                                           const std::vector<Patient>& patients,
                                           std::vector<std::size_t> subset, Seconds t0,
                                           const DispatchParams& params, Seconds* objective) {
    std::sort(subset.begin(), subset.end());
    std::vector<std::size_t> best = subset;
    Seconds best_obj = route_objective(network, amb, patients, subset, t0, params);
    std::vector<std::size_t> perm = subset;
    while (std::next_permutation(perm.begin(), perm.end())) {
        Seconds obj = route_objective(network, amb, patients, perm, t0, params);
        if (obj < best_obj) {
            best_obj = obj;
            best = perm;
        }
    }
    if (objective)
        *objective = best_obj;
    return best;
}

inline DispatchPlan assemble(const net::TimeDependentNetwork& network,
                             const std::vector<Ambulance>& ambulances,
                             const std::vector<Patient>& patients,
                             const std::vector<std::vector<std::size_t>>& orders, Seconds t0,
                             const DispatchParams& params) {
    DispatchPlan plan;
    for (std::size_t a = 0; a < ambulances.size(); ++a) {
        auto route =
            build_route(network, ambulances[a], patients, orders[a], t0, params, &plan.wait);
        if (!route)
            throw UnreachablePatientError(
                orders[a].empty() ? -1 : patients[orders[a].front()].id);
        plan.routes.push_back(std::move(*route));
    }
    plan.objective = 0;
    for (const auto& [id, w] : plan.wait)
        plan.objective = std::max(plan.objective, w);
    return plan;
}

inline std::vector<std::vector<std::size_t>> greedy_orders(
    const net::TimeDependentNetwork& network, const std::vector<Ambulance>& ambulances,
    const std::vector<Patient>& patients, Seconds t0, const DispatchParams& params) {
    struct State {
        NodeId pos;
        Seconds free_at;
    };
    std::vector<State> state;
    for (const auto& a : ambulances)
        state.push_back({a.home, t0});
    std::vector<std::vector<std::size_t>> orders(ambulances.size());
    std::vector<bool> served(patients.size(), false);
    for (std::size_t n = 0; n < patients.size(); ++n) {
        // earliest-free ambulance takes its nearest-in-time unserved patient
        std::size_t a = 0;
        for (std::size_t i = 1; i < ambulances.size(); ++i)
            if (state[i].free_at < state[a].free_at)
                a = i;
        std::size_t pick = patients.size();
        Seconds pick_arrival = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < patients.size(); ++p) {
            if (served[p])
                continue;
            Seconds arrival = state[a].free_at;
            if (state[a].pos != patients[p].location) {
                auto leg = net::shortest_time_path(network, state[a].pos, patients[p].location,
                                                   state[a].free_at);
                if (!leg)
                    continue;
                arrival = leg->arrival;
            }
            if (arrival < pick_arrival) {
                pick_arrival = arrival;
                pick = p;
            }
        }
        if (pick == patients.size()) {
            std::size_t first_unserved = 0;
            for (std::size_t p = 0; p < patients.size(); ++p)
                if (!served[p]) {
                    first_unserved = p;
                    break;
                }
            throw UnreachablePatientError(patients[first_unserved].id);
        }
        served[pick] = true;
        orders[a].push_back(pick);
        const Patient& p = patients[pick];
        if (p.group == PatientGroup::slight) {
            state[a] = {p.location, pick_arrival + params.on_site_service};
        } else {
            Seconds loaded = pick_arrival + params.pickup_service;
            Seconds at_hospital = loaded;
            if (p.location != ambulances[a].home) {
                auto leg =
                    net::shortest_time_path(network, p.location, ambulances[a].home, loaded);
                if (!leg)
                    throw UnreachablePatientError(p.id);
                at_hospital = leg->arrival;
            }
            state[a] = {ambulances[a].home, at_hospital + params.handover_service};
        }
    }
    return orders;
}

/// Decodes a permutation-with-delimiters genome into per-ambulance orders.
/// Values >= patient count are delimiters.
inline std::vector<std::vector<std::size_t>> decode_genome(const evo::Genome& g,
                                                           std::size_t n_patients,
                                                           std::size_t n_ambulances) {
    std::vector<std::vector<std::size_t>> orders(n_ambulances);
    std::size_t seg = 0;
    for (int v : g) {
        if (v >= static_cast<int>(n_patients)) {
            if (seg + 1 < n_ambulances)
                ++seg;
        } else {
            orders[seg].push_back(static_cast<std::size_t>(v));
        }
    }
    return orders;
}

inline evo::Genome encode_orders(const std::vector<std::vector<std::size_t>>& orders,
                                 std::size_t n_patients) {
    evo::Genome g;
    for (std::size_t a = 0; a < orders.size(); ++a) {
        if (a > 0)
            g.push_back(static_cast<int>(n_patients + a - 1));
        for (std::size_t idx : orders[a])
            g.push_back(static_cast<int>(idx));
    }
    return g;
}

}  // namespace detail

inline DispatchPlan solve_group_dispatch(const net::TimeDependentNetwork& network,
                                         const std::vector<Fleet>& fleets,
                                         const std::vector<Patient>& patients, Seconds t0,
                                         std::optional<SolverMode> mode = std::nullopt,
                                         const DispatchParams& params = {},
                                         const evo::EvoConfig& evo_config = {}) {
    auto ambulances = detail::expand_fleets(fleets);
    if (ambulances.empty())
        throw ValidationError("group dispatch requires at least one ambulance");
    if (patients.empty())
        return {};

    const std::size_t A = ambulances.size();
    const std::size_t P = patients.size();
    const bool micro = A <= kExactMaxAmbulances && P <= kExactMaxPatients;
    SolverMode m = mode.value_or(micro ? SolverMode::exact : SolverMode::evo);
    if (m == SolverMode::exact && !micro)
        throw InstanceTooLargeError("exact dispatch limited to 3 ambulances / 6 patients");

    if (m == SolverMode::exact) {
        // every patient->ambulance assignment; per ambulance the visiting
        // order is optimized independently (fleets do not interact)
        std::vector<std::size_t> assign(P, 0);
        std::optional<DispatchPlan> best;
        while (true) {
            std::vector<std::vector<std::size_t>> subsets(A);
            for (std::size_t p = 0; p < P; ++p)
                subsets[assign[p]].push_back(p);
            std::vector<std::vector<std::size_t>> orders(A);
            Seconds worst = 0;
            bool feasible = true;
            for (std::size_t a = 0; a < A && feasible; ++a) {
                Seconds obj = 0;
                orders[a] = detail::best_order(network, ambulances[a], patients, subsets[a], t0,
                                               params, &obj);
                if (std::isinf(obj))
                    feasible = false;
                worst = std::max(worst, obj);
            }
            if (feasible && (!best || worst < best->objective)) {
                best = detail::assemble(network, ambulances, patients, orders, t0, params);
            }
            // next assignment vector
            std::size_t i = 0;
            while (i < P && assign[i] + 1 == A)
                assign[i++] = 0;
            if (i == P)
                break;
            ++assign[i];
        }
        if (!best)
            throw UnreachablePatientError(patients.front().id);
        return *best;
    }

    auto greedy_orders = detail::greedy_orders(network, ambulances, patients, t0, params);
    DispatchPlan greedy = detail::assemble(network, ambulances, patients, greedy_orders, t0, params);
    if (m == SolverMode::greedy)
        return greedy;

    auto fitness = [&](const evo::Genome& g) -> evo::Fitness {
        auto orders = detail::decode_genome(g, P, A);
        Seconds worst = 0;
        for (std::size_t a = 0; a < A; ++a)
            worst = std::max(worst, detail::route_objective(network, ambulances[a], patients,
                                                            orders[a], t0, params));
        return {worst};
    };
    evo::Genome seed = detail::encode_orders(greedy_orders, P);
    auto result =
        evo::evolve(evo_config, {seed}, fitness, evo::order_crossover, evo::swap_mutation);
    auto evolved_orders = detail::decode_genome(result.best, P, A);
    DispatchPlan evolved = detail::assemble(network, ambulances, patients, evolved_orders, t0, params);
    return evolved.objective <= greedy.objective ? evolved : greedy;
}

// --- JSON / CSV interchange -----------------------------------------------

inline nlohmann::json plan_to_json(const DispatchPlan& plan) {
    nlohmann::json routes = nlohmann::json::array();
    for (const auto& r : plan.routes) {
        nlohmann::json stops = nlohmann::json::array();
        for (const auto& s : r.stops)
            stops.push_back({{"kind", to_string(s.kind)},
                             {"location", s.location},
                             {"patient", s.patient_id},
                             {"arrival_s", s.arrival},
                             {"service_start_s", s.service_start},
                             {"depart_s", s.depart}});
        routes.push_back(
            {{"ambulance", r.ambulance_id}, {"hospital", r.hospital_id}, {"stops", stops}});
    }
    nlohmann::json waits = nlohmann::json::array();
    for (const auto& [patient, w] : plan.wait)
        waits.push_back({{"patient", patient}, {"wait_s", w}});
    return {{"routes", routes}, {"waits", waits}, {"objective_s", plan.objective}};
}

inline std::string waits_to_csv(const DispatchPlan& plan) {
    std::string csv = "patient_id,wait_s\n";
    for (const auto& [patient, w] : plan.wait)
        csv += std::to_string(patient) + "," + std::to_string(w) + "\n";
    return csv;
}

}  // namespace evackit::dispatch
