#pragma once

// Brute-force reference implementations for cross-checking the production
// solvers. Everything here is written independently of the solver code
// paths: plain exhaustive enumeration, no label-setting, no pruning beyond
// feasibility. Intended for micro instances only.

#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "evackit/busevac.hpp"
#include "evackit/common.hpp"
#include "evackit/cover.hpp"
#include "evackit/dispatch.hpp"
#include "evackit/net.hpp"
#include "evackit/signal.hpp"

namespace evackit::oracle {

// --- time-dependent shortest path -----------------------------------------

/// Earliest arrival over every simple path, by exhaustive enumeration with
/// exact profile evaluation. nullopt when no simple path reaches dest.
inline std::optional<Seconds> best_arrival_enumerated(const net::TimeDependentNetwork& network,
                                                      NodeId origin, NodeId dest,
                                                      Seconds departure,
                                                      const net::PenaltyMap& penalties = {}) {
    if (origin == dest)
        return departure;
    std::optional<Seconds> best;
    std::set<NodeId> visited;
    auto walk = [&](auto&& self, NodeId at, Seconds t) -> void {
        visited.insert(at);
        for (const net::Arc& arc : network.arcs()) {
            if (arc.from != at || arc.blocked || visited.count(arc.to))
                continue;
            Seconds tt = net::evaluate_profile(arc.profile, t);
            auto pit = penalties.find(arc.id);
            if (pit != penalties.end())
                tt *= pit->second;
            Seconds arrive = t + tt;
            if (arc.to == dest) {
                if (!best || arrive < *best)
                    best = arrive;
            } else {
                self(self, arc.to, arrive);
            }
        }
        visited.erase(at);
    };
    walk(walk, origin, departure);
    return best;
}

// --- ACCP -----------------------------------------------------------------

struct AccpObjective {
    std::int64_t covered_population = 0;
    Seconds response_time = 0;
};

/// Exhaustive optimum over every community -> (hospital | uncovered) map,
/// iterated as a mixed-radix counter.
inline AccpObjective accp_optimum(const net::TimeDependentNetwork& network,
                                  const std::vector<cover::Hospital>& hospitals,
                                  const std::vector<cover::Community>& communities,
                                  Seconds threshold, Seconds instant) {
    const std::size_t H = hospitals.size();
    const std::size_t C = communities.size();
    std::vector<std::vector<Seconds>> tt(H, std::vector<Seconds>(C, cover::kUnreachable));
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t c = 0; c < C; ++c) {
            auto arrival = best_arrival_enumerated(network, hospitals[h].location,
                                                   communities[c].location, instant);
            if (arrival)
                tt[h][c] = *arrival - instant;
        }

    AccpObjective best{-1, 0};
    std::vector<std::size_t> pick(C, 0);  // H means uncovered
    while (true) {
        std::vector<std::int64_t> load(H, 0);
        AccpObjective cand;
        bool feasible = true;
        for (std::size_t c = 0; c < C && feasible; ++c) {
            if (pick[c] == H)
                continue;
            std::size_t h = pick[c];
            if (tt[h][c] > threshold)
                feasible = false;
            else {
                load[h] += communities[c].population;
                if (load[h] > hospitals[h].capacity)
                    feasible = false;
                cand.covered_population += communities[c].population;
                cand.response_time += tt[h][c];
            }
        }
        if (feasible) {
            if (cand.covered_population > best.covered_population ||
                (cand.covered_population == best.covered_population &&
                 cand.response_time < best.response_time))
                best = cand;
        }
        std::size_t i = 0;
        while (i < C && pick[i] == H)
            pick[i++] = 0;
        if (i == C)
            break;
        ++pick[i];
    }
    return best;
}

// --- group dispatch -------------------------------------------------------

/// Minimum possible max wait, by recursion over every (ambulance, next
/// patient) decision at every step. Infinity when some patient is
/// unreachable by every ambulance.
inline Seconds dispatch_optimum(const net::TimeDependentNetwork& network,
                                const std::vector<dispatch::Fleet>& fleets,
                                const std::vector<dispatch::Patient>& patients, Seconds t0,
                                const dispatch::DispatchParams& params = {}) {
    struct Amb {
        NodeId home;
        NodeId pos;
        Seconds time;
    };
    std::vector<Amb> ambs;
    for (const auto& f : fleets)
        for (int i = 0; i < f.ambulances; ++i)
            ambs.push_back({f.location, f.location, t0});

    std::vector<bool> served(patients.size(), false);
    Seconds best = std::numeric_limits<double>::infinity();

    auto arrive_at = [&](NodeId from, NodeId to, Seconds when) -> std::optional<Seconds> {
        if (from == to)
            return when;
        auto path = net::shortest_time_path(network, from, to, when);
        return path ? std::optional<Seconds>(path->arrival) : std::nullopt;
    };

    auto recurse = [&](auto&& self, std::size_t n_served, Seconds worst_so_far) -> void {
        if (worst_so_far >= best)
            return;
        if (n_served == patients.size()) {
            best = worst_so_far;
            return;
        }
        for (std::size_t a = 0; a < ambs.size(); ++a) {
            for (std::size_t p = 0; p < patients.size(); ++p) {
                if (served[p])
                    continue;
                auto arrival = arrive_at(ambs[a].pos, patients[p].location, ambs[a].time);
                if (!arrival)
                    continue;
                Seconds wait = *arrival - patients[p].onset;
                Amb saved = ambs[a];
                if (patients[p].group == dispatch::PatientGroup::slight) {
                    ambs[a].pos = patients[p].location;
                    ambs[a].time = *arrival + params.on_site_service;
                } else {
                    Seconds loaded = *arrival + params.pickup_service;
                    auto back = arrive_at(patients[p].location, ambs[a].home, loaded);
                    if (!back) {
                        ambs[a] = saved;
                        continue;
                    }
                    ambs[a].pos = ambs[a].home;
                    ambs[a].time = *back + params.handover_service;
                }
                served[p] = true;
                self(self, n_served + 1, std::max(worst_so_far, wait));
                served[p] = false;
                ambs[a] = saved;
            }
        }
    };
    recurse(recurse, 0, 0);
    return best;
}

// --- EBPD -----------------------------------------------------------------

struct EbpdObjective {
    std::int64_t evacuated = 0;
    Seconds completion = 0;

    bool operator<(const EbpdObjective& o) const {  // "worse than"
        if (evacuated != o.evacuated)
            return evacuated < o.evacuated;
        return completion > o.completion;
    }
};

/// Lexicographic optimum by recursion over every (bus, action) decision:
/// any non-done bus may visit any pickup or shelter or stop, at every step.
inline EbpdObjective ebpd_optimum(const net::TimeDependentNetwork& network,
                                  const std::vector<busevac::BusDepot>& depots,
                                  const std::vector<busevac::PickupPoint>& pickups,
                                  const std::vector<busevac::Shelter>& shelters,
                                  Seconds deadline, Seconds t0,
                                  const busevac::BusParams& params = {}) {
    struct Bus {
        NodeId pos;
        Seconds time;
        std::int64_t onboard;
        std::int64_t seats;
        bool done;
    };
    std::vector<Bus> buses;
    for (const auto& d : depots)
        for (int i = 0; i < d.fleet; ++i)
            buses.push_back({d.location, t0, 0, d.bus_capacity, false});
    std::vector<std::int64_t> demand;
    for (const auto& p : pickups)
        demand.push_back(p.demand);
    std::vector<std::int64_t> room;
    for (const auto& s : shelters)
        room.push_back(s.capacity);

    auto arrive_at = [&](NodeId from, NodeId to, Seconds when) -> std::optional<Seconds> {
        if (from == to)
            return when;
        auto path = net::shortest_time_path(network, from, to, when);
        return path ? std::optional<Seconds>(path->arrival) : std::nullopt;
    };

    EbpdObjective best{0, 0};
    EbpdObjective current{0, 0};

    auto recurse = [&](auto&& self) -> void {
        bool all_done = true;
        for (const auto& b : buses)
            all_done &= b.done;
        if (all_done) {
            if (best < current)
                best = current;
            return;
        }
        for (std::size_t bi = 0; bi < buses.size(); ++bi) {
            Bus& bus = buses[bi];
            if (bus.done)
                continue;
            Bus saved = bus;
            // pickups; boarding is capped by the system-wide shelter room
            // left after everyone already on a bus, matching the solvers
            std::int64_t room_total = 0;
            for (auto r : room)
                room_total += r;
            std::int64_t onboard_total = 0;
            for (const auto& b : buses)
                onboard_total += b.onboard;
            for (std::size_t p = 0; p < pickups.size(); ++p) {
                if (demand[p] <= 0 || bus.onboard >= bus.seats)
                    continue;
                auto arrival = arrive_at(bus.pos, pickups[p].location, bus.time);
                if (!arrival || *arrival > deadline)
                    continue;
                std::int64_t board = std::min({demand[p], pickups[p].boarding_cap,
                                               bus.seats - bus.onboard,
                                               room_total - onboard_total});
                if (board <= 0)
                    continue;
                demand[p] -= board;
                bus = {pickups[p].location,
                       *arrival + params.dwell + params.per_evacuee * board,
                       saved.onboard + board, saved.seats, false};
                self(self);
                bus = saved;
                demand[p] += board;
            }
            // shelters
            for (std::size_t s = 0; s < shelters.size(); ++s) {
                if (bus.onboard <= 0 || room[s] <= 0)
                    continue;
                auto arrival = arrive_at(bus.pos, shelters[s].location, bus.time);
                if (!arrival || *arrival > deadline)
                    continue;
                std::int64_t alight = std::min(bus.onboard, room[s]);
                room[s] -= alight;
                EbpdObjective saved_obj = current;
                current.evacuated += alight;
                current.completion = std::max(current.completion, *arrival);
                bus = {shelters[s].location,
                       *arrival + params.dwell + params.per_evacuee * alight,
                       saved.onboard - alight, saved.seats, false};
                self(self);
                bus = saved;
                current = saved_obj;
                room[s] += alight;
            }
            // stop
            if (bus.onboard == 0) {
                bus.done = true;
                self(self);
                bus = saved;
            }
        }
    };
    recurse(recurse);
    return best;
}

// --- GLOSA ----------------------------------------------------------------

/// Per-second exhaustive scan: is any green window for the approach
/// reachable with a constant speed in [v_min, v_max] within the horizon?
inline bool glosa_window_reachable(const signal::SignalPlan& plan,
                                   const signal::ApproachingVehicle& vehicle, Seconds now) {
    const Seconds horizon = 2 * plan.cycle();
    const Seconds arrival_min = now + vehicle.distance_to_stopline / vehicle.v_max;
    const Seconds arrival_max = now + vehicle.distance_to_stopline / vehicle.v_min;
    for (long i = 0;; ++i) {
        Seconds t = arrival_min + 0.05 * static_cast<double>(i);
        bool last = t >= arrival_max;
        if (last)
            t = arrival_max;
        auto pos = signal::phase_at(plan, t);
        if (pos.is_green) {
            bool serves = false;
            for (const auto& ph : plan.phases)
                if (ph.id == pos.phase_id && ph.serves(vehicle.approach))
                    serves = true;
            Seconds window_start = t - pos.elapsed;
            if (serves && window_start < now + horizon)
                return true;
        }
        if (last)
            break;
    }
    return false;
}

}  // namespace evackit::oracle
