#pragma once

// Emergency bus pickup-and-delivery: multi-depot bus routing moving evacuees
// from pick-up points to shelters under seat capacity, shelter capacity,
// per-visit boarding caps and an evacuation deadline. Objective is
// lexicographic: evacuate as many as possible, then finish as early as
// possible.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "evackit/common.hpp"
#include "evackit/evo.hpp"
#include "evackit/net.hpp"

namespace evackit::busevac {

struct PickupPoint {
    int id = 0;
    NodeId location = 0;
    std::int64_t demand = 0;
    std::int64_t boarding_cap = 1;  // max evacuees boarding per bus visit
};

struct Shelter {
    int id = 0;
    NodeId location = 0;
    std::int64_t capacity = 0;
};

struct BusDepot {
    int id = 0;
    NodeId location = 0;
    int fleet = 0;
    std::int64_t bus_capacity = 1;  // seats
};

struct BusParams {
    Seconds dwell = 30;        // per-visit overhead
    Seconds per_evacuee = 2;   // boarding or alighting, per head
};

enum class VisitKind { pickup, shelter };

struct Visit {
    VisitKind kind = VisitKind::pickup;
    int id = 0;  // pickup or shelter id
    NodeId location = 0;
    Seconds arrival = 0;
    std::int64_t count = 0;          // boarded or alighted at this visit
    std::int64_t onboard_after = 0;
    Seconds depart = 0;
};

struct BusRoute {
    int bus_id = 0;
    int depot_id = 0;
    std::vector<Visit> visits;
};

struct EvacPlan {
    std::vector<BusRoute> routes;
    std::map<int, std::int64_t> unserved;  // pickup id -> remaining demand
    std::int64_t total_evacuated = 0;
    Seconds completion_time = 0;  // latest shelter arrival, 0 if none

    /// Lexicographic: more evacuated wins, then earlier completion.
    std::pair<std::int64_t, Seconds> objective() const {
        return {total_evacuated, completion_time};
    }
};

inline bool better_plan(const EvacPlan& a, const EvacPlan& b) {
    if (a.total_evacuated != b.total_evacuated)
        return a.total_evacuated > b.total_evacuated;
    return a.completion_time < b.completion_time;
}

constexpr std::size_t kExactMaxBuses = 2;
constexpr std::size_t kExactMaxPickups = 3;
constexpr std::size_t kExactMaxShelters = 2;

namespace detail {

struct Bus {
    int id = 0;
    int depot_id = 0;
    NodeId home = 0;
    std::int64_t seats = 0;
};

struct BusState {
    NodeId pos = 0;
    Seconds time = 0;
    std::int64_t onboard = 0;
    bool done = false;
};

inline std::vector<Bus> expand_fleets(const std::vector<BusDepot>& depots) {
    std::vector<Bus> out;
    int next_id = 0;
    for (const auto& d : depots)
        for (int i = 0; i < d.fleet; ++i)
            out.push_back({next_id++, d.id, d.location, d.bus_capacity});
    return out;
}

inline std::optional<Seconds> travel(const net::TimeDependentNetwork& network, NodeId from,
                                     NodeId to, Seconds depart) {
    if (from == to)
        return depart;
    auto path = net::shortest_time_path(network, from, to, depart);
    if (!path)
        return std::nullopt;
    return path->arrival;
}

struct SearchState {
    std::vector<std::int64_t> demand;       // per pickup index
    std::vector<std::int64_t> shelter_res;  // per shelter index
    std::vector<BusState> buses;
    std::vector<BusRoute> routes;
    std::int64_t evacuated = 0;
    Seconds completion = 0;
};

/// Exhaustive DFS over joint bus action sequences; every non-done bus can
/// take the next action, so all allocations of shared demand and shelter
/// room across buses are explored.
class ExactSolver {
public:
    ExactSolver(const net::TimeDependentNetwork& network, const std::vector<Bus>& buses,
                const std::vector<PickupPoint>& pickups, const std::vector<Shelter>& shelters,
                Seconds deadline, Seconds t0, const BusParams& params)
        : net_(network), buses_(buses), pickups_(pickups), shelters_(shelters),
          deadline_(deadline), params_(params) {
        state_.demand.reserve(pickups.size());
        for (const auto& p : pickups)
            state_.demand.push_back(p.demand);
        for (const auto& s : shelters)
            state_.shelter_res.push_back(s.capacity);
        for (const auto& b : buses) {
            state_.buses.push_back({b.home, t0, 0, false});
            BusRoute r;
            r.bus_id = b.id;
            r.depot_id = b.depot_id;
            state_.routes.push_back(r);
        }
    }

    EvacPlan solve() {
        dfs();
        return best_ ? *best_ : EvacPlan{};
    }

private:
    void consider_terminal() {
        EvacPlan plan;
        plan.total_evacuated = state_.evacuated;
        plan.completion_time = state_.completion;
        for (std::size_t i = 0; i < state_.routes.size(); ++i)
            if (!state_.routes[i].visits.empty())
                plan.routes.push_back(state_.routes[i]);
        for (std::size_t p = 0; p < pickups_.size(); ++p)
            if (state_.demand[p] > 0)
                plan.unserved[pickups_[p].id] = state_.demand[p];
        if (!best_ || better_plan(plan, *best_))
            best_ = std::move(plan);
    }

    void dfs() {
        // upper bound on what this branch can still evacuate
        std::int64_t remaining_demand = 0;
        for (auto d : state_.demand)
            remaining_demand += d;
        std::int64_t remaining_room = 0;
        for (auto r : state_.shelter_res)
            remaining_room += r;
        std::int64_t onboard_total = 0;
        for (const auto& b : state_.buses)
            onboard_total += b.onboard;
        std::int64_t potential =
            state_.evacuated + std::min(remaining_demand + onboard_total, remaining_room);
        if (best_ && potential < best_->total_evacuated)
            return;

        // any non-done bus may take the next action: the order in which
        // buses claim shared demand and shelter room is itself a decision
        bool all_done = true;
        for (const auto& b : state_.buses)
            all_done &= b.done;
        if (all_done) {
            consider_terminal();
            return;
        }

        for (std::size_t active = 0; active < state_.buses.size(); ++active) {
            if (state_.buses[active].done)
                continue;
            expand(active);
        }
    }

    void expand(std::size_t active) {
        BusState saved = state_.buses[active];
        const Bus& bus = buses_[active];

        // option: visit a pickup; never board beyond the system-wide
        // remaining shelter room, or evacuees get stranded on a bus
        if (saved.onboard < bus.seats) {
            std::int64_t room_total = 0;
            for (auto r : state_.shelter_res)
                room_total += r;
            std::int64_t onboard_total = 0;
            for (const auto& b : state_.buses)
                onboard_total += b.onboard;
            for (std::size_t p = 0; p < pickups_.size(); ++p) {
                if (state_.demand[p] <= 0)
                    continue;
                auto arrival = travel(net_, saved.pos, pickups_[p].location, saved.time);
                if (!arrival || *arrival > deadline_)
                    continue;
                std::int64_t board = std::min({state_.demand[p], pickups_[p].boarding_cap,
                                               bus.seats - saved.onboard,
                                               room_total - onboard_total});
                if (board <= 0)
                    continue;
                Seconds depart = *arrival + params_.dwell + params_.per_evacuee * board;
                state_.demand[p] -= board;
                state_.buses[active] = {pickups_[p].location, depart, saved.onboard + board,
                                        false};
                state_.routes[active].visits.push_back({VisitKind::pickup, pickups_[p].id,
                                                        pickups_[p].location, *arrival, board,
                                                        saved.onboard + board, depart});
                dfs();
                state_.routes[active].visits.pop_back();
                state_.buses[active] = saved;
                state_.demand[p] += board;
            }
        }

        // option: visit a shelter
        if (saved.onboard > 0) {
            for (std::size_t s = 0; s < shelters_.size(); ++s) {
                if (state_.shelter_res[s] <= 0)
                    continue;
                auto arrival = travel(net_, saved.pos, shelters_[s].location, saved.time);
                if (!arrival || *arrival > deadline_)
                    continue;
                std::int64_t alight = std::min(saved.onboard, state_.shelter_res[s]);
                Seconds depart = *arrival + params_.dwell + params_.per_evacuee * alight;
                state_.shelter_res[s] -= alight;
                state_.evacuated += alight;
                Seconds saved_completion = state_.completion;
                state_.completion = std::max(state_.completion, *arrival);
                state_.buses[active] = {shelters_[s].location, depart, saved.onboard - alight,
                                        false};
                state_.routes[active].visits.push_back({VisitKind::shelter, shelters_[s].id,
                                                        shelters_[s].location, *arrival, alight,
                                                        saved.onboard - alight, depart});
                dfs();
                state_.routes[active].visits.pop_back();
                state_.buses[active] = saved;
                state_.completion = saved_completion;
                state_.evacuated -= alight;
                state_.shelter_res[s] += alight;
            }
        }

        // option: end this bus's route (only empty buses may stop)
        if (saved.onboard == 0) {
            state_.buses[active].done = true;
            dfs();
            state_.buses[active] = saved;
        }
    }

    const net::TimeDependentNetwork& net_;
    std::vector<Bus> buses_;
    std::vector<PickupPoint> pickups_;
    std::vector<Shelter> shelters_;
    Seconds deadline_;
    BusParams params_;
    SearchState state_;
    std::optional<EvacPlan> best_;
};

/// Greedy construction: the earliest-free bus repeatedly boards at the
/// quickest-to-reach pickup that still allows a shelter run before the
/// deadline, dumping at the nearest shelter when full or out of options.
/// `pickup_priority`, when given, overrides "quickest" with a fixed
/// preference order (used by the evo decode).
inline EvacPlan solve_greedy(const net::TimeDependentNetwork& network,
                             const std::vector<Bus>& buses,
                             const std::vector<PickupPoint>& pickups,
                             const std::vector<Shelter>& shelters, Seconds deadline, Seconds t0,
                             const BusParams& params,
                             const std::vector<std::size_t>* pickup_priority = nullptr) {
    std::vector<std::int64_t> demand;
    for (const auto& p : pickups)
        demand.push_back(p.demand);
    std::vector<std::int64_t> shelter_res;
    for (const auto& s : shelters)
        shelter_res.push_back(s.capacity);

    std::vector<BusState> bus_state;
    std::vector<BusRoute> routes;
    for (const auto& b : buses) {
        bus_state.push_back({b.home, t0, 0, false});
        routes.push_back({b.id, b.depot_id, {}});
    }

    EvacPlan plan;

    // same stranding guard as the exact search: boarding never exceeds the
    // system-wide shelter room left over after everyone already on a bus
    auto spare_room = [&]() {
        std::int64_t room_total = 0;
        for (auto r : shelter_res)
            room_total += r;
        std::int64_t onboard_total = 0;
        for (const auto& b : bus_state)
            onboard_total += b.onboard;
        return room_total - onboard_total;
    };

    auto nearest_shelter = [&](NodeId from, Seconds when)
        -> std::optional<std::tuple<std::size_t, Seconds>> {
        std::optional<std::tuple<std::size_t, Seconds>> pick;
        for (std::size_t s = 0; s < shelters.size(); ++s) {
            if (shelter_res[s] <= 0)
                continue;
            auto arrival = travel(network, from, shelters[s].location, when);
            if (!arrival || *arrival > deadline)
                continue;
            if (!pick || *arrival < std::get<1>(*pick))
                pick = {s, *arrival};
        }
        return pick;
    };

    while (true) {
        std::size_t active = buses.size();
        for (std::size_t i = 0; i < buses.size(); ++i) {
            if (bus_state[i].done)
                continue;
            if (active == buses.size() || bus_state[i].time < bus_state[active].time)
                active = i;
        }
        if (active == buses.size())
            break;

        BusState& st = bus_state[active];
        const Bus& bus = buses[active];

        // can the whole load still be dropped before the deadline? simulates
        // the nearest-shelter chain the bus would actually follow
        auto can_unload = [&](NodeId from, Seconds when, std::int64_t load) -> bool {
            auto res = shelter_res;
            NodeId pos = from;
            Seconds t = when;
            while (load > 0) {
                std::optional<std::tuple<std::size_t, Seconds>> pick;
                for (std::size_t s = 0; s < shelters.size(); ++s) {
                    if (res[s] <= 0)
                        continue;
                    auto arrival = travel(network, pos, shelters[s].location, t);
                    if (!arrival || *arrival > deadline)
                        continue;
                    if (!pick || *arrival < std::get<1>(*pick))
                        pick = {s, *arrival};
                }
                if (!pick)
                    return false;
                auto [s, arrival] = *pick;
                std::int64_t alight = std::min(load, res[s]);
                res[s] -= alight;
                load -= alight;
                t = arrival + params.dwell + params.per_evacuee * alight;
                pos = shelters[s].location;
            }
            return true;
        };

        // candidate pickup: feasible now, with the whole resulting load
        // still able to reach shelter room before the deadline
        std::optional<std::size_t> chosen;
        Seconds chosen_arrival = 0;
        std::int64_t chosen_board = 0;
        auto try_pickup = [&](std::size_t p) -> bool {
            if (demand[p] <= 0 || st.onboard >= bus.seats)
                return false;
            auto arrival = travel(network, st.pos, pickups[p].location, st.time);
            if (!arrival || *arrival > deadline)
                return false;
            std::int64_t cap = std::min(
                {demand[p], pickups[p].boarding_cap, bus.seats - st.onboard, spare_room()});
            // feasibility is monotone in load under FIFO, so take the
            // largest boarding that still unloads in time
            for (std::int64_t board = cap; board >= 1; --board) {
                Seconds depart = *arrival + params.dwell + params.per_evacuee * board;
                if (can_unload(pickups[p].location, depart, st.onboard + board)) {
                    chosen = p;
                    chosen_arrival = *arrival;
                    chosen_board = board;
                    return true;
                }
            }
            return false;
        };

        if (pickup_priority) {
            for (std::size_t p : *pickup_priority)
                if (try_pickup(p))
                    break;
        } else {
            std::optional<std::size_t> best_p;
            Seconds best_arrival = std::numeric_limits<double>::infinity();
            std::int64_t best_board = 0;
            for (std::size_t p = 0; p < pickups.size(); ++p) {
                if (try_pickup(p) && chosen_arrival < best_arrival) {
                    best_p = p;
                    best_arrival = chosen_arrival;
                    best_board = chosen_board;
                }
                chosen.reset();
            }
            chosen = best_p;
            chosen_arrival = best_arrival;
            chosen_board = best_board;
        }

        if (chosen && st.onboard < bus.seats) {
            std::size_t p = *chosen;
            std::int64_t board = chosen_board;
            Seconds depart = chosen_arrival + params.dwell + params.per_evacuee * board;
            demand[p] -= board;
            st.onboard += board;
            routes[active].visits.push_back({VisitKind::pickup, pickups[p].id,
                                             pickups[p].location, chosen_arrival, board,
                                             st.onboard, depart});
            st.pos = pickups[p].location;
            st.time = depart;
            continue;
        }

        if (st.onboard > 0) {
            auto shelter = nearest_shelter(st.pos, st.time);
            if (shelter) {
                auto [s, arrival] = *shelter;
                std::int64_t alight = std::min(st.onboard, shelter_res[s]);
                Seconds depart = arrival + params.dwell + params.per_evacuee * alight;
                shelter_res[s] -= alight;
                st.onboard -= alight;
                plan.total_evacuated += alight;
                plan.completion_time = std::max(plan.completion_time, arrival);
                routes[active].visits.push_back({VisitKind::shelter, shelters[s].id,
                                                 shelters[s].location, arrival, alight,
                                                 st.onboard, depart});
                st.pos = shelters[s].location;
                st.time = depart;
                continue;
            }
        }

        // nothing left for this bus; greedy never boards without a shelter
        // run available, so onboard is 0 here
        st.done = true;
    }

    for (auto& r : routes)
        if (!r.visits.empty())
            plan.routes.push_back(std::move(r));
    for (std::size_t p = 0; p < pickups.size(); ++p)
        if (demand[p] > 0)
            plan.unserved[pickups[p].id] = demand[p];
    return plan;
}

}  // namespace detail

inline EvacPlan solve_ebpd(const net::TimeDependentNetwork& network,
                           const std::vector<BusDepot>& depots,
                           const std::vector<PickupPoint>& pickups,
                           const std::vector<Shelter>& shelters, Seconds deadline, Seconds t0,
                           std::optional<SolverMode> mode = std::nullopt,
                           const BusParams& params = {},
                           const evo::EvoConfig& evo_config = {}) {
    if (deadline <= t0)
        throw ValidationError("deadline must be after t0");
    for (const auto& p : pickups) {
        if (p.demand < 0)
            throw ValidationError("pickup demand must be >= 0");
        if (p.boarding_cap < 1)
            throw ValidationError("boarding cap must be >= 1");
    }
    auto buses = detail::expand_fleets(depots);
    std::int64_t total_demand = 0;
    for (const auto& p : pickups)
        total_demand += p.demand;
    if (buses.empty() && total_demand > 0)
        throw ValidationError("no buses available");
    if (total_demand == 0)
        return {};

    const bool micro = buses.size() <= kExactMaxBuses && pickups.size() <= kExactMaxPickups &&
                       shelters.size() <= kExactMaxShelters;
    SolverMode m = mode.value_or(micro ? SolverMode::exact : SolverMode::evo);
    if (m == SolverMode::exact && !micro)
        throw InstanceTooLargeError("exact EBPD limited to 2 buses / 3 pickups / 2 shelters");

    if (m == SolverMode::exact) {
        detail::ExactSolver solver(network, buses, pickups, shelters, deadline, t0, params);
        return solver.solve();
    }

    EvacPlan greedy =
        detail::solve_greedy(network, buses, pickups, shelters, deadline, t0, params);
    if (m == SolverMode::greedy)
        return greedy;

    // evo over pickup preference orders
    auto fitness = [&](const evo::Genome& g) -> evo::Fitness {
        std::vector<std::size_t> priority(g.begin(), g.end());
        EvacPlan plan = detail::solve_greedy(network, buses, pickups, shelters, deadline, t0,
                                             params, &priority);
        return {-static_cast<double>(plan.total_evacuated), plan.completion_time};
    };
    evo::Genome seed(pickups.size());
    for (std::size_t i = 0; i < seed.size(); ++i)
        seed[i] = static_cast<int>(i);
    auto result =
        evo::evolve(evo_config, {seed}, fitness, evo::order_crossover, evo::swap_mutation);
    std::vector<std::size_t> priority(result.best.begin(), result.best.end());
    EvacPlan evolved = detail::solve_greedy(network, buses, pickups, shelters, deadline, t0,
                                            params, &priority);
    return better_plan(evolved, greedy) ? evolved : greedy;
}

// --- mid-run demand updates -----------------------------------------------

/// Holds the live demand picture between solves; pickup sensors feed it and
/// the next solve starts buses from their current positions.
class ReplanSession {
public:
    ReplanSession(std::vector<BusDepot> depots, std::vector<PickupPoint> pickups,
                  std::vector<Shelter> shelters)
        : depots_(std::move(depots)), pickups_(std::move(pickups)),
          shelters_(std::move(shelters)) {}

    bool update_demand(int pickup_id, std::int64_t new_demand) {
        if (new_demand < 0)
            throw ValidationError("demand must be >= 0");
        for (auto& p : pickups_) {
            if (p.id == pickup_id) {
                if (p.demand != new_demand) {
                    p.demand = new_demand;
                    dirty_ = true;
                }
                return dirty_;
            }
        }
        throw UnknownEntityError("unknown pickup id " + std::to_string(pickup_id));
    }

    /// Positions buses mid-route as single-bus depot equivalents.
    void set_bus_position(int bus_id, NodeId position, std::int64_t seats) {
        bus_positions_[bus_id] = {position, seats};
        dirty_ = true;
    }

    bool dirty() const { return dirty_; }

    EvacPlan resolve(const net::TimeDependentNetwork& network, Seconds deadline, Seconds now,
                     std::optional<SolverMode> mode = std::nullopt, const BusParams& params = {},
                     const evo::EvoConfig& evo_config = {}) {
        std::vector<BusDepot> depots;
        if (bus_positions_.empty()) {
            depots = depots_;
        } else {
            for (const auto& [bus_id, pos] : bus_positions_)
                depots.push_back({bus_id, pos.first, 1, pos.second});
        }
        dirty_ = false;
        return solve_ebpd(network, depots, pickups_, shelters_, deadline, now, mode, params,
                          evo_config);
    }

    const std::vector<PickupPoint>& pickups() const { return pickups_; }

private:
    std::vector<BusDepot> depots_;
    std::vector<PickupPoint> pickups_;
    std::vector<Shelter> shelters_;
    std::map<int, std::pair<NodeId, std::int64_t>> bus_positions_;
    bool dirty_ = false;
};

// --- JSON / CSV interchange -----------------------------------------------

inline nlohmann::json plan_to_json(const EvacPlan& plan) {
    nlohmann::json routes = nlohmann::json::array();
    for (const auto& r : plan.routes) {
        nlohmann::json visits = nlohmann::json::array();
        for (const auto& v : r.visits)
            visits.push_back({{"kind", v.kind == VisitKind::pickup ? "pickup" : "shelter"},
                              {"id", v.id},
                              {"location", v.location},
                              {"arrival_s", v.arrival},
                              {"count", v.count},
                              {"onboard_after", v.onboard_after},
                              {"depart_s", v.depart}});
        routes.push_back({{"bus", r.bus_id}, {"depot", r.depot_id}, {"visits", visits}});
    }
    nlohmann::json unserved = nlohmann::json::array();
    for (const auto& [pickup, remaining] : plan.unserved)
        unserved.push_back({{"pickup", pickup}, {"remaining", remaining}});
    return {{"routes", routes},
            {"unserved", unserved},
            {"total_evacuated", plan.total_evacuated},
            {"completion_time_s", plan.completion_time}};
}

inline std::string pickup_summary_csv(const EvacPlan& plan,
                                      const std::vector<PickupPoint>& pickups) {
    std::map<int, std::int64_t> boarded;
    for (const auto& r : plan.routes)
        for (const auto& v : r.visits)
            if (v.kind == VisitKind::pickup)
                boarded[v.id] += v.count;
    std::string csv = "pickup_id,initial_demand,boarded,unserved\n";
    for (const auto& p : pickups) {
        std::int64_t b = boarded.count(p.id) ? boarded[p.id] : 0;
        auto it = plan.unserved.find(p.id);
        std::int64_t u = it == plan.unserved.end() ? 0 : it->second;
        csv += std::to_string(p.id) + "," + std::to_string(p.demand) + "," + std::to_string(b) +
               "," + std::to_string(u) + "\n";
    }
    return csv;
}

}  // namespace evackit::busevac
