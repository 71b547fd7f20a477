#pragma once

// Adaptive community covering: assign communities to hospitals under a
// travel-time threshold, maximizing covered population first and total
// response time second. Travel times are hospital->community shortest-time
// values at the query instant, so the assignment shifts with traffic.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "evackit/common.hpp"
#include "evackit/evo.hpp"
#include "evackit/net.hpp"

namespace evackit::cover {

struct Community {
    int id = 0;
    NodeId location = 0;
    std::int64_t population = 1;
};

struct Hospital {
    int id = 0;
    NodeId location = 0;
    std::int64_t capacity = 0;  // max covered population
};

struct CoverAssignment {
    std::map<int, int> assignment;  // community id -> hospital id
    std::set<int> uncovered;        // community ids
    std::int64_t total_covered_population = 0;
    Seconds total_response_time = 0;

    /// (coverage, response time), coverage maximized then time minimized.
    std::pair<std::int64_t, Seconds> objective() const {
        return {total_covered_population, total_response_time};
    }
};

constexpr std::size_t kExactMaxHospitals = 4;
constexpr std::size_t kExactMaxCommunities = 8;

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// tt[h][c] = shortest time from hospital h to community c departing at
/// `instant`; infinity when unreachable.
inline std::vector<std::vector<Seconds>> travel_matrix(const net::TimeDependentNetwork& network,
                                                       const std::vector<Hospital>& hospitals,
                                                       const std::vector<Community>& communities,
                                                       Seconds instant) {
    std::vector<std::vector<Seconds>> tt(hospitals.size(),
                                         std::vector<Seconds>(communities.size(), kUnreachable));
    for (std::size_t h = 0; h < hospitals.size(); ++h)
        for (std::size_t c = 0; c < communities.size(); ++c) {
            auto path = net::shortest_time_path(network, hospitals[h].location,
                                                communities[c].location, instant);
            if (path)
                tt[h][c] = path->arrival - instant;
        }
    return tt;
}

namespace detail {

/// Builds an assignment from a per-community hospital-index vector
/// (value == hospitals.size() means uncovered), repairing infeasible or
/// over-capacity picks to uncovered in community-id order.
inline CoverAssignment decode(const std::vector<int>& choice,
                              const std::vector<Hospital>& hospitals,
                              const std::vector<Community>& communities,
                              const std::vector<std::vector<Seconds>>& tt, Seconds threshold) {
    CoverAssignment out;
    std::vector<std::int64_t> load(hospitals.size(), 0);
    for (std::size_t c = 0; c < communities.size(); ++c) {
        int h = choice[c];
        bool ok = h >= 0 && h < static_cast<int>(hospitals.size()) &&
                  tt[h][c] <= threshold &&
                  load[h] + communities[c].population <= hospitals[h].capacity;
        if (ok) {
            load[h] += communities[c].population;
            out.assignment[communities[c].id] = hospitals[h].id;
            out.total_covered_population += communities[c].population;
            out.total_response_time += tt[h][c];
        } else {
            out.uncovered.insert(communities[c].id);
        }
    }
    return out;
}

inline bool better(const CoverAssignment& a, const CoverAssignment& b) {
    if (a.total_covered_population != b.total_covered_population)
        return a.total_covered_population > b.total_covered_population;
    return a.total_response_time < b.total_response_time;
}

inline CoverAssignment solve_exact(const std::vector<Hospital>& hospitals,
                                   const std::vector<Community>& communities,
                                   const std::vector<std::vector<Seconds>>& tt,
                                   Seconds threshold) {
    const int H = static_cast<int>(hospitals.size());
    std::vector<int> choice(communities.size(), H);
    std::optional<CoverAssignment> best;
    // DFS tries hospitals in id order with uncovered last, so the first
    // optimum found carries the canonical smallest (hospital, community) pairs.
    auto recurse = [&](auto&& self, std::size_t c) -> void {
        if (c == communities.size()) {
            CoverAssignment cand = decode(choice, hospitals, communities, tt, threshold);
            // reject choices that decode repaired anything: only consider
            // vectors that are feasible as stated, to keep enumeration exact
            std::size_t intended_uncovered = 0;
            for (int v : choice)
                if (v == H)
                    ++intended_uncovered;
            if (cand.uncovered.size() != intended_uncovered)
                return;
            if (!best || better(cand, *best))
                best = std::move(cand);
            return;
        }
        for (int h = 0; h <= H; ++h) {
            choice[c] = h;
            self(self, c + 1);
        }
        choice[c] = H;
    };
    recurse(recurse, 0);
    return *best;
}

inline CoverAssignment solve_greedy(const std::vector<Hospital>& hospitals,
                                    const std::vector<Community>& communities,
                                    const std::vector<std::vector<Seconds>>& tt,
                                    Seconds threshold) {
    // biggest communities first; each takes the fastest feasible hospital
    std::vector<std::size_t> order(communities.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (communities[a].population != communities[b].population)
            return communities[a].population > communities[b].population;
        return communities[a].id < communities[b].id;
    });
    std::vector<int> choice(communities.size(), static_cast<int>(hospitals.size()));
    std::vector<std::int64_t> load(hospitals.size(), 0);
    for (std::size_t c : order) {
        int pick = -1;
        Seconds pick_tt = kUnreachable;
        for (std::size_t h = 0; h < hospitals.size(); ++h) {
            if (tt[h][c] > threshold)
                continue;
            if (load[h] + communities[c].population > hospitals[h].capacity)
                continue;
            if (tt[h][c] < pick_tt) {
                pick = static_cast<int>(h);
                pick_tt = tt[h][c];
            }
        }
        if (pick >= 0) {
            choice[c] = pick;
            load[pick] += communities[c].population;
        }
    }
    return decode(choice, hospitals, communities, tt, threshold);
}

}  // namespace detail

inline CoverAssignment solve_accp(const net::TimeDependentNetwork& network,
                                  const std::vector<Hospital>& hospitals,
                                  const std::vector<Community>& communities, Seconds threshold,
                                  Seconds instant,
                                  std::optional<SolverMode> mode = std::nullopt,
                                  const evo::EvoConfig& evo_config = {}) {
    if (threshold <= 0)
        throw ValidationError("coverage threshold must be positive");
    for (const auto& h : hospitals) {
        if (h.capacity < 0)
            throw ValidationError("hospital capacity must be >= 0");
        if (!network.has_node(h.location))
            throw UnknownEntityError("hospital location not in network");
    }
    for (const auto& c : communities) {
        if (c.population <= 0)
            throw ValidationError("community population must be positive");
        if (!network.has_node(c.location))
            throw UnknownEntityError("community location not in network");
    }

    auto tt = travel_matrix(network, hospitals, communities, instant);

    const bool micro = hospitals.size() <= kExactMaxHospitals &&
                       communities.size() <= kExactMaxCommunities;
    SolverMode m = mode.value_or(micro ? SolverMode::exact : SolverMode::evo);
    if (m == SolverMode::exact && !micro)
        throw InstanceTooLargeError("exact ACCP limited to 4 hospitals / 8 communities");
    if (communities.empty() || hospitals.empty() || m == SolverMode::greedy)
        return detail::solve_greedy(hospitals, communities, tt, threshold);
    if (m == SolverMode::exact)
        return detail::solve_exact(hospitals, communities, tt, threshold);

    // evo refinement over assignment vectors, seeded with the greedy pick
    CoverAssignment greedy = detail::solve_greedy(hospitals, communities, tt, threshold);
    std::map<int, std::size_t> hospital_index;
    for (std::size_t h = 0; h < hospitals.size(); ++h)
        hospital_index[hospitals[h].id] = h;
    evo::Genome seed(communities.size(), static_cast<int>(hospitals.size()));
    for (std::size_t c = 0; c < communities.size(); ++c) {
        auto it = greedy.assignment.find(communities[c].id);
        if (it != greedy.assignment.end())
            seed[c] = static_cast<int>(hospital_index.at(it->second));
    }
    auto fitness = [&](const evo::Genome& g) -> evo::Fitness {
        CoverAssignment a = detail::decode(g, hospitals, communities, tt, threshold);
        return {-static_cast<double>(a.total_covered_population), a.total_response_time};
    };
    auto result = evo::evolve(evo_config, {seed}, fitness, evo::uniform_crossover,
                              evo::make_reset_mutation(static_cast<int>(hospitals.size())));
    CoverAssignment evolved = detail::decode(result.best, hospitals, communities, tt, threshold);
    return detail::better(evolved, greedy) ? evolved : greedy;
}

struct ResolveResult {
    CoverAssignment assignment;
    std::vector<int> changed_communities;  // moved, newly covered, or dropped
};

inline ResolveResult resolve_on_update(const CoverAssignment& prev,
                                       const net::TimeDependentNetwork& network,
                                       const std::vector<Hospital>& hospitals,
                                       const std::vector<Community>& communities,
                                       Seconds threshold, Seconds instant,
                                       std::optional<SolverMode> mode = std::nullopt,
                                       const evo::EvoConfig& evo_config = {}) {
    ResolveResult out;
    out.assignment =
        solve_accp(network, hospitals, communities, threshold, instant, mode, evo_config);
    for (const auto& c : communities) {
        auto before = prev.assignment.find(c.id);
        auto after = out.assignment.assignment.find(c.id);
        bool was = before != prev.assignment.end();
        bool is = after != out.assignment.assignment.end();
        if (was != is || (was && is && before->second != after->second))
            out.changed_communities.push_back(c.id);
    }
    return out;
}

// --- JSON interchange -----------------------------------------------------

inline nlohmann::json assignment_to_json(const CoverAssignment& a) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [community, hospital] : a.assignment)
        pairs.push_back({{"community", community}, {"hospital", hospital}});
    return {{"assignment", pairs},
            {"uncovered", a.uncovered},
            {"total_covered_population", a.total_covered_population},
            {"total_response_time_s", a.total_response_time}};
}

}  // namespace evackit::cover
