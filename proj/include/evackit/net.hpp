#pragma once

// Time-dependent road network: FIFO piecewise-linear arc travel times,
// earliest-arrival path search, penalty-based re-routing, contraflow and
// hazard-zone transformations.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "evackit/common.hpp"

namespace evackit::net {

/// Piecewise-linear travel time as a function of departure offset,
/// periodic with the given period (one day by default).
struct TravelTimeProfile {
    struct Breakpoint {
        Seconds offset = 0;       // departure offset in [0, period)
        Seconds travel_time = 0;  // > 0
    };

    std::vector<Breakpoint> breakpoints;
    Seconds period = 86400.0;

    static TravelTimeProfile constant(Seconds travel_time) {
        TravelTimeProfile p;
        p.breakpoints.push_back({0.0, travel_time});
        return p;
    }

    /// Throws ValidationError on malformed or FIFO-violating profiles.
    /// FIFO for a piecewise-linear periodic profile is equivalent to every
    /// segment slope (including the wrap segment) being >= -1.
    void validate() const {
        if (breakpoints.empty())
            throw ValidationError("profile has no breakpoints");
        if (period <= 0)
            throw ValidationError("profile period must be positive");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            const auto& bp = breakpoints[i];
            if (bp.offset < 0 || bp.offset >= period)
                throw ValidationError("breakpoint offset outside [0, period)");
            if (bp.travel_time <= 0)
                throw ValidationError("travel time must be positive");
            if (i > 0 && bp.offset <= breakpoints[i - 1].offset)
                throw ValidationError("breakpoint offsets must be strictly increasing");
        }
        const std::size_t n = breakpoints.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = breakpoints[i];
            const auto& b = breakpoints[(i + 1) % n];
            const Seconds dx = (i + 1 < n) ? b.offset - a.offset
                                           : period - a.offset + b.offset;
            if (dx <= 0)
                continue;  // single breakpoint: wrap segment is flat
            const double slope = (b.travel_time - a.travel_time) / dx;
            if (slope < -1.0 - 1e-12)
                throw ValidationError("profile violates FIFO (segment slope < -1)");
        }
    }

    /// Travel time for a departure at absolute time t (wraps modulo period).
    Seconds evaluate(Seconds departure) const {
        const std::size_t n = breakpoints.size();
        if (n == 1)
            return breakpoints.front().travel_time;
        Seconds t = std::fmod(departure, period);
        if (t < 0)
            t += period;
        // last breakpoint with offset <= t
        auto it = std::upper_bound(
            breakpoints.begin(), breakpoints.end(), t,
            [](Seconds v, const Breakpoint& bp) { return v < bp.offset; });
        std::size_t i = (it == breakpoints.begin()) ? n - 1 : (it - breakpoints.begin()) - 1;
        const Breakpoint& a = breakpoints[i];
        const Breakpoint& b = breakpoints[(i + 1) % n];
        Seconds dx = (i + 1 < n) ? b.offset - a.offset : period - a.offset + b.offset;
        Seconds dt = t - a.offset;
        if (dt < 0)
            dt += period;  // t before first breakpoint: inside the wrap segment
        if (dx <= 0)
            return a.travel_time;
        return a.travel_time + (b.travel_time - a.travel_time) * (dt / dx);
    }

    bool operator==(const TravelTimeProfile& other) const {
        if (period != other.period || breakpoints.size() != other.breakpoints.size())
            return false;
        for (std::size_t i = 0; i < breakpoints.size(); ++i)
            if (breakpoints[i].offset != other.breakpoints[i].offset ||
                breakpoints[i].travel_time != other.breakpoints[i].travel_time)
                return false;
        return true;
    }
};

struct Arc {
    ArcId id = 0;
    NodeId from = 0;
    NodeId to = 0;
    TravelTimeProfile profile;
    Meters length = 1.0;
    bool reversible = false;
    bool blocked = false;

    bool operator==(const Arc& o) const {
        return id == o.id && from == o.from && to == o.to && profile == o.profile &&
               length == o.length && reversible == o.reversible && blocked == o.blocked;
    }
};

/// A walk through the network with per-node arrival times.
struct TimedPath {
    Seconds departure = 0;
    std::vector<ArcId> arcs;
    Seconds arrival = 0;
    std::vector<Seconds> node_arrivals;  // one entry per visited node, origin first
};

/// Immutable after construction; queries are const and thread-safe.
class TimeDependentNetwork {
public:
    TimeDependentNetwork() = default;

    TimeDependentNetwork(std::vector<NodeId> nodes, std::vector<Arc> arcs)
        : nodes_(std::move(nodes)), arcs_(std::move(arcs)) {
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
        for (std::size_t i = 0; i < arcs_.size(); ++i) {
            const Arc& a = arcs_[i];
            if (a.from == a.to)
                throw ValidationError("arc " + std::to_string(a.id) + " is a self-loop");
            if (a.length <= 0)
                throw ValidationError("arc " + std::to_string(a.id) + " has non-positive length");
            if (!has_node(a.from) || !has_node(a.to))
                throw ValidationError("arc " + std::to_string(a.id) + " references unknown node");
            try {
                a.profile.validate();
            } catch (const ValidationError& e) {
                throw ValidationError("arc " + std::to_string(a.id) + ": " + e.what());
            }
            if (arc_index_.count(a.id))
                throw ValidationError("duplicate arc id " + std::to_string(a.id));
            arc_index_[a.id] = i;
            out_arcs_[a.from].push_back(i);
        }
        // deterministic neighbour order
        for (auto& [node, idxs] : out_arcs_)
            std::sort(idxs.begin(), idxs.end(), [this](std::size_t x, std::size_t y) {
                return arcs_[x].id < arcs_[y].id;
            });
    }

    const std::vector<NodeId>& nodes() const { return nodes_; }
    const std::vector<Arc>& arcs() const { return arcs_; }

    bool has_node(NodeId n) const {
        return std::binary_search(nodes_.begin(), nodes_.end(), n);
    }

    const Arc& arc(ArcId id) const {
        auto it = arc_index_.find(id);
        if (it == arc_index_.end())
            throw UnknownEntityError("unknown arc id " + std::to_string(id));
        return arcs_[it->second];
    }

    std::vector<const Arc*> outgoing(NodeId n) const {
        std::vector<const Arc*> out;
        auto it = out_arcs_.find(n);
        if (it != out_arcs_.end())
            for (std::size_t i : it->second)
                out.push_back(&arcs_[i]);
        return out;
    }

    bool operator==(const TimeDependentNetwork& o) const {
        return nodes_ == o.nodes_ && arcs_ == o.arcs_;
    }

private:
    std::vector<NodeId> nodes_;
    std::vector<Arc> arcs_;
    std::unordered_map<ArcId, std::size_t> arc_index_;
    std::map<NodeId, std::vector<std::size_t>> out_arcs_;
};

inline Seconds evaluate_profile(const TravelTimeProfile& profile, Seconds departure) {
    return profile.evaluate(departure);
}

using PenaltyMap = std::map<ArcId, double>;  // arc id -> factor >= 1

/// Earliest-arrival label-setting search. Ties on arrival broken by
/// (hop count, lexicographic arc-id sequence) for determinism.
/// Arcs in `penalties` have their evaluated travel time multiplied by the
/// factor. Returns nullopt when the destination is unreachable.
inline std::optional<TimedPath> reroute_query(const TimeDependentNetwork& net, NodeId origin,
                                              NodeId dest, Seconds departure,
                                              const PenaltyMap& penalties) {
    if (!net.has_node(origin))
        throw UnknownEntityError("unknown origin node " + std::to_string(origin));
    if (!net.has_node(dest))
        throw UnknownEntityError("unknown destination node " + std::to_string(dest));
    for (const auto& [arc_id, factor] : penalties) {
        net.arc(arc_id);
        if (factor < 1.0)
            throw ValidationError("penalty factor < 1 on arc " + std::to_string(arc_id));
    }

    struct Label {
        Seconds arrival;
        int hops;
        std::vector<ArcId> arcs;
        std::vector<Seconds> node_arrivals;
        NodeId node;

        bool better_than(const Label& o) const {
            if (arrival != o.arrival)
                return arrival < o.arrival;
            if (hops != o.hops)
                return hops < o.hops;
            return arcs < o.arcs;
        }
    };

    auto cmp = [](const Label& a, const Label& b) { return b.better_than(a); };
    std::vector<Label> heap;
    std::unordered_map<NodeId, Label> settled;

    heap.push_back({departure, 0, {}, {departure}, origin});
    while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Label cur = std::move(heap.back());
        heap.pop_back();
        auto it = settled.find(cur.node);
        if (it != settled.end() && !cur.better_than(it->second))
            continue;
        settled[cur.node] = cur;
        if (cur.node == dest)
            break;
        for (const Arc* a : net.outgoing(cur.node)) {
            if (a->blocked)
                continue;
            Seconds tt = a->profile.evaluate(cur.arrival);
            auto pit = penalties.find(a->id);
            if (pit != penalties.end())
                tt *= pit->second;
            Label next;
            next.arrival = cur.arrival + tt;
            next.hops = cur.hops + 1;
            next.arcs = cur.arcs;
            next.arcs.push_back(a->id);
            next.node_arrivals = cur.node_arrivals;
            next.node_arrivals.push_back(next.arrival);
            next.node = a->to;
            auto sit = settled.find(a->to);
            if (sit != settled.end() && !next.better_than(sit->second))
                continue;
            heap.push_back(std::move(next));
            std::push_heap(heap.begin(), heap.end(), cmp);
        }
    }

    auto it = settled.find(dest);
    if (it == settled.end())
        return std::nullopt;
    TimedPath path;
    path.departure = departure;
    path.arcs = it->second.arcs;
    path.node_arrivals = it->second.node_arrivals;
    path.arrival = it->second.arrival;
    return path;
}

inline std::optional<TimedPath> shortest_time_path(const TimeDependentNetwork& net, NodeId origin,
                                                   NodeId dest, Seconds departure) {
    return reroute_query(net, origin, dest, departure, {});
}

/// Reverses the listed arcs. Every listed arc must be reversible.
inline TimeDependentNetwork apply_contraflow(const TimeDependentNetwork& net,
                                             const std::set<ArcId>& to_reverse) {
    std::vector<Arc> arcs = net.arcs();
    std::unordered_set<ArcId> pending(to_reverse.begin(), to_reverse.end());
    for (Arc& a : arcs) {
        if (!pending.count(a.id))
            continue;
        if (!a.reversible)
            throw ValidationError("arc " + std::to_string(a.id) + " is not reversible");
        std::swap(a.from, a.to);
        pending.erase(a.id);
    }
    if (!pending.empty())
        throw UnknownEntityError("unknown arc id " + std::to_string(*pending.begin()));
    return TimeDependentNetwork(net.nodes(), std::move(arcs));
}

/// Blocks every arc whose head lies inside the zone; arcs leaving the zone
/// stay usable so vehicles already inside can exit.
inline TimeDependentNetwork block_zone(const TimeDependentNetwork& net,
                                       const std::set<NodeId>& zone) {
    for (NodeId n : zone)
        if (!net.has_node(n))
            throw UnknownEntityError("unknown node " + std::to_string(n));
    std::vector<Arc> arcs = net.arcs();
    for (Arc& a : arcs)
        if (zone.count(a.to))
            a.blocked = true;
    return TimeDependentNetwork(net.nodes(), std::move(arcs));
}

// ---------------------------------------------------------------------------
// JSON file format:
//   {"nodes": [{"id", "x", "y"}],
//    "arcs":  [{"id", "from", "to", "length_m", "reversible",
//               "profile": {"period_s", "breakpoints": [[offset_s, tt_s], ...]}}]}

inline TimeDependentNetwork network_from_json(const nlohmann::json& j) {
    std::vector<NodeId> nodes;
    for (const auto& n : j.at("nodes"))
        nodes.push_back(n.at("id").get<NodeId>());
    std::vector<Arc> arcs;
    for (const auto& a : j.at("arcs")) {
        Arc arc;
        arc.id = a.at("id").get<ArcId>();
        arc.from = a.at("from").get<NodeId>();
        arc.to = a.at("to").get<NodeId>();
        arc.length = a.at("length_m").get<double>();
        arc.reversible = a.value("reversible", false);
        arc.blocked = a.value("blocked", false);
        const auto& p = a.at("profile");
        arc.profile.period = p.value("period_s", 86400.0);
        arc.profile.breakpoints.clear();
        for (const auto& bp : p.at("breakpoints"))
            arc.profile.breakpoints.push_back(
                {bp.at(0).get<double>(), bp.at(1).get<double>()});
        arcs.push_back(std::move(arc));
    }
    return TimeDependentNetwork(std::move(nodes), std::move(arcs));
}

inline nlohmann::json network_to_json(const TimeDependentNetwork& net) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (NodeId n : net.nodes())
        j["nodes"].push_back({{"id", n}});
    j["arcs"] = nlohmann::json::array();
    for (const Arc& a : net.arcs()) {
        nlohmann::json bps = nlohmann::json::array();
        for (const auto& bp : a.profile.breakpoints)
            bps.push_back({bp.offset, bp.travel_time});
        j["arcs"].push_back({{"id", a.id},
                             {"from", a.from},
                             {"to", a.to},
                             {"length_m", a.length},
                             {"reversible", a.reversible},
                             {"blocked", a.blocked},
                             {"profile", {{"period_s", a.profile.period}, {"breakpoints", bps}}}});
    }
    return j;
}

}  // namespace evackit::net
