#pragma once

// Deterministic discrete-event execution of a full scenario: incidents flow
// through the CCU, the department solvers plan, vehicles move on the
// network, signal controllers grant preemption, and the headline metrics
// (TET, CT, max patient wait, evacuated count) fall out of the trace.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evackit/busevac.hpp"
#include "evackit/ccu.hpp"
#include "evackit/common.hpp"
#include "evackit/cover.hpp"
#include "evackit/dispatch.hpp"
#include "evackit/net.hpp"
#include "evackit/scenario.hpp"
#include "evackit/signal.hpp"

namespace evackit::sim {

enum class EventKind {
    incident,
    demand_update,
    signal_tick,
    crossing_confirm,
    vehicle_arrival,
    boarding_complete,
};

inline int rank(EventKind k) { return static_cast<int>(k); }

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::incident: return "incident";
        case EventKind::demand_update: return "demand_update";
        case EventKind::signal_tick: return "signal_tick";
        case EventKind::crossing_confirm: return "crossing_confirm";
        case EventKind::vehicle_arrival: return "vehicle_arrival";
        case EventKind::boarding_complete: return "boarding_complete";
    }
    return "?";
}

struct TraceEvent {
    Seconds time = 0;
    EventKind kind = EventKind::incident;
    nlohmann::json payload;
};

struct Metrics {
    Seconds tet = 0;                // first incident -> last response completion
    Seconds ct = 0;                 // vehicle time spent on penalized arcs
    Seconds max_patient_wait = 0;
    std::int64_t total_evacuated = 0;
    Seconds notification_latency = 0;  // mean over emitted notifications

    nlohmann::json to_json() const {
        return {{"tet_s", tet},
                {"ct_s", ct},
                {"max_patient_wait_s", max_patient_wait},
                {"total_evacuated", total_evacuated},
                {"notification_latency_s", notification_latency}};
    }
};

struct SimResult {
    Metrics metrics;
    std::vector<TraceEvent> trace;
    cover::CoverAssignment cover_assignment;
    dispatch::DispatchPlan dispatch_plan;
    busevac::EvacPlan evac_plan;
    std::vector<ccu::Notification> notifications;
    net::TimeDependentNetwork active_network;  // after contraflow + zone blocking
    std::map<NodeId, std::string> signal_traces;  // per-site controller CSV
};

inline std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
    std::ostringstream out;
    for (const auto& e : trace) {
        nlohmann::json j = e.payload;
        j["t"] = e.time;
        j["kind"] = to_string(e.kind);
        out << j.dump() << "\n";
    }
    return out.str();
}

/// Pure aggregation: Metrics is a function of the trace alone.
inline Metrics compute_metrics(const std::vector<TraceEvent>& trace) {
    Metrics m;
    std::optional<Seconds> first_incident;
    std::optional<Seconds> last_response;
    Seconds latency_sum = 0;
    std::int64_t latency_count = 0;
    for (const auto& e : trace) {
        switch (e.kind) {
            case EventKind::incident: {
                if (!first_incident || e.time < *first_incident)
                    first_incident = e.time;
                if (!e.payload.contains("notifications"))
                    throw ValidationError("malformed trace: incident without notifications");
                for (const auto& n : e.payload["notifications"]) {
                    latency_sum += n.at("notified_at").get<double>() - e.time;
                    ++latency_count;
                }
                break;
            }
            case EventKind::vehicle_arrival: {
                if (!last_response || e.time > *last_response)
                    last_response = e.time;
                m.ct += e.payload.value("congested_time_s", 0.0);
                if (e.payload.contains("wait_s"))
                    m.max_patient_wait =
                        std::max(m.max_patient_wait, e.payload["wait_s"].get<double>());
                m.total_evacuated += e.payload.value("alighted", std::int64_t{0});
                break;
            }
            case EventKind::boarding_complete: {
                if (!last_response || e.time > *last_response)
                    last_response = e.time;
                break;
            }
            default:
                break;
        }
    }
    if (first_incident && last_response && *last_response > *first_incident)
        m.tet = *last_response - *first_incident;
    if (latency_count > 0)
        m.notification_latency = latency_sum / static_cast<double>(latency_count);
    return m;
}

namespace detail {

struct LegInfo {
    Seconds congested_time = 0;
    Meters length = 0;
    std::vector<std::pair<NodeId, Seconds>> node_times;  // includes both endpoints
};

/// Recomputes a leg on the active network to attribute per-arc times.
inline LegInfo leg_info(const net::TimeDependentNetwork& network, NodeId from, NodeId to,
                        Seconds depart, const net::PenaltyMap& penalized) {
    LegInfo info;
    if (from == to) {
        info.node_times = {{from, depart}};
        return info;
    }
    auto path = net::shortest_time_path(network, from, to, depart);
    if (!path)
        return info;  // planner already guaranteed reachability
    Seconds t = depart;
    info.node_times.push_back({from, depart});
    NodeId pos = from;
    for (std::size_t i = 0; i < path->arcs.size(); ++i) {
        const net::Arc& arc = network.arc(path->arcs[i]);
        Seconds arrive = path->node_arrivals[i + 1];
        if (penalized.count(arc.id))
            info.congested_time += arrive - t;
        info.length += arc.length;
        pos = arc.to;
        info.node_times.push_back({pos, arrive});
        t = arrive;
    }
    return info;
}

struct SignalItem {
    Seconds time;
    int order;  // 0 tick, 1 request, 2 confirm
    std::size_t site;
    signal::PreemptionRequest request;  // for order 1
    int confirm_vehicle = -1;           // for order 2

    bool operator<(const SignalItem& o) const {
        if (time != o.time)
            return time < o.time;
        if (order != o.order)
            return order < o.order;
        if (site != o.site)
            return site < o.site;
        return confirm_vehicle < o.confirm_vehicle;
    }
};

}  // namespace detail

inline SimResult run(const Scenario& scenario) {
    auto problems = scenario.validate();
    if (!problems.empty()) {
        std::string msg = "scenario invalid:";
        for (const auto& p : problems)
            msg += "\n  - " + p;
        throw ValidationError(msg);
    }

    SimResult result;
    std::vector<TraceEvent> trace;

    // stage 2 prep: supply + mitigation management reshape the network
    net::TimeDependentNetwork active = scenario.network;
    if (!scenario.contraflow_arcs.empty())
        active = net::apply_contraflow(active, scenario.contraflow_arcs);
    if (!scenario.hazard_zone.empty())
        active = net::block_zone(active, scenario.hazard_zone);

    // stage 1: ingest incidents in timestamp order
    std::vector<ccu::IncidentMessage> incidents = scenario.incidents;
    std::sort(incidents.begin(), incidents.end(),
              [](const ccu::IncidentMessage& a, const ccu::IncidentMessage& b) {
                  if (a.timestamp != b.timestamp)
                      return a.timestamp < b.timestamp;
                  return a.id < b.id;
              });
    ccu::CcuBus bus;
    Seconds t_plan = scenario.t0;
    for (const auto& msg : incidents) {
        auto notifications = bus.ingest(msg);
        nlohmann::json notified = nlohmann::json::array();
        for (const auto& n : notifications) {
            notified.push_back({{"department", ccu::to_string(n.department)},
                                {"notified_at", msg.timestamp + scenario.notification_latency}});
            result.notifications.push_back(n);
        }
        trace.push_back({msg.timestamp, EventKind::incident,
                         {{"incident", msg.id},
                          {"condition", msg.observed_condition},
                          {"location", msg.location},
                          {"notifications", notified}}});
        t_plan = std::max(t_plan, msg.timestamp + scenario.notification_latency);
    }

    // stage 3: department planning
    if (!scenario.hospitals.empty() && !scenario.communities.empty())
        result.cover_assignment =
            cover::solve_accp(active, scenario.hospitals, scenario.communities,
                              scenario.coverage_threshold, t_plan, scenario.solver_mode,
                              scenario.evo_config);

    bool has_fleet = false;
    for (const auto& f : scenario.fleets)
        has_fleet |= f.ambulances > 0;
    if (!scenario.patients.empty() && has_fleet)
        result.dispatch_plan = dispatch::solve_group_dispatch(
            active, scenario.fleets, scenario.patients, t_plan, scenario.solver_mode,
            scenario.dispatch_params, scenario.evo_config);

    std::int64_t total_demand = 0;
    for (const auto& p : scenario.pickups)
        total_demand += p.demand;
    if (total_demand > 0 && !scenario.depots.empty())
        result.evac_plan =
            busevac::solve_ebpd(active, scenario.depots, scenario.pickups, scenario.shelters,
                                scenario.deadline, t_plan, scenario.solver_mode,
                                scenario.bus_params, scenario.evo_config);

    // household medical incidents: single pickup-and-drop-off runs from the
    // covering hospital (nearest reachable hospital when uncovered)
    struct DarpRun {
        std::int64_t incident_id;
        NodeId hospital;
        dispatch::RoundTrip trip;
    };
    std::vector<DarpRun> darp_runs;
    for (const auto& msg : incidents) {
        ccu::Classification cls = ccu::classify(msg);
        if (cls.type != ccu::EmergencyType::medical || scenario.hospitals.empty())
            continue;
        std::optional<NodeId> hospital_node;
        for (const auto& c : scenario.communities) {
            if (c.location != msg.location)
                continue;
            auto it = result.cover_assignment.assignment.find(c.id);
            if (it == result.cover_assignment.assignment.end())
                continue;
            for (const auto& h : scenario.hospitals)
                if (h.id == it->second)
                    hospital_node = h.location;
        }
        if (!hospital_node) {
            Seconds best = 0;
            for (const auto& h : scenario.hospitals) {
                auto path = net::shortest_time_path(active, h.location, msg.location, t_plan);
                if (!path)
                    continue;
                if (!hospital_node || path->arrival < best) {
                    hospital_node = h.location;
                    best = path->arrival;
                }
            }
        }
        if (!hospital_node)
            continue;
        auto trip = dispatch::route_single(active, *hospital_node, msg.location, t_plan,
                                           scenario.dispatch_params.on_site_service);
        if (trip)
            darp_runs.push_back({msg.id, *hospital_node, *trip});
    }

    // stage 4: execution. Vehicle movements follow the plans exactly;
    // preemption clears signals ahead of the emergency vehicles.
    std::vector<detail::SignalItem> signal_items;
    std::map<NodeId, std::size_t> site_index;
    for (std::size_t i = 0; i < scenario.signals.size(); ++i)
        site_index[scenario.signals[i].node] = i;

    auto add_preemptions = [&](const detail::LegInfo& leg, int vehicle_num,
                               signal::VehicleClass cls,
                               const std::optional<signal::BusAttributes>& attrs) {
        for (std::size_t i = 1; i < leg.node_times.size(); ++i) {
            auto it = site_index.find(leg.node_times[i].first);
            if (it == site_index.end())
                continue;
            Seconds eta = leg.node_times[i].second;
            Seconds requested = std::max(leg.node_times.front().second, eta - 30.0);
            signal::PreemptionRequest req;
            req.vehicle_id = vehicle_num;
            req.vehicle_class = cls;
            req.approach = 0;  // single-approach abstraction per site
            req.eta = eta;
            req.requested_at = requested;
            req.bus = attrs;
            signal_items.push_back({requested, 1, it->second, req, -1});
            signal_items.push_back({eta, 2, it->second, {}, vehicle_num});
        }
    };

    Seconds last_activity = t_plan;

    // ambulance group dispatch execution
    for (const auto& route : result.dispatch_plan.routes) {
        NodeId pos = 0;
        Seconds t = t_plan;
        for (const auto& f : scenario.fleets)
            if (f.hospital_id == route.hospital_id)
                pos = f.location;
        int vehicle_num = 1000 + route.ambulance_id;
        for (const auto& stop : route.stops) {
            auto leg = detail::leg_info(active, pos, stop.location, t, scenario.penalized_arcs);
            add_preemptions(leg, vehicle_num, signal::VehicleClass::ambulance, std::nullopt);
            nlohmann::json payload = {{"vehicle", "amb-" + std::to_string(route.ambulance_id)},
                                      {"stop", dispatch::to_string(stop.kind)},
                                      {"location", stop.location},
                                      {"congested_time_s", leg.congested_time}};
            if (stop.kind != dispatch::StopKind::deliver_hospital) {
                auto wit = result.dispatch_plan.wait.find(stop.patient_id);
                if (wit != result.dispatch_plan.wait.end())
                    payload["wait_s"] = wit->second;
            }
            payload["patient"] = stop.patient_id;
            trace.push_back({stop.arrival, EventKind::vehicle_arrival, payload});
            last_activity = std::max(last_activity, stop.depart);
            pos = stop.location;
            t = stop.depart;
        }
    }

    // DARP household runs
    for (std::size_t i = 0; i < darp_runs.size(); ++i) {
        const auto& run = darp_runs[i];
        int vehicle_num = 3000 + static_cast<int>(i);
        // outbound
        {
            NodeId dest = run.trip.outbound.arcs.empty()
                              ? run.hospital
                              : active.arc(run.trip.outbound.arcs.back()).to;
            auto leg = detail::leg_info(active, run.hospital, dest,
                                        run.trip.outbound.departure, scenario.penalized_arcs);
            add_preemptions(leg, vehicle_num, signal::VehicleClass::ambulance, std::nullopt);
            trace.push_back({run.trip.outbound.arrival, EventKind::vehicle_arrival,
                             {{"vehicle", "darp-" + std::to_string(i)},
                              {"stop", "darp_outbound"},
                              {"incident", run.incident_id},
                              {"location", dest},
                              {"congested_time_s", leg.congested_time}}});
        }
        // return
        {
            NodeId origin = run.trip.outbound.arcs.empty()
                                ? run.hospital
                                : active.arc(run.trip.outbound.arcs.back()).to;
            auto leg = detail::leg_info(active, origin, run.hospital,
                                        run.trip.inbound.departure, scenario.penalized_arcs);
            add_preemptions(leg, vehicle_num, signal::VehicleClass::ambulance, std::nullopt);
            trace.push_back({run.trip.inbound.arrival, EventKind::vehicle_arrival,
                             {{"vehicle", "darp-" + std::to_string(i)},
                              {"stop", "darp_return"},
                              {"incident", run.incident_id},
                              {"location", run.hospital},
                              {"congested_time_s", leg.congested_time}}});
            last_activity = std::max(last_activity, run.trip.inbound.arrival);
        }
    }

    // bus evacuation execution
    for (const auto& route : result.evac_plan.routes) {
        NodeId pos = 0;
        Seconds t = t_plan;
        for (const auto& d : scenario.depots)
            if (d.id == route.depot_id)
                pos = d.location;
        int vehicle_num = 2000 + route.bus_id;
        std::int64_t onboard = 0;
        for (std::size_t v = 0; v < route.visits.size(); ++v) {
            const auto& visit = route.visits[v];
            auto leg = detail::leg_info(active, pos, visit.location, t, scenario.penalized_arcs);
            int remaining_pickups = 0;
            for (std::size_t w = v; w < route.visits.size(); ++w)
                if (route.visits[w].kind == busevac::VisitKind::pickup)
                    ++remaining_pickups;
            signal::BusAttributes attrs{onboard, leg.length, remaining_pickups};
            add_preemptions(leg, vehicle_num, signal::VehicleClass::emergency_bus, attrs);
            nlohmann::json payload = {
                {"vehicle", "bus-" + std::to_string(route.bus_id)},
                {"visit", visit.kind == busevac::VisitKind::pickup ? "pickup" : "shelter"},
                {"id", visit.id},
                {"location", visit.location},
                {"onboard_after", visit.onboard_after},
                {"congested_time_s", leg.congested_time}};
            if (visit.kind == busevac::VisitKind::pickup)
                payload["boarded"] = visit.count;
            else
                payload["alighted"] = visit.count;
            trace.push_back({visit.arrival, EventKind::vehicle_arrival, payload});
            if (visit.kind == busevac::VisitKind::pickup)
                trace.push_back({visit.depart, EventKind::boarding_complete,
                                 {{"vehicle", "bus-" + std::to_string(route.bus_id)},
                                  {"pickup", visit.id}}});
            last_activity = std::max(last_activity, visit.depart);
            onboard = visit.onboard_after;
            pos = visit.location;
            t = visit.depart;
        }
    }

    // signal controllers: 1 Hz ticks from t0 until activity settles
    if (!scenario.signals.empty()) {
        Seconds tick_end = last_activity;
        if (trace.empty() || incidents.empty())
            tick_end = scenario.t0 + scenario.signals.front().plan.cycle();
        for (Seconds t = scenario.t0; t <= tick_end; t += 1.0)
            for (std::size_t s = 0; s < scenario.signals.size(); ++s)
                signal_items.push_back({t, 0, s, {}, -1});

        std::sort(signal_items.begin(), signal_items.end());
        std::vector<signal::SignalController> controllers;
        for (const auto& site : scenario.signals)
            controllers.emplace_back(site.plan, scenario.t0);
        for (const auto& item : signal_items) {
            auto& c = controllers[item.site];
            if (item.order == 0) {
                c.tick(item.time);
                trace.push_back({item.time, EventKind::signal_tick,
                                 {{"site", scenario.signals[item.site].node},
                                  {"phase", c.current_phase()},
                                  {"mode", static_cast<int>(c.mode())}}});
            } else if (item.order == 1) {
                c.request_preemption(item.request, item.time);
            } else {
                c.tick(item.time, {item.confirm_vehicle});
                trace.push_back({item.time, EventKind::crossing_confirm,
                                 {{"site", scenario.signals[item.site].node},
                                  {"vehicle_num", item.confirm_vehicle}}});
            }
        }
        for (std::size_t s = 0; s < scenario.signals.size(); ++s)
            result.signal_traces[scenario.signals[s].node] =
                signal::controller_trace_csv(controllers[s]);
    }

    // deterministic event order: time, then kind rank, then payload text
    std::stable_sort(trace.begin(), trace.end(), [](const TraceEvent& a, const TraceEvent& b) {
        if (a.time != b.time)
            return a.time < b.time;
        if (rank(a.kind) != rank(b.kind))
            return rank(a.kind) < rank(b.kind);
        return a.payload.dump() < b.payload.dump();
    });

    result.trace = std::move(trace);
    result.metrics = compute_metrics(result.trace);
    result.active_network = std::move(active);
    return result;
}

}  // namespace evackit::sim
