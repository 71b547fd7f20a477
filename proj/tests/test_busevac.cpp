#include <catch2/catch_amalgamated.hpp>

#include "evackit/busevac.hpp"
#include "evackit/oracle.hpp"
#include "support/generators.hpp"

using namespace evackit;
using Catch::Approx;
using busevac::VisitKind;

namespace {

// line network 0 - 1 - 2 - 3, 100 s per hop
net::TimeDependentNetwork line() { return testgen::grid_network(1, 4, 100.0); }

struct Instance {
    std::vector<busevac::BusDepot> depots;
    std::vector<busevac::PickupPoint> pickups;
    std::vector<busevac::Shelter> shelters;
};

// checks conservation, capacity, ordering, and deadline invariants
void check_invariants(const busevac::EvacPlan& plan, const Instance& in, Seconds deadline,
                      Seconds t0) {
    std::map<int, std::int64_t> boarded;
    std::map<int, std::int64_t> sheltered;
    std::int64_t alighted_total = 0;
    for (const auto& r : plan.routes) {
        std::int64_t seats = 0;
        for (const auto& d : in.depots)
            if (d.id == r.depot_id)
                seats = d.bus_capacity;
        std::int64_t onboard = 0;
        Seconds t = t0;
        for (const auto& v : r.visits) {
            CHECK(v.arrival >= t - 1e-9);
            CHECK(v.arrival <= deadline + 1e-9);
            CHECK(v.depart >= v.arrival);
            t = v.depart;
            if (v.kind == VisitKind::pickup) {
                const busevac::PickupPoint* p = nullptr;
                for (const auto& pp : in.pickups)
                    if (pp.id == v.id)
                        p = &pp;
                REQUIRE(p);
                CHECK(v.count >= 1);
                CHECK(v.count <= p->boarding_cap);
                boarded[v.id] += v.count;
                onboard += v.count;
            } else {
                sheltered[v.id] += v.count;
                alighted_total += v.count;
                onboard -= v.count;
            }
            CHECK(onboard >= 0);
            CHECK(onboard <= seats);
            CHECK(onboard == v.onboard_after);
        }
        CHECK(onboard == 0);  // no one left stranded on a bus
    }
    for (const auto& p : in.pickups) {
        std::int64_t b = boarded.count(p.id) ? boarded.at(p.id) : 0;
        auto it = plan.unserved.find(p.id);
        std::int64_t u = it == plan.unserved.end() ? 0 : it->second;
        CHECK(b + u == p.demand);
        CHECK(b <= p.demand);
    }
    for (const auto& s : in.shelters) {
        std::int64_t got = sheltered.count(s.id) ? sheltered.at(s.id) : 0;
        CHECK(got <= s.capacity);
    }
    CHECK(alighted_total == plan.total_evacuated);
}

}  // namespace

TEST_CASE("single bus, one pickup, one shelter: timing adds dwell and per-head") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 4, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 100}};
    auto plan =
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact);
    REQUIRE(plan.routes.size() == 1);
    const auto& visits = plan.routes[0].visits;
    REQUIRE(visits.size() == 2);
    CHECK(visits[0].kind == VisitKind::pickup);
    CHECK(visits[0].arrival == Approx(100.0));
    CHECK(visits[0].count == 4);
    CHECK(visits[0].depart == Approx(138.0));  // 30 dwell + 2 * 4 boarding
    CHECK(visits[1].kind == VisitKind::shelter);
    CHECK(visits[1].arrival == Approx(338.0));
    CHECK(visits[1].count == 4);
    CHECK(plan.total_evacuated == 4);
    CHECK(plan.completion_time == Approx(338.0));
    CHECK(plan.unserved.empty());
}

TEST_CASE("boarding cap forces repeated visits at the same point") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 4, 2}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 100}};
    auto plan =
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact);
    CHECK(plan.total_evacuated == 4);
    // two boarding visits of 2, back to back, then one shelter run
    REQUIRE(plan.routes.size() == 1);
    const auto& visits = plan.routes[0].visits;
    REQUIRE(visits.size() == 3);
    CHECK(visits[0].count == 2);
    CHECK(visits[1].count == 2);
    CHECK(visits[1].arrival == Approx(visits[0].depart));
    CHECK(plan.completion_time == Approx(368.0));
}

TEST_CASE("seat capacity forces shuttle runs") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 2}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 4, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 100}};
    auto plan =
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact);
    CHECK(plan.total_evacuated == 4);
    // out 100, board 2, shelter 334; back 568, board 2, shelter 802
    CHECK(plan.completion_time == Approx(802.0));
    check_invariants(plan, {depots, pickups, shelters}, 10000, 0);
}

TEST_CASE("shelter capacity bounds the evacuation") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 5, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 3}};
    auto plan =
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact);
    CHECK(plan.total_evacuated == 3);
    REQUIRE(plan.unserved.count(1));
    CHECK(plan.unserved.at(1) == 2);
    check_invariants(plan, {depots, pickups, shelters}, 10000, 0);
}

TEST_CASE("a deadline before any feasible run leaves everyone unserved") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 4, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 100}};
    auto plan = busevac::solve_ebpd(netw, depots, pickups, shelters, 50, 0, SolverMode::exact);
    CHECK(plan.total_evacuated == 0);
    CHECK(plan.routes.empty());
    CHECK(plan.unserved.at(1) == 4);
}

TEST_CASE("lexicographic objective: evacuating more beats finishing earlier") {
    auto netw = line();
    // one shelter close with tiny room, one far with plenty; the optimum
    // takes the longer run to move everyone
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 6, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 2, 1}, {2, 3, 100}};
    auto plan =
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact);
    CHECK(plan.total_evacuated == 6);
    check_invariants(plan, {depots, pickups, shelters}, 10000, 0);
}

TEST_CASE("validation errors") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 4, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 100}};
    CHECK_THROWS_AS(busevac::solve_ebpd(netw, depots, pickups, shelters, 0, 0),
                    ValidationError);
    CHECK_THROWS_AS(busevac::solve_ebpd(netw, depots, {{1, 1, -1, 10}}, shelters, 100, 0),
                    ValidationError);
    CHECK_THROWS_AS(busevac::solve_ebpd(netw, depots, {{1, 1, 4, 0}}, shelters, 100, 0),
                    ValidationError);
    CHECK_THROWS_AS(busevac::solve_ebpd(netw, {}, pickups, shelters, 100, 0), ValidationError);
    // zero total demand is fine and yields an empty plan
    auto plan = busevac::solve_ebpd(netw, {}, {{1, 1, 0, 10}}, shelters, 100, 0);
    CHECK(plan.total_evacuated == 0);
    CHECK(plan.routes.empty());
}

TEST_CASE("exact solver refuses instances beyond the micro bounds") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 3, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 4, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 100}};
    CHECK_THROWS_AS(
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact),
        InstanceTooLargeError);
}

TEST_CASE("property: exact matches the decision-tree optimum on micro instances") {
    testgen::Rng rng(53);
    std::uniform_int_distribution<int> node_d(0, 5);
    std::uniform_int_distribution<int> demand_d(1, 5);
    std::uniform_int_distribution<int> cap_d(2, 6);
    std::uniform_int_distribution<int> scap_d(2, 8);
    std::uniform_int_distribution<int> np_d(1, 2);
    for (int trial = 0; trial < 20; ++trial) {
        auto netw = testgen::grid_network(2, 3, 60);
        Instance in;
        in.depots = {{1, node_d(rng), 1, cap_d(rng)}};
        int np = np_d(rng);
        for (int i = 0; i < np; ++i)
            in.pickups.push_back({i + 1, node_d(rng), demand_d(rng), 3});
        in.shelters = {{1, node_d(rng), scap_d(rng)}};
        Seconds deadline = 3000;

        auto plan = busevac::solve_ebpd(netw, in.depots, in.pickups, in.shelters, deadline, 0,
                                        SolverMode::exact);
        auto ref = oracle::ebpd_optimum(netw, in.depots, in.pickups, in.shelters, deadline, 0);
        CHECK(plan.total_evacuated == ref.evacuated);
        if (plan.total_evacuated == ref.evacuated)
            CHECK(plan.completion_time == Approx(ref.completion).margin(1e-6));
        check_invariants(plan, in, deadline, 0);
    }
}

TEST_CASE("property: fuzzed greedy and evo plans hold every invariant") {
    testgen::Rng rng(59);
    std::uniform_int_distribution<int> node_d(0, 8);
    std::uniform_int_distribution<int> demand_d(0, 20);
    std::uniform_int_distribution<int> seats_d(4, 20);
    std::uniform_int_distribution<int> bcap_d(1, 8);
    std::uniform_int_distribution<int> scap_d(5, 40);
    std::uniform_int_distribution<int> n_d(1, 4);
    evo::EvoConfig cfg;
    cfg.generations = 10;
    cfg.population_size = 12;
    for (int trial = 0; trial < 40; ++trial) {
        auto netw = testgen::grid_network(3, 3, 45);
        Instance in;
        int nd = n_d(rng), np = n_d(rng), ns = n_d(rng);
        for (int i = 0; i < nd; ++i)
            in.depots.push_back({i + 1, node_d(rng), 1 + (i % 2), seats_d(rng)});
        for (int i = 0; i < np; ++i)
            in.pickups.push_back({i + 1, node_d(rng), demand_d(rng), bcap_d(rng)});
        for (int i = 0; i < ns; ++i)
            in.shelters.push_back({i + 1, node_d(rng), scap_d(rng)});
        Seconds deadline = 2000;
        cfg.rng_seed = trial;

        auto greedy = busevac::solve_ebpd(netw, in.depots, in.pickups, in.shelters, deadline, 0,
                                          SolverMode::greedy);
        check_invariants(greedy, in, deadline, 0);
        auto evod = busevac::solve_ebpd(netw, in.depots, in.pickups, in.shelters, deadline, 0,
                                        SolverMode::evo, {}, cfg);
        check_invariants(evod, in, deadline, 0);
        CHECK_FALSE(busevac::better_plan(greedy, evod));
    }
}

TEST_CASE("evo runs are deterministic under a fixed seed") {
    auto netw = testgen::grid_network(3, 3, 45);
    Instance in;
    in.depots = {{1, 0, 2, 8}};
    in.pickups = {{1, 2, 12, 4}, {2, 4, 9, 3}, {3, 7, 15, 5}};
    in.shelters = {{1, 8, 30}};
    evo::EvoConfig cfg;
    cfg.generations = 20;
    cfg.rng_seed = 5;
    auto a = busevac::solve_ebpd(netw, in.depots, in.pickups, in.shelters, 4000, 0,
                                 SolverMode::evo, {}, cfg);
    auto b = busevac::solve_ebpd(netw, in.depots, in.pickups, in.shelters, 4000, 0,
                                 SolverMode::evo, {}, cfg);
    CHECK(busevac::plan_to_json(a) == busevac::plan_to_json(b));
}

TEST_CASE("replan session tracks demand updates and bus positions") {
    auto netw = line();
    busevac::ReplanSession session({{1, 0, 1, 10}}, {{1, 1, 4, 10}}, {{1, 3, 100}});
    CHECK_FALSE(session.dirty());
    CHECK_THROWS_AS(session.update_demand(99, 5), UnknownEntityError);
    CHECK_THROWS_AS(session.update_demand(1, -1), ValidationError);
    CHECK_FALSE(session.dirty());

    session.update_demand(1, 4);  // unchanged, stays clean
    CHECK_FALSE(session.dirty());
    session.update_demand(1, 6);
    CHECK(session.dirty());
    CHECK(session.pickups()[0].demand == 6);

    auto plan = session.resolve(netw, 10000, 0, SolverMode::exact);
    CHECK_FALSE(session.dirty());
    CHECK(plan.total_evacuated == 6);

    // a bus already at node 2 replaces the depot start
    session.set_bus_position(7, 2, 10);
    session.update_demand(1, 2);
    auto plan2 = session.resolve(netw, 10000, 500, SolverMode::exact);
    CHECK(plan2.total_evacuated == 2);
    REQUIRE(plan2.routes.size() == 1);
    CHECK(plan2.routes[0].depot_id == 7);
    // from node 2, pickup at node 1 is one hop: arrival 600
    CHECK(plan2.routes[0].visits[0].arrival == Approx(600.0));
}

TEST_CASE("plan JSON and pickup CSV reconcile boarded and unserved counts") {
    auto netw = line();
    std::vector<busevac::BusDepot> depots = {{1, 0, 1, 10}};
    std::vector<busevac::PickupPoint> pickups = {{1, 1, 5, 10}};
    std::vector<busevac::Shelter> shelters = {{1, 3, 3}};
    auto plan =
        busevac::solve_ebpd(netw, depots, pickups, shelters, 10000, 0, SolverMode::exact);
    auto j = busevac::plan_to_json(plan);
    CHECK(j["total_evacuated"] == 3);
    REQUIRE(j["unserved"].size() == 1);
    CHECK(j["unserved"][0]["pickup"] == 1);
    CHECK(j["unserved"][0]["remaining"] == 2);
    auto csv = busevac::pickup_summary_csv(plan, pickups);
    CHECK(csv.find("pickup_id,initial_demand,boarded,unserved") == 0);
    CHECK(csv.find("1,5,3,2") != std::string::npos);
}
