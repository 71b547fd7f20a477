#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "evackit/net.hpp"
#include "evackit/oracle.hpp"
#include "support/generators.hpp"

using namespace evackit;
using Catch::Approx;

namespace {

net::TimeDependentNetwork triangle(double direct_tt = 25.0) {
    // 0 -> 1 -> 2 two-hop at 10s each, 0 -> 2 direct
    std::vector<net::Arc> arcs = {
        {0, 0, 1, net::TravelTimeProfile::constant(10), 100, false, false},
        {1, 1, 2, net::TravelTimeProfile::constant(10), 100, false, false},
        {2, 0, 2, net::TravelTimeProfile::constant(direct_tt), 100, false, false},
    };
    return net::TimeDependentNetwork({0, 1, 2}, std::move(arcs));
}

}  // namespace

TEST_CASE("evaluate_profile: constant profile ignores departure") {
    auto p = net::TravelTimeProfile::constant(60);
    CHECK(net::evaluate_profile(p, 12345) == Approx(60.0));
    CHECK(net::evaluate_profile(p, 0) == Approx(60.0));
    CHECK(net::evaluate_profile(p, 86400 * 3 + 7) == Approx(60.0));
}

TEST_CASE("evaluate_profile: linear interpolation between breakpoints") {
    net::TravelTimeProfile p;
    p.breakpoints = {{0, 60}, {3600, 120}};
    p.validate();
    CHECK(net::evaluate_profile(p, 1800) == Approx(90.0));
    CHECK(net::evaluate_profile(p, 0) == Approx(60.0));
    CHECK(net::evaluate_profile(p, 3600) == Approx(120.0));
}

TEST_CASE("evaluate_profile: interpolation across the period wrap") {
    net::TravelTimeProfile p;
    p.breakpoints = {{0, 60}, {43200, 60.5}};
    p.validate();
    // independent straight-line oracle across the wrap segment
    // (43200, 60.5) -> (86400, 60)
    double frac = (86399.0 - 43200.0) / (86400.0 - 43200.0);
    double expected = 60.5 + frac * (60.0 - 60.5);
    CHECK(net::evaluate_profile(p, 86399) == Approx(expected));
    // also exact at the wrap point itself
    CHECK(net::evaluate_profile(p, 86400) == Approx(60.0));
}

TEST_CASE("profile validation rejects FIFO violations and bad shapes") {
    net::TravelTimeProfile drop;
    drop.breakpoints = {{0, 500}, {100, 10}};  // slope -4.9
    CHECK_THROWS_AS(drop.validate(), ValidationError);

    net::TravelTimeProfile unsorted;
    unsorted.breakpoints = {{100, 60}, {50, 70}};
    CHECK_THROWS_AS(unsorted.validate(), ValidationError);

    net::TravelTimeProfile nonpositive;
    nonpositive.breakpoints = {{0, 0}};
    CHECK_THROWS_AS(nonpositive.validate(), ValidationError);

    net::TravelTimeProfile wrap_violation;
    // wrap segment from (86000, 10) back to (0, 10000) is fine (rising);
    // but (0, 10000) -> (200, 10) drops far too fast
    wrap_violation.breakpoints = {{0, 10000}, {200, 10}};
    CHECK_THROWS_AS(wrap_violation.validate(), ValidationError);
}

TEST_CASE("shortest_time_path: origin equals destination") {
    auto netw = triangle();
    auto path = net::shortest_time_path(netw, 0, 0, 500);
    REQUIRE(path);
    CHECK(path->arcs.empty());
    CHECK(path->arrival == Approx(500.0));
}

TEST_CASE("shortest_time_path: static triangle prefers the two-hop route") {
    auto netw = triangle(25.0);
    auto path = net::shortest_time_path(netw, 0, 2, 100);
    REQUIRE(path);
    CHECK(path->arcs == std::vector<ArcId>{0, 1});
    CHECK(path->arrival == Approx(120.0));
}

TEST_CASE("shortest_time_path: unreachable destination reported distinctly") {
    std::vector<net::Arc> arcs = {
        {0, 0, 1, net::TravelTimeProfile::constant(10), 100, false, true},  // blocked
    };
    net::TimeDependentNetwork netw({0, 1}, std::move(arcs));
    CHECK_FALSE(net::shortest_time_path(netw, 0, 1, 0));
}

TEST_CASE("shortest_time_path: departure time flips the optimal route") {
    // arc 0 gets congested after offset 100; the detour 0->2->3 stays flat
    net::TravelTimeProfile rising;
    rising.breakpoints = {{0, 10}, {100, 500}};
    rising.validate();
    std::vector<net::Arc> arcs = {
        {0, 0, 1, rising, 100, false, false},
        {1, 1, 3, net::TravelTimeProfile::constant(10), 100, false, false},
        {2, 0, 2, net::TravelTimeProfile::constant(100), 100, false, false},
        {3, 2, 3, net::TravelTimeProfile::constant(100), 100, false, false},
    };
    net::TimeDependentNetwork netw({0, 1, 2, 3}, std::move(arcs));

    auto early = net::shortest_time_path(netw, 0, 3, 0);
    REQUIRE(early);
    CHECK(early->arcs == std::vector<ArcId>{0, 1});

    auto late = net::shortest_time_path(netw, 0, 3, 200);
    REQUIRE(late);
    CHECK(late->arcs == std::vector<ArcId>{2, 3});

    for (Seconds dep : {0.0, 50.0, 200.0, 1000.0}) {
        auto got = net::shortest_time_path(netw, 0, 3, dep);
        auto want = oracle::best_arrival_enumerated(netw, 0, 3, dep);
        REQUIRE(got);
        REQUIRE(want);
        CHECK(got->arrival == Approx(*want));
    }
}

TEST_CASE("reroute_query: empty and unit penalties match shortest_time_path") {
    auto netw = triangle(25.0);
    auto base = net::shortest_time_path(netw, 0, 2, 50);
    auto empty = net::reroute_query(netw, 0, 2, 50, {});
    net::PenaltyMap unit = {{0, 1.0}, {1, 1.0}, {2, 1.0}};
    auto ones = net::reroute_query(netw, 0, 2, 50, unit);
    REQUIRE(base);
    REQUIRE(empty);
    REQUIRE(ones);
    CHECK(base->arcs == empty->arcs);
    CHECK(base->arrival == Approx(empty->arrival));
    CHECK(base->arcs == ones->arcs);
    CHECK(base->arrival == Approx(ones->arrival));
}

TEST_CASE("reroute_query: penalized arc forces a detour") {
    auto netw = triangle(15.0);  // direct would win unpenalized
    auto base = net::shortest_time_path(netw, 0, 2, 0);
    REQUIRE(base);
    CHECK(base->arcs == std::vector<ArcId>{2});

    net::PenaltyMap pen = {{2, 10.0}};
    auto detour = net::reroute_query(netw, 0, 2, 0, pen);
    REQUIRE(detour);
    CHECK(detour->arcs == std::vector<ArcId>{0, 1});
    auto want = oracle::best_arrival_enumerated(netw, 0, 2, 0, pen);
    REQUIRE(want);
    CHECK(detour->arrival == Approx(*want));
}

TEST_CASE("reroute_query rejects penalty factors below 1") {
    auto netw = triangle();
    net::PenaltyMap bad = {{2, 0.5}};
    CHECK_THROWS_AS(net::reroute_query(netw, 0, 2, 0, bad), ValidationError);
}

TEST_CASE("apply_contraflow: empty set is identity, single reversal is involutive") {
    std::vector<net::Arc> arcs = {
        {0, 0, 1, net::TravelTimeProfile::constant(10), 100, true, false},
        {1, 1, 2, net::TravelTimeProfile::constant(10), 100, false, false},
    };
    net::TimeDependentNetwork netw({0, 1, 2}, arcs);

    CHECK(net::apply_contraflow(netw, {}) == netw);

    auto once = net::apply_contraflow(netw, {0});
    CHECK(once.arc(0).from == 1);
    CHECK(once.arc(0).to == 0);
    CHECK(once.arc(0).profile == netw.arc(0).profile);
    CHECK_FALSE(net::shortest_time_path(once, 0, 1, 0));

    auto twice = net::apply_contraflow(once, {0});
    CHECK(twice == netw);

    CHECK_THROWS_AS(net::apply_contraflow(netw, {1}), ValidationError);
    CHECK_THROWS_AS(net::apply_contraflow(netw, {99}), UnknownEntityError);
}

TEST_CASE("apply_contraflow: reversal opens a previously unreachable destination") {
    // all arcs point away from node 3; reversing two reversible arcs opens
    // the way in
    std::vector<net::Arc> arcs = {
        {0, 3, 2, net::TravelTimeProfile::constant(10), 100, true, false},
        {1, 2, 0, net::TravelTimeProfile::constant(10), 100, true, false},
        {2, 0, 1, net::TravelTimeProfile::constant(10), 100, false, false},
    };
    net::TimeDependentNetwork netw({0, 1, 2, 3}, std::move(arcs));
    CHECK_FALSE(net::shortest_time_path(netw, 0, 3, 0));
    auto flipped = net::apply_contraflow(netw, {0, 1});
    auto path = net::shortest_time_path(flipped, 0, 3, 0);
    REQUIRE(path);
    CHECK(path->arcs == std::vector<ArcId>{1, 0});
}

TEST_CASE("block_zone: semantics and errors") {
    auto netw = triangle(15.0);
    CHECK(net::block_zone(netw, {}) == netw);

    auto blocked = net::block_zone(netw, {2});
    CHECK_FALSE(net::shortest_time_path(blocked, 0, 2, 0));
    // arcs leaving the zone would remain usable; here node 2 has none

    CHECK_THROWS_AS(net::block_zone(netw, {99}), UnknownEntityError);
}

TEST_CASE("block_zone: detour survives when only the direct route is blocked") {
    // 0->1->3 direct through zone node 1; 0->2->3 detour avoids it
    std::vector<net::Arc> arcs = {
        {0, 0, 1, net::TravelTimeProfile::constant(5), 100, false, false},
        {1, 1, 3, net::TravelTimeProfile::constant(5), 100, false, false},
        {2, 0, 2, net::TravelTimeProfile::constant(50), 100, false, false},
        {3, 2, 3, net::TravelTimeProfile::constant(50), 100, false, false},
    };
    net::TimeDependentNetwork netw({0, 1, 2, 3}, std::move(arcs));
    auto zoned = net::block_zone(netw, {1});
    auto path = net::shortest_time_path(zoned, 0, 3, 0);
    REQUIRE(path);
    CHECK(path->arcs == std::vector<ArcId>{2, 3});
    auto want = oracle::best_arrival_enumerated(zoned, 0, 3, 0);
    REQUIRE(want);
    CHECK(path->arrival == Approx(*want));
}

TEST_CASE("property: FIFO inequality holds on random profiles") {
    testgen::Rng rng(7);
    std::uniform_real_distribution<double> t_d(0.0, 86400.0 * 2);
    for (int i = 0; i < 200; ++i) {
        auto p = testgen::random_profile(rng);
        for (int k = 0; k < 20; ++k) {
            double t1 = t_d(rng), t2 = t_d(rng);
            if (t1 > t2)
                std::swap(t1, t2);
            CHECK(t1 + p.evaluate(t1) <= t2 + p.evaluate(t2) + 1e-6);
        }
    }
}

TEST_CASE("property: search arrival matches exhaustive enumeration on random nets") {
    testgen::Rng rng(11);
    std::uniform_real_distribution<double> dep_d(0.0, 86400.0);
    for (int i = 0; i < 60; ++i) {
        auto netw = testgen::random_network(rng);
        std::uniform_int_distribution<int> node_d(0, static_cast<int>(netw.nodes().size()) - 1);
        NodeId o = netw.nodes()[node_d(rng)];
        NodeId d = netw.nodes()[node_d(rng)];
        Seconds dep = dep_d(rng);
        auto got = net::shortest_time_path(netw, o, d, dep);
        auto want = oracle::best_arrival_enumerated(netw, o, d, dep);
        REQUIRE(got.has_value() == want.has_value());
        if (got)
            CHECK(got->arrival == Approx(*want).margin(1e-6));
    }
}

TEST_CASE("property: departing later never arrives earlier under FIFO") {
    testgen::Rng rng(13);
    std::uniform_real_distribution<double> dep_d(0.0, 86400.0);
    for (int i = 0; i < 30; ++i) {
        auto netw = testgen::random_network(rng);
        std::uniform_int_distribution<int> node_d(0, static_cast<int>(netw.nodes().size()) - 1);
        NodeId o = netw.nodes()[node_d(rng)];
        NodeId d = netw.nodes()[node_d(rng)];
        double t1 = dep_d(rng), t2 = dep_d(rng);
        if (t1 > t2)
            std::swap(t1, t2);
        auto p1 = net::shortest_time_path(netw, o, d, t1);
        auto p2 = net::shortest_time_path(netw, o, d, t2);
        REQUIRE(p1.has_value() == p2.has_value());
        if (p1)
            CHECK(p1->arrival <= p2->arrival + 1e-6);
    }
}

TEST_CASE("network JSON round-trips and the loader names FIFO-violating arcs") {
    auto netw = triangle(25.0);
    auto j = net::network_to_json(netw);
    auto back = net::network_from_json(j);
    CHECK(back == netw);

    nlohmann::json bad = j;
    bad["arcs"][0]["profile"]["breakpoints"] = {{0.0, 500.0}, {100.0, 10.0}};
    try {
        net::network_from_json(bad);
        FAIL("expected FIFO rejection");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("arc 0") != std::string::npos);
        CHECK(std::string(e.what()).find("FIFO") != std::string::npos);
    }
}
