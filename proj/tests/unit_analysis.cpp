#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "mirage/analysis.hpp"

using namespace mirage;
using Catch::Approx;

TEST_CASE("scan_fraction matches the frozen reference point") {
    // 20k bots, 32 Mbit/s each, 300-bit probes, 300 s interval, 64-bit space.
    double f = analysis::scan_fraction(2e4, 33554432.0, 300.0, 300.0, 64);
    CHECK(f == Approx(3.6379788e-8).epsilon(1e-6));

    // Probes per bot are floored: just below one whole probe means zero.
    CHECK(analysis::scan_fraction(1e6, 299.0, 300.0, 1.0, 64) == 0.0);
    // The fraction saturates at 1.
    CHECK(analysis::scan_fraction(1e30, 1e9, 300.0, 300.0, 16) == 1.0);
}

TEST_CASE("scan_fraction validates its domain") {
    CHECK_THROWS_AS(analysis::scan_fraction(-1, 1, 1, 1, 64), std::domain_error);
    CHECK_THROWS_AS(analysis::scan_fraction(1, -1, 1, 1, 64), std::domain_error);
    CHECK_THROWS_AS(analysis::scan_fraction(1, 1, 0, 1, 64), std::domain_error);
    CHECK_THROWS_AS(analysis::scan_fraction(1, 1, 1, 0, 64), std::domain_error);
    CHECK_THROWS_AS(analysis::scan_fraction(1, 1, 1, 1, 0), std::domain_error);
    CHECK_THROWS_AS(analysis::scan_fraction(1, 1, 1, 1, 121), std::domain_error);
}

TEST_CASE("brute_force_success matches the frozen reference point") {
    CHECK(analysis::brute_force_success(5000.0, 64) == Approx(2.71050543e-16).epsilon(1e-8));
    CHECK(analysis::brute_force_success(0.0, 64) == 0.0);
    CHECK(analysis::brute_force_success(1e30, 32) == 1.0);
    CHECK(analysis::brute_force_success(256.0, 8) == 1.0);
    CHECK_THROWS_AS(analysis::brute_force_success(-1, 64), std::domain_error);
    CHECK_THROWS_AS(analysis::brute_force_success(1, 0), std::domain_error);
}

TEST_CASE("fair_share splits bandwidth by compute") {
    auto even = analysis::fair_share(1.0, 1.0);
    CHECK(even.honest == Approx(0.5));
    CHECK(even.attacker == Approx(0.5));

    auto outnumbered = analysis::fair_share(1.0, 3.0);
    CHECK(outnumbered.honest == Approx(0.25));
    CHECK(outnumbered.attacker == Approx(0.75));

    auto strong = analysis::fair_share(3.0, 1.0);
    CHECK(strong.honest == Approx(0.75));
}

TEST_CASE("compromised routers convert honest share into attacker share") {
    auto half = analysis::fair_share(1.0, 1.0, 0.5);
    CHECK(half.honest == Approx(0.25));
    CHECK(half.attacker == Approx(0.75));
    CHECK(half.honest + half.attacker == Approx(1.0));

    for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto s = analysis::fair_share(1.0, 1.0, f);
        CHECK(s.honest == Approx((1.0 - f) / 2.0));
        CHECK(s.honest + s.attacker == Approx(1.0));
    }
}

TEST_CASE("fair_share validates its domain") {
    CHECK_THROWS_AS(analysis::fair_share(-1, 1), std::domain_error);
    CHECK_THROWS_AS(analysis::fair_share(1, -1), std::domain_error);
    CHECK_THROWS_AS(analysis::fair_share(0, 0), std::domain_error);
    CHECK_THROWS_AS(analysis::fair_share(1, 1, -0.1), std::domain_error);
    CHECK_THROWS_AS(analysis::fair_share(1, 1, 1.1), std::domain_error);
}

TEST_CASE("expected_attempts is half the keyspace plus a half") {
    CHECK(analysis::expected_attempts(0) == 1.0);
    CHECK(analysis::expected_attempts(1) == 1.5);
    CHECK(analysis::expected_attempts(10) == Approx(512.5));
    CHECK_THROWS_AS(analysis::expected_attempts(-1), std::domain_error);
    CHECK_THROWS_AS(analysis::expected_attempts(31), std::domain_error);
}

TEST_CASE("attack_cost matches the frozen reference point") {
    analysis::CostModel m;  // defaults
    auto p = analysis::attack_cost(m, 0.5);
    CHECK(p.without_defense_per_hr == Approx(40.5));
    CHECK(p.with_defense_per_hr == Approx(5020.25));

    CHECK_THROWS_AS(analysis::attack_cost(m, 1.0), std::domain_error);
    CHECK_THROWS_AS(analysis::attack_cost(m, -0.1), std::domain_error);
    analysis::CostModel bad = m;
    bad.price_transfer_per_gb = -1;
    CHECK_THROWS_AS(analysis::attack_cost(bad, 0.5), std::domain_error);
}

TEST_CASE("attack_cost grows with the captured share and defense dominates") {
    analysis::CostModel m;
    std::vector<double> xs = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto grid = analysis::attack_cost_grid(m, xs);
    REQUIRE(grid.size() == xs.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(grid[i].attacker_share == xs[i]);
        CHECK(grid[i].with_defense_per_hr > grid[i].without_defense_per_hr);
        if (i > 0) {
            CHECK(grid[i].without_defense_per_hr > grid[i - 1].without_defense_per_hr);
            CHECK(grid[i].with_defense_per_hr > grid[i - 1].with_defense_per_hr);
        }
    }
}

static const char* kTopoHeader = "#mirage-topo v1\n";

TEST_CASE("ingest_topology builds links and ordered paths") {
    std::istringstream in(std::string(kTopoHeader) +
                          "p1\t1\tL1\t1e7\t5e6\t64500\n"
                          "p1\t2\tL2\t1e8\tNA\t64501\n"
                          "p2\t1\tL1\t1e7\t5e6\t64500\n");
    auto map = analysis::ingest_topology(in);
    REQUIRE(map.links.size() == 2);
    REQUIRE(map.paths.size() == 2);

    const auto& l1 = map.links[map.link_index("L1")];
    CHECK(l1.hop_distance == 1);
    CHECK(l1.as_number == 64500);
    REQUIRE(l1.capacity_bps.has_value());
    CHECK(*l1.capacity_bps == Approx(1e7));
    CHECK(l1.path_fraction == Approx(1.0));

    const auto& l2 = map.links[map.link_index("L2")];
    CHECK(l2.path_fraction == Approx(0.5));

    // Paths run away from the victim: hop 1 first.
    for (const auto& path : map.paths) CHECK(map.links[path[0]].id == "L1");
    CHECK_THROWS_AS(map.link_index("missing"), std::out_of_range);
}

TEST_CASE("capacity is the median of estimates that pass the sanity check") {
    std::istringstream in(std::string(kTopoHeader) +
                          "p1\t1\tL\t10\t5\t1\n"    // valid: 10
                          "p2\t1\tL\t30\tNA\t1\n"   // valid: 30
                          "p3\t1\tL\t2\t5\t1\n"     // capacity below avail: skipped
                          "p4\t1\tL\t20\t20\t1\n"); // valid: 20
    auto map = analysis::ingest_topology(in);
    REQUIRE(map.links.size() == 1);
    REQUIRE(map.links[0].capacity_bps.has_value());
    CHECK(*map.links[0].capacity_bps == Approx(20.0));  // median of {10, 20, 30}
}

TEST_CASE("a link with no surviving estimates has unknown capacity") {
    std::istringstream in(std::string(kTopoHeader) +
                          "p1\t1\tL\tNA\tNA\t1\n"
                          "p2\t1\tL\t2\t5\t1\n");
    auto map = analysis::ingest_topology(in);
    CHECK_FALSE(map.links[0].capacity_bps.has_value());
}

TEST_CASE("ingest_topology reports malformed input with line numbers") {
    auto expect_parse_error = [](const std::string& body, const std::string& needle) {
        std::istringstream in(body);
        try {
            analysis::ingest_topology(in);
            FAIL("expected ParseError");
        } catch (const analysis::ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_parse_error("", "empty");
    expect_parse_error("#wrong header\n", "header");
    expect_parse_error(std::string(kTopoHeader) + "p1\t1\tL1\t1e7\n", "line 2");
    expect_parse_error(std::string(kTopoHeader) + "p1\tX\tL1\t1e7\tNA\t1\n", "line 2");
    expect_parse_error(std::string(kTopoHeader) + "p1\t0\tL1\t1e7\tNA\t1\n", "hop_index");
    expect_parse_error(std::string(kTopoHeader) + "p1\t1\tL1\tbogus\tNA\t1\n", "line 2");
    expect_parse_error(std::string(kTopoHeader) + "p1\t2\tL1\t1e7\tNA\t1\n", "missing hop 1");
    expect_parse_error(std::string(kTopoHeader) +
                           "p1\t1\tL1\t1e7\tNA\t1\np1\t1\tL2\t1e7\tNA\t1\n",
                       "two links at hop 1");
    expect_parse_error(std::string(kTopoHeader) +
                           "p1\t1\tL1\t1e7\tNA\t1\np2\t2\tL1\t1e7\tNA\t1\n",
                       "different hop_index");
    expect_parse_error(std::string(kTopoHeader) + "# only comments\n", "no paths");
}

TEST_CASE("load_topology reads the chain fixture") {
    auto map = analysis::load_topology(std::string(TESTS_DATA_DIR) + "/chain.tsv");
    REQUIRE(map.links.size() == 2);
    REQUIRE(map.paths.size() == 1);
    CHECK_THROWS_AS(analysis::load_topology("/nonexistent/topo.tsv"), std::runtime_error);
}

TEST_CASE("pushback on the chain fixture filters at the access link") {
    auto map = analysis::load_topology(std::string(TESTS_DATA_DIR) + "/chain.tsv");
    // 50 Mbit/s of attack on one path: the 10 Mbit/s access link is congested,
    // the 100 Mbit/s upstream is not, so the filter sits one hop out.
    auto rep = analysis::compute_pushback(map, 5e7);
    REQUIRE(rep.links.size() == 1);
    CHECK(rep.links[0].id == "L1");
    CHECK(rep.links[0].router_hops == 1);
    CHECK(rep.links[0].as_hops == 1);
    CHECK(rep.links[0].weight == Approx(1.0));
    CHECK(rep.mean_router_hops == Approx(1.0));
    CHECK(rep.mean_as_hops == Approx(1.0));
    CHECK(rep.pushed_back_fraction == Approx(1.0));
    REQUIRE(rep.link_loads.size() == 2);
    CHECK(rep.link_loads[0].first == "L1");
    CHECK(rep.link_loads[0].second == Approx(5e7));
}

TEST_CASE("pushback on the branch fixture mixes filtered and clean paths") {
    auto map = analysis::load_topology(std::string(TESTS_DATA_DIR) + "/branch.tsv");
    REQUIRE(map.paths.size() == 5);
    // 50 Mbit/s over five paths is 10 each. Three paths share link B
    // (30 > 20 Mbit/s, congested, two hops out, second AS); two paths ride
    // link C alone and stay clean.
    auto rep = analysis::compute_pushback(map, 5e7);
    REQUIRE(rep.links.size() == 1);
    CHECK(rep.links[0].id == "B");
    CHECK(rep.links[0].router_hops == 2);
    CHECK(rep.links[0].as_hops == 2);
    CHECK(rep.links[0].weight == Approx(0.6));
    CHECK(rep.mean_router_hops == Approx(1.2));  // 0.6*2 + 0.4*0
    CHECK(rep.mean_as_hops == Approx(1.2));
    CHECK(rep.pushed_back_fraction == Approx(0.6));
}

TEST_CASE("pushback picks the congested link farthest from the victim") {
    analysis::TopologyMap map;
    map.links = {
        {"near", 1.0, 1, 100, 1.0},   // congested
        {"far", 1.0, 2, 200, 1.0},    // also congested, farther out
        {"clean", {}, 3, 300, 1.0},   // unknown capacity, never congested
    };
    map.paths = {{0, 1, 2}};
    auto rep = analysis::compute_pushback(map, 10.0);
    REQUIRE(rep.links.size() == 1);
    CHECK(rep.links[0].id == "far");
    CHECK(rep.links[0].router_hops == 2);
    CHECK(rep.links[0].as_hops == 2);  // AS 100 then 200 up to the filter
    CHECK(rep.mean_router_hops == Approx(2.0));
}

TEST_CASE("pushback with no congestion filters nothing") {
    analysis::TopologyMap map;
    map.links = {{"L", 1e9, 1, 1, 1.0}};
    map.paths = {{0}};
    auto rep = analysis::compute_pushback(map, 10.0);
    CHECK(rep.links.empty());
    CHECK(rep.mean_router_hops == 0.0);
    CHECK(rep.pushed_back_fraction == 0.0);
    REQUIRE(rep.link_loads.size() == 1);
    CHECK(rep.link_loads[0].second == Approx(10.0));

    CHECK_THROWS_AS(analysis::compute_pushback(map, -1.0), std::domain_error);
    analysis::TopologyMap empty;
    CHECK_THROWS_AS(analysis::compute_pushback(empty, 1.0), std::domain_error);
}
