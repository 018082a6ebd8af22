#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "mirage/config.hpp"
#include "mirage/report.hpp"

using namespace mirage;
using Catch::Approx;

TEST_CASE("report csv is byte stable with a fixed header") {
    report::RunReport rep;
    rep.add(0.5, "flow1", "goodput_bps", 123456.789);
    rep.add(1.0, "flow2", "drops", 3);

    std::string expected =
        "time_s,entity_id,metric,value\n"
        "0.500000,flow1,goodput_bps,123456.789\n"
        "1.000000,flow2,drops,3\n";
    CHECK(rep.csv() == expected);
    CHECK(rep.csv() == rep.csv());
}

TEST_CASE("format_value keeps nine significant digits") {
    CHECK(report::format_value(3) == "3");
    CHECK(report::format_value(0.5) == "0.5");
    CHECK(report::format_value(123456789.25) == "123456789");
    CHECK(report::format_value(3.6379788e-8) == "3.6379788e-08");
}

TEST_CASE("summary entries keep insertion order and update in place") {
    report::RunReport rep;
    rep.set_summary("b", 2);
    rep.set_summary("a", 1);
    rep.set_summary("b", 3);
    REQUIRE(rep.summary.size() == 2);
    CHECK(rep.summary[0].first == "b");
    CHECK(rep.summary[0].second == 3);
    CHECK(rep.summary_value("a") == 1);
    CHECK_THROWS_AS(rep.summary_value("missing"), std::out_of_range);
}

TEST_CASE("summary json carries version, seed, config, and metrics") {
    report::RunReport rep;
    rep.scenario = "bandwidth_exhaustion";
    rep.seed = 42;
    rep.effective_config = {{"x", 1}};
    rep.set_summary("utilization", 0.97);

    auto j = rep.summary_json();
    CHECK(j.at("tool_version").get<std::string>() == report::kToolVersion);
    CHECK(j.at("scenario") == "bandwidth_exhaustion");
    CHECK(j.at("seed") == 42);
    CHECK(j.at("effective_config").at("x") == 1);
    CHECK(j.at("summary").at("utilization").get<double>() == Approx(0.97));
}

TEST_CASE("report files land on disk and bad paths throw") {
    report::RunReport rep;
    rep.add(0, "e", "m", 1);
    std::string base = "/tmp/mirage_test_report_" + std::to_string(::getpid());
    rep.write_csv(base + ".csv");
    rep.write_summary(base + ".json");

    std::ifstream csv(base + ".csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "time_s,entity_id,metric,value");
    std::remove((base + ".csv").c_str());
    std::remove((base + ".json").c_str());

    CHECK_THROWS_AS(rep.write_csv("/nonexistent/dir/report.csv"), std::runtime_error);
    CHECK_THROWS_AS(rep.write_summary("/nonexistent/dir/report.json"), std::runtime_error);
}

TEST_CASE("minimal configs parse with defaults") {
    auto cfg = config::parse_scenario_config(R"({"scenario": "bandwidth_exhaustion"})");
    CHECK(cfg.scenario == "bandwidth_exhaustion");
    CHECK(cfg.seed == 1);
    CHECK_FALSE(cfg.duration_s.has_value());
    CHECK(cfg.bandwidth.attack_multiplier == 1.0);
    CHECK(cfg.bandwidth.mirage_on);
}

TEST_CASE("scenario blocks override their fields") {
    auto cfg = config::parse_scenario_config(R"({
        "scenario": "bandwidth_exhaustion",
        "seed": 7,
        "duration_s": 30,
        "simnet": {"attack_multiplier": 1.3, "mirage_on": false, "benign_flows": 4},
        "router": {"fifo_capacity_packets": 50}
    })");
    CHECK(cfg.seed == 7);
    CHECK(cfg.bandwidth.duration_s == 30.0);
    CHECK(cfg.bandwidth.attack_multiplier == Approx(1.3));
    CHECK_FALSE(cfg.bandwidth.mirage_on);
    CHECK(cfg.bandwidth.benign_flows == 4);
    CHECK(cfg.bandwidth.fifo_capacity_packets == 50);

    auto addr = config::parse_scenario_config(R"({
        "scenario": "address_exhaustion",
        "simnet": {"attacker_processes": 100},
        "puzzle": {"initial_difficulty": 8}
    })");
    CHECK(addr.address.attacker_processes == 100);
    CHECK(addr.address.initial_difficulty == 8);

    auto sess = config::parse_scenario_config(R"({
        "scenario": "client_session",
        "hop": {"interval_seconds": 2.0, "grace_seconds": 0.6},
        "services": {"fail_threshold": 3}
    })");
    CHECK(sess.session.interval_seconds == 2.0);
    CHECK(sess.session.fail_threshold == 3);
}

TEST_CASE("config parse errors name the offending key or location") {
    auto expect_invalid = [](const std::string& text, const std::string& needle) {
        try {
            config::parse_scenario_config(text);
            FAIL("expected ConfigInvalid for: " << text);
        } catch (const config::ConfigInvalid& e) {
            INFO(e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_invalid("{", "line");  // parse error with position info
    expect_invalid("[1, 2]", "object");
    expect_invalid("{}", "scenario");
    expect_invalid(R"({"scenario": "nope"})", "unknown scenario");
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "typo_key": 1})", "typo_key");
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "simnet": {"typo": 1}})", "typo");
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "simnet": {"rtt_s": "fast"}})",
                   "rtt_s");
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "simnet": {"mirage_on": 1}})",
                   "mirage_on");
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "seed": -1})", "seed");
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "duration_s": 0})", "duration_s");
    // Blocks from another scenario are unknown keys here.
    expect_invalid(R"({"scenario": "bandwidth_exhaustion", "puzzle": {}})", "puzzle");
}

TEST_CASE("load_scenario_config distinguishes io from syntax errors") {
    CHECK_THROWS_AS(config::load_scenario_config("/nonexistent/config.json"), config::IoError);

    std::string path = "/tmp/mirage_test_cfg_" + std::to_string(::getpid()) + ".json";
    {
        std::ofstream f(path);
        f << R"({"scenario": "address_exhaustion"})";
    }
    auto cfg = config::load_scenario_config(path);
    CHECK(cfg.scenario == "address_exhaustion");
    std::remove(path.c_str());
}

TEST_CASE("effective_config makes every knob explicit") {
    auto cfg = config::parse_scenario_config(R"({"scenario": "bandwidth_exhaustion"})");
    auto j = config::effective_config(cfg);
    CHECK(j.at("scenario") == "bandwidth_exhaustion");
    CHECK(j.at("seed") == 1);
    CHECK(j.at("duration_s").get<double>() == 120.0);
    for (const char* k :
         {"attack_multiplier", "mirage_on", "benign_flows", "bottleneck_bps", "rtt_s",
          "packet_bytes", "warmup_s"})
        CHECK(j.at("simnet").contains(k));
    CHECK(j.at("router").contains("queue_capacity_packets"));

    auto addr = config::parse_scenario_config(R"({"scenario": "address_exhaustion"})");
    auto ja = config::effective_config(addr);
    for (const char* k : {"initial_difficulty", "release_rate", "bucket_capacity"})
        CHECK(ja.at("puzzle").contains(k));

    auto sess = config::parse_scenario_config(R"({"scenario": "client_session"})");
    auto js = config::effective_config(sess);
    CHECK(js.at("hop").contains("interval_seconds"));
    CHECK(js.at("services").contains("fail_threshold"));
}

TEST_CASE("run_scenario echoes the effective config and obeys seed overrides") {
    // A short bandwidth run keeps this cheap; determinism is covered elsewhere.
    auto cfg = config::parse_scenario_config(
        R"({"scenario": "bandwidth_exhaustion", "seed": 3, "duration_s": 12,
            "simnet": {"warmup_s": 4, "benign_flows": 2}})");
    auto rep = config::run_scenario(cfg, std::nullopt);
    CHECK(rep.scenario == "bandwidth_exhaustion");
    CHECK(rep.seed == 3);
    CHECK(rep.effective_config.at("simnet").at("benign_flows") == 2);
    CHECK(rep.summary_value("benign_aggregate_bps") > 0);

    auto rep9 = config::run_scenario(cfg, 9);
    CHECK(rep9.seed == 9);
    CHECK(rep9.effective_config.at("seed") == 9);
}
