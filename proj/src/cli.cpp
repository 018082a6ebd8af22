#include "mirage/cli.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mirage/analysis.hpp"
#include "mirage/config.hpp"
#include "mirage/log.hpp"
#include "mirage/report.hpp"
#include "mirage/services.hpp"

namespace mirage::cli {

namespace {

volatile std::sig_atomic_t g_stop_requested = 0;

void handle_stop(int) { g_stop_requested = 1; }

void install_stop_handlers() {
    std::signal(SIGINT, handle_stop);
    std::signal(SIGTERM, handle_stop);
}

std::string strip_extension(const std::string& path) {
    size_t slash = path.find_last_of('/');
    size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

void write_state_log(const std::string& path, const nlohmann::json& j) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw config::IoError("cannot write state log: " + path);
    std::string text = j.dump(2);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fputc('\n', f);
    std::fclose(f);
}

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed,
            const std::string& out_base) {
    config::ScenarioConfig cfg = config::load_scenario_config(config_path);
    report::RunReport rep = config::run_scenario(cfg, seed);
    std::string base = out_base.empty() ? strip_extension(config_path) : out_base;
    rep.write_csv(base + ".csv");
    rep.write_summary(base + ".summary.json");
    std::printf("scenario: %s  seed: %llu\n", rep.scenario.c_str(),
                static_cast<unsigned long long>(rep.seed));
    for (const auto& [k, v] : rep.summary)
        std::printf("  %-28s %s\n", k.c_str(), report::format_value(v).c_str());
    std::printf("wrote %s.csv and %s.summary.json\n", base.c_str(), base.c_str());
    return 0;
}

int cmd_serve_dns(services::DnsServiceConfig cfg, const std::string& state_log_path) {
    // Handlers go in before the readiness line: a supervisor may signal the
    // moment it sees the port.
    install_stop_handlers();
    services::DnsService srv(cfg);
    srv.start();
    std::printf("dns service listening on 127.0.0.1:%u\n", srv.port());
    std::fflush(stdout);
    while (!g_stop_requested)
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    srv.stop();
    if (!state_log_path.empty()) write_state_log(state_log_path, srv.state_log());
    return 0;
}

int cmd_serve_puzzle(services::PuzzleServiceConfig cfg, const std::string& state_log_path) {
    install_stop_handlers();
    services::PuzzleService srv(cfg);
    srv.start();
    std::printf("puzzle service listening on 127.0.0.1:%u\n", srv.port());
    std::fflush(stdout);
    while (!g_stop_requested)
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    srv.stop();
    if (!state_log_path.empty()) write_state_log(state_log_path, srv.state_log());
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"mirage: moving-target defense toolkit (address hopping, puzzles, fair queueing)"};
    app.require_subcommand(1);

    // ---- run ----
    auto* c_run = app.add_subcommand("run", "Run a scenario described by a JSON config");
    std::string run_config, run_out;
    std::optional<uint64_t> run_seed;
    c_run->add_option("config", run_config, "Path to the scenario config (JSON)")->required();
    c_run->add_option("--seed", run_seed, "Override the config's seed");
    c_run->add_option("--out", run_out, "Output base path (writes <base>.csv, <base>.summary.json)");

    // ---- analyze ----
    auto* c_an = app.add_subcommand("analyze", "Closed-form calculators");
    c_an->require_subcommand(1);

    auto* a_scan = c_an->add_subcommand("scan", "Fraction of active addresses found by scanning");
    double sc_bots = 1e5, sc_rate = 33554432, sc_size = 300, sc_interval = 300;
    int sc_bits = 64;
    a_scan->add_option("--bots", sc_bots, "Scanning bot count")->capture_default_str();
    a_scan->add_option("--probe-rate-bps", sc_rate, "Per-bot probe rate")->capture_default_str();
    a_scan->add_option("--probe-size-bits", sc_size, "Bits per probe")->capture_default_str();
    a_scan->add_option("--interval-s", sc_interval, "Hop interval")->capture_default_str();
    a_scan->add_option("--suffix-bits", sc_bits, "Host suffix width")->capture_default_str();

    auto* a_bf = c_an->add_subcommand("bruteforce", "Chance one random probe hits an active address");
    double bf_entries = 5000;
    int bf_bits = 64;
    a_bf->add_option("--active-entries", bf_entries, "Active set size")->capture_default_str();
    a_bf->add_option("--suffix-bits", bf_bits, "Host suffix width")->capture_default_str();

    auto* a_fs = c_an->add_subcommand("fairshare", "Bandwidth split under per-computation fairness");
    double fs_h = 1, fs_a = 1, fs_f = 0;
    a_fs->add_option("--honest-compute", fs_h, "Honest compute power")->capture_default_str();
    a_fs->add_option("--attacker-compute", fs_a, "Attacker compute power")->capture_default_str();
    a_fs->add_option("--compromised-fraction", fs_f, "Fraction of honest paths observed")
        ->capture_default_str();

    auto* a_cost = c_an->add_subcommand("cost", "Attacker cost per hour with and without the defense");
    std::vector<double> cost_shares;
    analysis::CostModel cm;
    a_cost->add_option("--share", cost_shares, "Attacker share x in [0,1); repeatable");
    a_cost->add_option("--price-compute", cm.price_compute_per_unit_hr, "USD per compute unit hour")
        ->capture_default_str();
    a_cost->add_option("--price-transfer", cm.price_transfer_per_gb, "USD per GB transferred")
        ->capture_default_str();
    a_cost->add_option("--legit-load-bps", cm.legit_load_bps, "Served client traffic, no defense")
        ->capture_default_str();
    a_cost->add_option("--victim-capacity-bps", cm.victim_capacity_bps, "Victim link capacity")
        ->capture_default_str();
    a_cost->add_option("--honest-compute-units", cm.honest_compute_units,
                       "Aggregate honest compute the attacker must match")
        ->capture_default_str();

    auto* a_pb = c_an->add_subcommand("pushback", "Filter placement from a topology estimate file");
    std::string pb_topo;
    double pb_gbps = 1.0;
    a_pb->add_option("--topology", pb_topo, "Topology estimates (TSV)")->required();
    a_pb->add_option("--attack-gbps", pb_gbps, "Total attack traffic")->capture_default_str();

    // ---- serve ----
    auto* c_srv = app.add_subcommand("serve", "Run a loopback service until SIGTERM");
    c_srv->require_subcommand(1);

    auto* s_dns = c_srv->add_subcommand("dns", "Failover resolver probing the victim's endpoint");
    services::DnsServiceConfig dns_cfg;
    dns_cfg.dns.victim_record = "victim.local";
    dns_cfg.dns.puzzle_record = "puzzles.local";
    std::string dns_state_log;
    uint16_t dns_port = 0;
    s_dns->add_option("--port", dns_port, "Listen port (0 picks one)")->capture_default_str();
    s_dns->add_option("--victim-host", dns_cfg.victim_probe_host, "Probe target host")
        ->capture_default_str();
    s_dns->add_option("--victim-port", dns_cfg.victim_probe_port, "Probe target port")->required();
    s_dns->add_option("--victim-record", dns_cfg.dns.victim_record, "Answer while healthy")
        ->capture_default_str();
    s_dns->add_option("--puzzle-record", dns_cfg.dns.puzzle_record, "Answer while under attack")
        ->capture_default_str();
    s_dns->add_option("--fail-threshold", dns_cfg.dns.fail_threshold,
                      "Consecutive failed probes before failover")
        ->capture_default_str();
    s_dns->add_option("--success-threshold", dns_cfg.dns.success_threshold,
                      "Consecutive good probes before failback")
        ->capture_default_str();
    s_dns->add_option("--ttl-s", dns_cfg.dns.ttl_seconds, "Answer TTL")->capture_default_str();
    s_dns->add_option("--probe-period-s", dns_cfg.dns.probe_period_seconds, "Probe cadence")
        ->capture_default_str();
    s_dns->add_option("--state-log", dns_state_log, "Write a JSON state snapshot on shutdown");

    auto* s_puz = c_srv->add_subcommand("puzzle", "Puzzle distribution point");
    services::PuzzleServiceConfig puz_cfg;
    std::string puz_key_hex, puz_mode = "selfservice", puz_state_log;
    uint16_t puz_port = 0;
    double epoch_unix = -1;
    s_puz->add_option("--port", puz_port, "Listen port (0 picks one)")->capture_default_str();
    s_puz->add_option("--mode", puz_mode, "selfservice or auction")->capture_default_str();
    s_puz->add_option("--key", puz_key_hex, "Master key, 32 hex digits (default zero key)");
    s_puz->add_option("--prefix-bits", puz_cfg.hop.prefix_bits, "Network prefix width")
        ->capture_default_str();
    s_puz->add_option("--addresses-per-interval", puz_cfg.hop.addresses_per_interval,
                      "Active set size per interval")
        ->capture_default_str();
    s_puz->add_option("--interval-s", puz_cfg.hop.interval_seconds, "Hop interval")
        ->capture_default_str();
    s_puz->add_option("--grace-s", puz_cfg.hop.grace_seconds, "Grace window after rollover")
        ->capture_default_str();
    s_puz->add_option("--difficulty", puz_cfg.difficulty, "Puzzle difficulty bits")
        ->capture_default_str();
    s_puz->add_option("--batch-size", puz_cfg.server.batch_size, "Puzzles prepared per interval")
        ->capture_default_str();
    s_puz->add_option("--epoch-unix", epoch_unix, "Wall-clock origin of interval 0 (default now)");
    s_puz->add_option("--release-rate", puz_cfg.server.allocator.release_rate,
                      "Auction slot tokens per second")
        ->capture_default_str();
    s_puz->add_option("--bucket-capacity", puz_cfg.server.allocator.bucket_capacity,
                      "Auction token bucket depth")
        ->capture_default_str();
    s_puz->add_option("--state-log", puz_state_log, "Write a JSON state snapshot on shutdown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_run->parsed()) return cmd_run(run_config, run_seed, run_out);

        if (a_scan->parsed()) {
            double f = analysis::scan_fraction(sc_bots, sc_rate, sc_size, sc_interval, sc_bits);
            std::printf("scan_fraction %s\n", report::format_value(f).c_str());
            return 0;
        }
        if (a_bf->parsed()) {
            double p = analysis::brute_force_success(bf_entries, bf_bits);
            std::printf("hit_probability %s\n", report::format_value(p).c_str());
            return 0;
        }
        if (a_fs->parsed()) {
            auto s = analysis::fair_share(fs_h, fs_a, fs_f);
            std::printf("honest_share %s\nattacker_share %s\n",
                        report::format_value(s.honest).c_str(),
                        report::format_value(s.attacker).c_str());
            return 0;
        }
        if (a_cost->parsed()) {
            if (cost_shares.empty())
                for (int i = 1; i <= 9; ++i) cost_shares.push_back(i / 10.0);
            auto grid = analysis::attack_cost_grid(cm, cost_shares);
            std::printf("attacker_share,cost_without_usd_hr,cost_with_usd_hr\n");
            for (const auto& p : grid)
                std::printf("%s,%s,%s\n", report::format_value(p.attacker_share).c_str(),
                            report::format_value(p.without_defense_per_hr).c_str(),
                            report::format_value(p.with_defense_per_hr).c_str());
            return 0;
        }
        if (a_pb->parsed()) {
            analysis::TopologyMap topo = analysis::load_topology(pb_topo);
            auto rep = analysis::compute_pushback(topo, pb_gbps * 1e9);
            std::printf("link_id,router_hops,as_hops,attack_fraction\n");
            for (const auto& l : rep.links)
                std::printf("%s,%d,%d,%s\n", l.id.c_str(), l.router_hops, l.as_hops,
                            report::format_value(l.weight).c_str());
            std::printf("mean_router_hops %s\n", report::format_value(rep.mean_router_hops).c_str());
            std::printf("mean_as_hops %s\n", report::format_value(rep.mean_as_hops).c_str());
            std::printf("pushed_back_fraction %s\n",
                        report::format_value(rep.pushed_back_fraction).c_str());
            return 0;
        }
        if (s_dns->parsed()) {
            dns_cfg.port = dns_port;
            return cmd_serve_dns(dns_cfg, dns_state_log);
        }
        if (s_puz->parsed()) {
            puz_cfg.port = puz_port;
            if (puz_mode == "selfservice")
                puz_cfg.server.mode = services::ServeMode::SelfService;
            else if (puz_mode == "auction")
                puz_cfg.server.mode = services::ServeMode::Auction;
            else
                throw config::ConfigInvalid("--mode must be selfservice or auction");
            if (!puz_key_hex.empty() && !parse_hex_block(puz_key_hex, puz_cfg.hop.master_key))
                throw config::ConfigInvalid("--key must be exactly 32 hex digits");
            if (epoch_unix >= 0)
                puz_cfg.epoch_start_unix = epoch_unix;
            else
                puz_cfg.epoch_start_unix = std::chrono::duration<double>(
                                               std::chrono::system_clock::now().time_since_epoch())
                                               .count();
            puz_cfg.hop.validate();
            return cmd_serve_puzzle(puz_cfg, puz_state_log);
        }
    } catch (const config::ConfigInvalid& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const analysis::ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "argument error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "argument error: %s\n", e.what());
        return 2;
    } catch (const services::BindError& e) {
        std::fprintf(stderr, "bind error: %s\n", e.what());
        return 3;
    } catch (const config::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}

}  // namespace mirage::cli
