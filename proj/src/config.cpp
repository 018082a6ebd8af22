#include "mirage/config.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "mirage/services.hpp"

namespace mirage::config {

namespace {

using nlohmann::json;

const json& expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigInvalid(where + " must be a JSON object");
    return j;
}

void reject_unknown(const json& obj, const std::string& where,
                    const std::vector<const char*>& known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigInvalid("unknown key \"" + it.key() + "\" in " + where);
    }
}

template <typename T>
void get_num(const json& obj, const char* key, T& out, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number()) throw ConfigInvalid(where + "." + key + " must be a number");
    out = it->get<T>();
}

void get_bool(const json& obj, const char* key, bool& out, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean()) throw ConfigInvalid(where + "." + key + " must be a boolean");
    out = it->get<bool>();
}

void parse_bandwidth(const json& root, simnet::BandwidthParams& p) {
    if (auto it = root.find("simnet"); it != root.end()) {
        const json& b = expect_object(*it, "simnet");
        reject_unknown(b, "simnet",
                       {"attack_multiplier", "mirage_on", "benign_flows", "bottleneck_bps",
                        "rtt_s", "packet_bytes", "warmup_s"});
        get_num(b, "attack_multiplier", p.attack_multiplier, "simnet");
        get_bool(b, "mirage_on", p.mirage_on, "simnet");
        get_num(b, "benign_flows", p.benign_flows, "simnet");
        get_num(b, "bottleneck_bps", p.bottleneck_bps, "simnet");
        get_num(b, "rtt_s", p.rtt_s, "simnet");
        get_num(b, "packet_bytes", p.packet_bytes, "simnet");
        get_num(b, "warmup_s", p.warmup_s, "simnet");
    }
    if (auto it = root.find("router"); it != root.end()) {
        const json& b = expect_object(*it, "router");
        reject_unknown(b, "router", {"queue_capacity_packets", "fifo_capacity_packets"});
        get_num(b, "queue_capacity_packets", p.queue_capacity_packets, "router");
        get_num(b, "fifo_capacity_packets", p.fifo_capacity_packets, "router");
    }
}

void parse_address(const json& root, simnet::AddressParams& p) {
    if (auto it = root.find("simnet"); it != root.end()) {
        const json& b = expect_object(*it, "simnet");
        reject_unknown(b, "simnet",
                       {"attacker_machines", "attacker_processes", "mirage_on", "machine_cpu_hz",
                        "base_cycles", "attempt_cycles", "saturation_processes"});
        get_num(b, "attacker_machines", p.attacker_machines, "simnet");
        get_num(b, "attacker_processes", p.attacker_processes, "simnet");
        get_bool(b, "mirage_on", p.mirage_on, "simnet");
        get_num(b, "machine_cpu_hz", p.machine_cpu_hz, "simnet");
        get_num(b, "base_cycles", p.base_cycles, "simnet");
        get_num(b, "attempt_cycles", p.attempt_cycles, "simnet");
        get_num(b, "saturation_processes", p.saturation_processes, "simnet");
    }
    if (auto it = root.find("puzzle"); it != root.end()) {
        const json& b = expect_object(*it, "puzzle");
        reject_unknown(b, "puzzle",
                       {"initial_difficulty", "release_rate", "bucket_capacity"});
        get_num(b, "initial_difficulty", p.initial_difficulty, "puzzle");
        get_num(b, "release_rate", p.release_rate, "puzzle");
        get_num(b, "bucket_capacity", p.bucket_capacity, "puzzle");
    }
}

void parse_compromised(const json& root, simnet::CompromisedParams& p) {
    if (auto it = root.find("simnet"); it != root.end()) {
        const json& b = expect_object(*it, "simnet");
        reject_unknown(b, "simnet",
                       {"honest_compute", "attacker_compute", "compromised_fraction",
                        "clients_per_side", "warmup_s", "bottleneck_bps", "rtt_s", "packet_bytes",
                        "spray_multiplier", "solutions_per_second"});
        get_num(b, "honest_compute", p.honest_compute, "simnet");
        get_num(b, "attacker_compute", p.attacker_compute, "simnet");
        get_num(b, "compromised_fraction", p.compromised_fraction, "simnet");
        get_num(b, "clients_per_side", p.clients_per_side, "simnet");
        get_num(b, "warmup_s", p.warmup_s, "simnet");
        get_num(b, "bottleneck_bps", p.bottleneck_bps, "simnet");
        get_num(b, "rtt_s", p.rtt_s, "simnet");
        get_num(b, "packet_bytes", p.packet_bytes, "simnet");
        get_num(b, "spray_multiplier", p.spray_multiplier, "simnet");
        get_num(b, "solutions_per_second", p.solutions_per_second, "simnet");
    }
    if (auto it = root.find("router"); it != root.end()) {
        const json& b = expect_object(*it, "router");
        reject_unknown(b, "router", {"queue_capacity_packets"});
        get_num(b, "queue_capacity_packets", p.queue_capacity_packets, "router");
    }
    if (auto it = root.find("puzzle"); it != root.end()) {
        const json& b = expect_object(*it, "puzzle");
        reject_unknown(b, "puzzle", {"difficulty"});
        get_num(b, "difficulty", p.difficulty, "puzzle");
    }
}

void parse_session(const json& root, SessionParams& p) {
    if (auto it = root.find("hop"); it != root.end()) {
        const json& b = expect_object(*it, "hop");
        reject_unknown(b, "hop",
                       {"interval_seconds", "grace_seconds", "prefix_bits",
                        "addresses_per_interval"});
        get_num(b, "interval_seconds", p.interval_seconds, "hop");
        get_num(b, "grace_seconds", p.grace_seconds, "hop");
        get_num(b, "prefix_bits", p.prefix_bits, "hop");
        get_num(b, "addresses_per_interval", p.addresses_per_interval, "hop");
    }
    if (auto it = root.find("puzzle"); it != root.end()) {
        const json& b = expect_object(*it, "puzzle");
        reject_unknown(b, "puzzle", {"difficulty", "batch_size"});
        get_num(b, "difficulty", p.difficulty, "puzzle");
        get_num(b, "batch_size", p.batch_size, "puzzle");
    }
    if (auto it = root.find("services"); it != root.end()) {
        const json& b = expect_object(*it, "services");
        reject_unknown(b, "services",
                       {"fail_threshold", "success_threshold", "ttl_seconds",
                        "probe_period_seconds", "compute", "solve_pace_seconds",
                        "presolve_lead_seconds", "traffic_tick_seconds"});
        get_num(b, "fail_threshold", p.fail_threshold, "services");
        get_num(b, "success_threshold", p.success_threshold, "services");
        get_num(b, "ttl_seconds", p.ttl_seconds, "services");
        get_num(b, "probe_period_seconds", p.probe_period_seconds, "services");
        get_num(b, "compute", p.compute, "services");
        get_num(b, "solve_pace_seconds", p.solve_pace_seconds, "services");
        get_num(b, "presolve_lead_seconds", p.presolve_lead_seconds, "services");
        get_num(b, "traffic_tick_seconds", p.traffic_tick_seconds, "services");
    }
}

std::vector<const char*> blocks_for(const std::string& scenario) {
    if (scenario == "bandwidth_exhaustion")
        return {"scenario", "seed", "duration_s", "simnet", "router"};
    if (scenario == "address_exhaustion")
        return {"scenario", "seed", "duration_s", "simnet", "puzzle"};
    if (scenario == "compromised_routers")
        return {"scenario", "seed", "duration_s", "simnet", "router", "puzzle"};
    return {"scenario", "seed", "duration_s", "hop", "puzzle", "services"};
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann's message already carries line and column.
        throw ConfigInvalid(e.what());
    }
    expect_object(root, "config");
    auto sc = root.find("scenario");
    if (sc == root.end() || !sc->is_string())
        throw ConfigInvalid("config requires a string \"scenario\" key");

    ScenarioConfig cfg;
    cfg.scenario = sc->get<std::string>();
    if (cfg.scenario != "bandwidth_exhaustion" && cfg.scenario != "address_exhaustion" &&
        cfg.scenario != "compromised_routers" && cfg.scenario != "client_session")
        throw ConfigInvalid("unknown scenario \"" + cfg.scenario + "\"");

    reject_unknown(root, "config", blocks_for(cfg.scenario));
    if (auto it = root.find("seed"); it != root.end()) {
        if (!it->is_number_unsigned()) throw ConfigInvalid("seed must be a non-negative integer");
        cfg.seed = it->get<uint64_t>();
    }
    if (auto it = root.find("duration_s"); it != root.end()) {
        if (!it->is_number() || it->get<double>() <= 0)
            throw ConfigInvalid("duration_s must be a positive number");
        cfg.duration_s = it->get<double>();
    }

    if (cfg.scenario == "bandwidth_exhaustion") {
        parse_bandwidth(root, cfg.bandwidth);
        if (cfg.duration_s) cfg.bandwidth.duration_s = *cfg.duration_s;
    } else if (cfg.scenario == "address_exhaustion") {
        parse_address(root, cfg.address);
        if (cfg.duration_s) cfg.address.duration_s = *cfg.duration_s;
    } else if (cfg.scenario == "compromised_routers") {
        parse_compromised(root, cfg.compromised);
        if (cfg.duration_s) cfg.compromised.duration_s = *cfg.duration_s;
    } else {
        parse_session(root, cfg.session);
        if (cfg.duration_s) cfg.session.duration_s = *cfg.duration_s;
    }
    return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_config(ss.str());
}

nlohmann::json effective_config(const ScenarioConfig& cfg) {
    json j;
    j["scenario"] = cfg.scenario;
    j["seed"] = cfg.seed;
    if (cfg.scenario == "bandwidth_exhaustion") {
        const auto& p = cfg.bandwidth;
        j["duration_s"] = p.duration_s;
        j["simnet"] = {{"attack_multiplier", p.attack_multiplier},
                       {"mirage_on", p.mirage_on},
                       {"benign_flows", p.benign_flows},
                       {"bottleneck_bps", p.bottleneck_bps},
                       {"rtt_s", p.rtt_s},
                       {"packet_bytes", p.packet_bytes},
                       {"warmup_s", p.warmup_s}};
        j["router"] = {{"queue_capacity_packets", p.queue_capacity_packets},
                       {"fifo_capacity_packets", p.fifo_capacity_packets}};
    } else if (cfg.scenario == "address_exhaustion") {
        const auto& p = cfg.address;
        j["duration_s"] = p.duration_s;
        j["simnet"] = {{"attacker_machines", p.attacker_machines},
                       {"attacker_processes", p.attacker_processes},
                       {"mirage_on", p.mirage_on},
                       {"machine_cpu_hz", p.machine_cpu_hz},
                       {"base_cycles", p.base_cycles},
                       {"attempt_cycles", p.attempt_cycles},
                       {"saturation_processes", p.saturation_processes}};
        j["puzzle"] = {{"initial_difficulty", p.initial_difficulty},
                       {"release_rate", p.release_rate},
                       {"bucket_capacity", p.bucket_capacity}};
    } else if (cfg.scenario == "compromised_routers") {
        const auto& p = cfg.compromised;
        j["duration_s"] = p.duration_s;
        j["simnet"] = {{"honest_compute", p.honest_compute},
                       {"attacker_compute", p.attacker_compute},
                       {"compromised_fraction", p.compromised_fraction},
                       {"clients_per_side", p.clients_per_side},
                       {"warmup_s", p.warmup_s},
                       {"bottleneck_bps", p.bottleneck_bps},
                       {"rtt_s", p.rtt_s},
                       {"packet_bytes", p.packet_bytes},
                       {"spray_multiplier", p.spray_multiplier},
                       {"solutions_per_second", p.solutions_per_second}};
        j["router"] = {{"queue_capacity_packets", p.queue_capacity_packets}};
        j["puzzle"] = {{"difficulty", p.difficulty}};
    } else {
        const auto& p = cfg.session;
        j["duration_s"] = p.duration_s;
        j["hop"] = {{"interval_seconds", p.interval_seconds},
                    {"grace_seconds", p.grace_seconds},
                    {"prefix_bits", p.prefix_bits},
                    {"addresses_per_interval", p.addresses_per_interval}};
        j["puzzle"] = {{"difficulty", p.difficulty}, {"batch_size", p.batch_size}};
        j["services"] = {{"fail_threshold", p.fail_threshold},
                         {"success_threshold", p.success_threshold},
                         {"ttl_seconds", p.ttl_seconds},
                         {"probe_period_seconds", p.probe_period_seconds},
                         {"compute", p.compute},
                         {"solve_pace_seconds", p.solve_pace_seconds},
                         {"presolve_lead_seconds", p.presolve_lead_seconds},
                         {"traffic_tick_seconds", p.traffic_tick_seconds}};
    }
    return j;
}

report::RunReport run_client_session_scenario(const SessionParams& prm, uint64_t seed) {
    hop::HopConfig hop;
    std::mt19937_64 kgen(seed ^ 0x9d2c5680ULL);
    for (int w = 0; w < 2; ++w) {
        uint64_t word = kgen();
        for (int b = 0; b < 8; ++b) hop.master_key[w * 8 + b] = uint8_t(word >> (56 - 8 * b));
    }
    hop.prefix_bits = prm.prefix_bits;
    hop.addresses_per_interval = prm.addresses_per_interval;
    hop.interval_seconds = prm.interval_seconds;
    hop.grace_seconds = prm.grace_seconds;
    hop.validate();

    double epoch = std::chrono::duration<double>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();

    services::PuzzleServiceConfig psc;
    psc.hop = hop;
    psc.batch_seed = seed;
    psc.difficulty = prm.difficulty;
    psc.server.batch_size = prm.batch_size;
    psc.server.presolve_lead_seconds = std::max(prm.presolve_lead_seconds, 0.5);
    psc.epoch_start_unix = epoch;
    services::PuzzleService puzzle_srv(psc);

    services::DnsServiceConfig dsc;
    dsc.dns.fail_threshold = prm.fail_threshold;
    dsc.dns.success_threshold = prm.success_threshold;
    dsc.dns.ttl_seconds = prm.ttl_seconds;
    dsc.dns.probe_period_seconds = prm.probe_period_seconds;
    dsc.dns.victim_record = "victim.local";
    dsc.dns.puzzle_record = "puzzles.local";
    dsc.victim_probe_port = 9;  // nothing listens; probes fail, triggering failover
    services::DnsService dns_srv(dsc);

    puzzle_srv.start();
    dns_srv.start();

    services::ClientDriverConfig ccfg;
    ccfg.dns_port = dns_srv.port();
    ccfg.puzzle_port = puzzle_srv.port();
    ccfg.hop = hop;
    ccfg.hop.master_key = Block16{};  // the driver never needs the key
    ccfg.epoch_start_unix = epoch;
    ccfg.compute = prm.compute;
    ccfg.solve_pace_seconds = prm.solve_pace_seconds;
    ccfg.presolve_lead_seconds = prm.presolve_lead_seconds;
    ccfg.traffic_tick_seconds = prm.traffic_tick_seconds;
    ccfg.rng_seed = seed;
    auto stats = services::client_session(ccfg, prm.duration_s);

    dns_srv.stop();
    puzzle_srv.stop();

    report::RunReport rep;
    rep.scenario = "client_session";
    rep.seed = seed;
    for (const auto& h : stats.acquisitions)
        rep.add(h.acquired_unix - epoch, "client", "acquired_interval",
                static_cast<double>(h.interval));

    uint64_t first = stats.acquisitions.empty() ? 0 : stats.acquisitions.front().interval;
    uint64_t last = first;
    std::map<uint64_t, uint64_t> per_interval;
    for (const auto& h : stats.acquisitions) {
        per_interval[h.interval] += 1;
        last = std::max(last, h.interval);
    }
    uint64_t covered = 0;
    for (uint64_t t = first; !stats.acquisitions.empty() && t <= last; ++t)
        if (per_interval.count(t)) covered += 1;

    rep.set_summary("acquisitions_total", static_cast<double>(stats.acquisitions.size()));
    rep.set_summary("intervals_spanned",
                    stats.acquisitions.empty() ? 0 : static_cast<double>(last - first + 1));
    rep.set_summary("intervals_covered", static_cast<double>(covered));
    rep.set_summary("max_validity_gap_s", stats.max_validity_gap_seconds);
    rep.set_summary("traffic_packets", static_cast<double>(stats.traffic_packets));
    rep.set_summary("distinct_suffixes_used", static_cast<double>(stats.traffic_by_suffix.size()));
    rep.set_summary("resolves", static_cast<double>(stats.resolves));
    rep.set_summary("puzzles_fetched", static_cast<double>(stats.puzzles_fetched));
    rep.set_summary("backoffs", static_cast<double>(stats.backoffs));
    return rep;
}

report::RunReport run_scenario(const ScenarioConfig& cfg, std::optional<uint64_t> seed_override) {
    uint64_t seed = seed_override.value_or(cfg.seed);
    report::RunReport rep;
    if (cfg.scenario == "bandwidth_exhaustion")
        rep = simnet::run_bandwidth_exhaustion(cfg.bandwidth, seed);
    else if (cfg.scenario == "address_exhaustion")
        rep = simnet::run_address_exhaustion(cfg.address, seed);
    else if (cfg.scenario == "compromised_routers")
        rep = simnet::run_compromised_routers(cfg.compromised, seed);
    else
        rep = run_client_session_scenario(cfg.session, seed);
    ScenarioConfig echo = cfg;
    echo.seed = seed;
    rep.effective_config = effective_config(echo);
    return rep;
}

}  // namespace mirage::config
