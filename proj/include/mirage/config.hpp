#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mirage/report.hpp"
#include "mirage/scenarios.hpp"

namespace mirage::config {

struct ConfigInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameters for the live loopback stack (DNS + puzzle service + one client
// driver) run as a scenario with compressed intervals.
struct SessionParams {
    double interval_seconds = 2.0;
    double grace_seconds = 0.6;
    int prefix_bits = 64;
    uint64_t addresses_per_interval = 64;
    int difficulty = 4;
    uint64_t batch_size = 4096;
    int fail_threshold = 3;
    int success_threshold = 5;
    double ttl_seconds = 0.5;
    double probe_period_seconds = 0.25;
    double compute = 1.0;
    double solve_pace_seconds = 0.3;
    double presolve_lead_seconds = 0.5;
    double traffic_tick_seconds = 0.05;
    double duration_s = 7.0;
};

struct ScenarioConfig {
    std::string scenario;  // bandwidth_exhaustion | address_exhaustion |
                           // compromised_routers | client_session
    uint64_t seed = 1;
    std::optional<double> duration_s;
    simnet::BandwidthParams bandwidth{};
    simnet::AddressParams address{};
    simnet::CompromisedParams compromised{};
    SessionParams session{};
};

// Strict parse: unknown keys anywhere are errors, as are wrong value types.
ScenarioConfig parse_scenario_config(const std::string& text);
ScenarioConfig load_scenario_config(const std::string& path);  // IoError if unreadable

// Every knob explicit, defaults included.
nlohmann::json effective_config(const ScenarioConfig& cfg);

report::RunReport run_client_session_scenario(const SessionParams& prm, uint64_t seed);

// Dispatch on cfg.scenario; seed_override (from --seed) wins over cfg.seed.
report::RunReport run_scenario(const ScenarioConfig& cfg, std::optional<uint64_t> seed_override);

}  // namespace mirage::config
