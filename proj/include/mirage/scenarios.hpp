#pragma once

#include <cstdint>

#include "mirage/report.hpp"
#include "mirage/simnet.hpp"

namespace mirage::simnet {

// One bottleneck, ten elastic flows, one flooder. With hopping on, the
// bottleneck runs per-destination fair queueing behind the address filter;
// off, it is a plain FIFO.
struct BandwidthParams {
    double attack_multiplier = 1.0;  // flood rate as a fraction of capacity
    bool mirage_on = true;
    int benign_flows = 10;
    double bottleneck_bps = 1e7;
    double rtt_s = 0.05;
    uint32_t packet_bytes = 1000;
    double duration_s = 120;
    double warmup_s = 20;
    uint32_t queue_capacity_packets = 64;
    uint32_t fifo_capacity_packets = 100;
};
report::RunReport run_bandwidth_exhaustion(const BandwidthParams& prm, uint64_t seed);
report::RunReport scenario_bandwidth_exhaustion(double attack_multiplier, bool mirage_on, uint64_t seed);

// Address harvesting race between one honest machine and a pool of attacker
// processes. With hopping on, every address grant costs a solved puzzle and
// grants flow through the difficulty auction; off, a resolve is a flat
// per-process cost and grants are unconditional.
struct AddressParams {
    int attacker_machines = 1;
    int attacker_processes = 10;  // total, split evenly across machines
    bool mirage_on = true;
    double duration_s = 300;
    double machine_cpu_hz = 1e9;
    double base_cycles = 5e7;
    double attempt_cycles = 2.5e5;
    int initial_difficulty = 6;
    // Plain resolves are process-bound, not CPU-bound: one process uses at
    // most 1/saturation of the machine until processes crowd the CPU.
    int saturation_processes = 16;
    // Slot supply outpaces what either side can solve for; the bucket then
    // only absorbs bursts and grants track solution rates, which is where
    // computational fairness comes from.
    double release_rate = 50.0;
    double bucket_capacity = 10.0;
};
report::RunReport run_address_exhaustion(const AddressParams& prm, uint64_t seed);
report::RunReport scenario_address_exhaustion(int attacker_machines, int attacker_processes,
                                              bool mirage_on, uint64_t seed);

// Two solving populations share a fair-queued bottleneck. A fraction of the
// honest clients route through a compromised router that drops their traffic
// and leaks their destination addresses to the flooder.
struct CompromisedParams {
    double honest_compute = 1.0;
    double attacker_compute = 1.0;
    double compromised_fraction = 0.0;
    int clients_per_side = 8;
    double duration_s = 300;
    double warmup_s = 30;
    double bottleneck_bps = 1e7;
    double rtt_s = 0.1;
    uint32_t packet_bytes = 1000;
    uint32_t queue_capacity_packets = 64;
    double spray_multiplier = 1.3;      // flood rate over capacity
    double solutions_per_second = 0.8;  // combined solve rate of both sides
    int difficulty = 8;
};
report::RunReport run_compromised_routers(const CompromisedParams& prm, uint64_t seed);
report::RunReport scenario_compromised_routers(double compromised_fraction, double honest_compute,
                                               double attacker_compute, uint64_t seed);

}  // namespace mirage::simnet
