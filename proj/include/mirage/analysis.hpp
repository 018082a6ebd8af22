#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mirage::analysis {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fraction of the active address set an attacker finds by random scanning:
// each bot probes floor(rate * interval / probe_bits) addresses per interval.
double scan_fraction(double bots, double probe_rate_bps, double probe_size_bits,
                     double interval_seconds, int suffix_bits);

// Probability one random guess hits an entry of the active set.
double brute_force_success(double active_entries, int suffix_bits = 64);

struct FairShare {
    double honest = 0;
    double attacker = 0;
};

// Bandwidth split under per-computation fairness when a fraction f of honest
// traffic is observed (and its addresses flooded) via compromised routers.
FairShare fair_share(double honest_compute, double attacker_compute, double compromised_fraction = 0);

// Mean brute-force decryptions for a d-bit puzzle: (2^d + 1) / 2.
double expected_attempts(int difficulty);

// ============================================================================
// Cost model
// ============================================================================

struct CostModel {
    double price_compute_per_unit_hr = 0.05;
    double price_transfer_per_gb = 0.09;
    double legit_load_bps = 1e9;        // served client traffic, no defense
    double victim_capacity_bps = 1e9;
    double honest_compute_units = 1e5;  // aggregate client compute paid for
};

struct CostPoint {
    double attacker_share = 0;      // x
    double without_defense_per_hr = 0;
    double with_defense_per_hr = 0;
};

// Hourly attacker spend to capture share x of the victim's resources.
CostPoint attack_cost(const CostModel& m, double x);
std::vector<CostPoint> attack_cost_grid(const CostModel& m, const std::vector<double>& xs);

// ============================================================================
// Topology and pushback
// ============================================================================

struct LinkStat {
    std::string id;
    std::optional<double> capacity_bps;  // empty: unknown, never congested
    int hop_distance = 0;                // router hops from victim, >= 1
    uint32_t as_number = 0;
    double path_fraction = 0;            // fraction of paths traversing it
};

struct TopologyMap {
    std::vector<LinkStat> links;
    // Each path lists link indices ordered away from the victim
    // (hop distance 1, 2, ...). All paths terminate at the victim.
    std::vector<std::vector<size_t>> paths;

    size_t link_index(const std::string& id) const;  // throws if absent
};

// Tab-separated estimates, first line "#mirage-topo v1", then rows
//   path_id  hop_index  link_id  capacity_bps|NA  avail_bw_bps|NA  as_number
// A row whose capacity is below its available bandwidth is a measurement
// error and is skipped; a link's capacity is the median of its valid
// estimates, or unknown when none survive.
TopologyMap ingest_topology(std::istream& in);
TopologyMap load_topology(const std::string& path);

struct PushbackLink {
    std::string id;
    int router_hops = 0;   // distance of the filter from the victim
    int as_hops = 0;       // distinct AS numbers from there down to the victim
    double weight = 0;     // fraction of attack traffic filtered here
};

struct PushbackReport {
    std::vector<PushbackLink> links;          // sorted by id
    double mean_router_hops = 0;              // weighted, unfiltered paths count as 0
    double mean_as_hops = 0;
    double pushed_back_fraction = 0;          // attack traffic requiring filters
    std::vector<std::pair<std::string, double>> link_loads;  // id -> attack bps
};

// Attack traffic splits evenly across paths; a link is congested when its
// share exceeds capacity. Each path's filter goes on its congested link
// farthest from the victim.
PushbackReport compute_pushback(const TopologyMap& map, double total_attack_bps);

}  // namespace mirage::analysis
