#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "mirage/router.hpp"

namespace mirage::simnet {

enum class EventKind { PacketArrival, PuzzleSolved, TimerFire, IntervalRollover, ProbeResult };

// Discrete-event core. Ties in time are served in schedule order, so a run is
// a pure function of (scenario, seed).
class Simulator {
  public:
    double now() const { return now_; }

    void at(double t, EventKind kind, std::function<void()> fn);
    void after(double dt, EventKind kind, std::function<void()> fn);

    // Every period until the horizon set by run_until.
    void every(double period, EventKind kind, std::function<void()> fn);

    void run_until(double horizon);
    uint64_t processed() const { return processed_; }

  private:
    struct Ev {
        double t;
        uint64_t seq;
        EventKind kind;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Ev& a, const Ev& b) const {
            if (a.t != b.t) return a.t > b.t;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Ev, std::vector<Ev>, Later> queue_;
    double now_ = 0;
    double horizon_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t processed_ = 0;
};

// ============================================================================
// Client compute model
// ============================================================================

struct ClientModel {
    double base_cycles = 1e9;      // per resolve, independent of puzzles
    double attempt_cycles = 1e6;   // per candidate key tried
    double cpu_hz = 1e9;           // cycles per second available to this process
    // Attempt count distribution override (mean, stddev); by default the mean
    // is 2^(d-1) with stddev 2^(d-1)/sqrt(3), truncated to [1, 2^d].
    std::optional<std::pair<double, double>> attempts_dist;
};

double sample_attempts(const ClientModel& m, int difficulty, std::mt19937_64& rng);

// Wall-clock seconds to fetch and solve one puzzle: (B + N*E) / C.
double solve_time(const ClientModel& m, int difficulty, std::mt19937_64& rng);

// Wall-clock seconds for a plain resolve when hopping is off: B / C.
double resolve_time(const ClientModel& m);

// ============================================================================
// Link with transmission serialization, optional ACL and per-destination DRR
// ============================================================================

struct LinkConfig {
    double capacity_bps = 1e7;
    double prop_delay_s = 0.0;
    bool per_destination_fair = false;     // false: single FIFO
    uint32_t fifo_capacity_packets = 100;
    router::DrrConfig drr{};
};

class Link {
  public:
    Link(Simulator& sim, LinkConfig cfg);

    void set_acl(std::shared_ptr<const router::AclTable> acl) { acl_ = std::move(acl); }

    // Ingress at the current simulation time.
    void send(const router::Packet& p);

    std::function<void(const router::Packet&)> on_deliver;
    std::function<void(const router::Packet&)> on_drop;

    uint64_t delivered_bytes() const { return delivered_bytes_; }
    uint64_t delivered_packets() const { return delivered_packets_; }
    uint64_t dropped_packets() const { return dropped_packets_; }
    const LinkConfig& config() const { return cfg_; }

  private:
    void start_tx();
    std::optional<router::Packet> pop_next();

    Simulator& sim_;
    LinkConfig cfg_;
    std::shared_ptr<const router::AclTable> acl_;
    router::DrrScheduler drr_;
    std::deque<router::Packet> fifo_;
    bool busy_ = false;
    uint64_t delivered_bytes_ = 0;
    uint64_t delivered_packets_ = 0;
    uint64_t dropped_packets_ = 0;
};

}  // namespace mirage::simnet
