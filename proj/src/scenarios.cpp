#include "mirage/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "mirage/hop.hpp"
#include "mirage/log.hpp"
#include "mirage/puzzle.hpp"

namespace mirage::simnet {

namespace {

hop::HopConfig hop_config_for_seed(uint64_t seed, uint32_t addresses) {
    hop::HopConfig cfg;
    std::mt19937_64 rng(seed ^ 0x9d2c5680ULL);
    store_be64(cfg.master_key.data(), rng());
    store_be64(cfg.master_key.data() + 8, rng());
    cfg.addresses_per_interval = addresses;
    return cfg;
}

struct TcpParams {
    double rtt_s = 0.05;
    uint32_t packet_bytes = 1000;
    double initial_cwnd = 10;
    double max_cwnd = 1e5;
};

// Window-based elastic sender: additive increase of one packet per RTT,
// multiplicative decrease on loss (at most once per RTT). Every departed
// packet comes back as exactly one ACK or one loss signal, so the window
// self-clocks even under total loss.
class TcpFlow {
  public:
    TcpFlow(Simulator& sim, Link& link, u128 dst, uint64_t id, TcpParams prm)
        : sim_(sim), link_(link), dst_(dst), id_(id), prm_(prm), cwnd_(prm.initial_cwnd) {}

    void start() { try_send(); }
    uint64_t id() const { return id_; }
    uint64_t goodput_bytes() const { return goodput_bytes_; }

    void delivered(const router::Packet& p) {
        goodput_bytes_ += p.size_bytes;
        sim_.after(prm_.rtt_s / 2, EventKind::PacketArrival, [this]() { on_ack(); });
    }
    void dropped(const router::Packet&) {
        // The loss signal (duplicate ACKs) reaches the sender about an RTT on.
        sim_.after(prm_.rtt_s, EventKind::PacketArrival, [this]() { on_loss(); });
    }

  private:
    void on_ack() {
        --in_flight_;
        cwnd_ = std::min(cwnd_ + 1.0 / std::max(cwnd_, 1.0), prm_.max_cwnd);
        try_send();
    }
    void on_loss() {
        --in_flight_;
        if (sim_.now() - last_halve_ >= prm_.rtt_s) {
            cwnd_ = std::max(cwnd_ / 2.0, 1.0);
            last_halve_ = sim_.now();
        }
        try_send();
    }
    void try_send() {
        while (in_flight_ < static_cast<int>(cwnd_)) {
            ++in_flight_;
            router::Packet p{dst_, prm_.packet_bytes, id_, seq_++};
            sim_.after(prm_.rtt_s / 2, EventKind::PacketArrival, [this, p]() { link_.send(p); });
        }
    }

    Simulator& sim_;
    Link& link_;
    u128 dst_;
    uint64_t id_;
    TcpParams prm_;
    double cwnd_;
    int in_flight_ = 0;
    uint64_t seq_ = 0;
    double last_halve_ = -1e18;
    uint64_t goodput_bytes_ = 0;
};

// Constant-rate sender cycling over a destination list that may grow while
// the source runs. An empty list idles until the next tick.
class CbrSource {
  public:
    CbrSource(Simulator& sim, Link& link, double rate_bps, uint32_t packet_bytes, uint64_t id)
        : sim_(sim), link_(link), rate_bps_(rate_bps), packet_bytes_(packet_bytes), id_(id) {}

    void add_destination(u128 dst) { dsts_.push_back(dst); }
    void start() {
        if (rate_bps_ <= 0) return;
        tick();
    }

  private:
    void tick() {
        if (!dsts_.empty()) {
            router::Packet p{dsts_[rr_ % dsts_.size()], packet_bytes_, id_, seq_++};
            ++rr_;
            link_.send(p);
        }
        sim_.after(packet_bytes_ * 8.0 / rate_bps_, EventKind::TimerFire, [this]() { tick(); });
    }

    Simulator& sim_;
    Link& link_;
    double rate_bps_;
    uint32_t packet_bytes_;
    uint64_t id_;
    std::vector<u128> dsts_;
    size_t rr_ = 0;
    uint64_t seq_ = 0;
};

}  // namespace

// ============================================================================
// Bandwidth exhaustion
// ============================================================================

report::RunReport run_bandwidth_exhaustion(const BandwidthParams& prm, uint64_t seed) {
    Simulator sim;

    LinkConfig lc;
    lc.capacity_bps = prm.bottleneck_bps;
    lc.per_destination_fair = prm.mirage_on;
    lc.fifo_capacity_packets = prm.fifo_capacity_packets;
    lc.drr.queue_capacity_packets = prm.queue_capacity_packets;
    Link link(sim, lc);

    auto hcfg = hop_config_for_seed(seed, static_cast<uint32_t>(prm.benign_flows) + 1);
    auto addrs = hop::active_set(hcfg, 0);
    // Collisions would only occur on a 64-bit value draw, ignore that case.
    std::vector<u128> values;
    for (auto& a : addrs) values.push_back(a.value);
    u128 attack_dst = values.back();

    if (prm.mirage_on)
        link.set_acl(std::make_shared<const router::AclTable>(values, std::vector<u128>{}, 1 << 20));

    TcpParams tp;
    tp.rtt_s = prm.rtt_s;
    tp.packet_bytes = prm.packet_bytes;
    std::vector<std::unique_ptr<TcpFlow>> flows;
    std::unordered_map<uint64_t, TcpFlow*> by_id;
    for (int i = 0; i < prm.benign_flows; ++i) {
        auto f = std::make_unique<TcpFlow>(sim, link, values[static_cast<size_t>(i)],
                                           static_cast<uint64_t>(i) + 1, tp);
        by_id[f->id()] = f.get();
        flows.push_back(std::move(f));
    }
    const uint64_t kAttackId = 0;
    CbrSource attacker(sim, link, prm.attack_multiplier * prm.bottleneck_bps, prm.packet_bytes, kAttackId);
    attacker.add_destination(attack_dst);

    struct Split {
        uint64_t benign = 0;
        uint64_t attack = 0;
    };
    auto window = std::make_shared<Split>();
    auto second = std::make_shared<Split>();
    link.on_deliver = [&by_id, window, second, &sim, warmup = prm.warmup_s](const router::Packet& p) {
        auto it = by_id.find(p.flow_id);
        if (it != by_id.end()) {
            it->second->delivered(p);
            second->benign += p.size_bytes;
            if (sim.now() >= warmup) window->benign += p.size_bytes;
        } else {
            second->attack += p.size_bytes;
            if (sim.now() >= warmup) window->attack += p.size_bytes;
        }
    };
    link.on_drop = [&by_id](const router::Packet& p) {
        auto it = by_id.find(p.flow_id);
        if (it != by_id.end()) it->second->dropped(p);
    };

    report::RunReport rep;
    rep.scenario = "bandwidth_exhaustion";
    rep.seed = seed;

    sim.every(1.0, EventKind::TimerFire, [&rep, second, &sim, &flows]() {
        rep.add(sim.now(), "benign_agg", "throughput_bps", static_cast<double>(second->benign) * 8.0);
        rep.add(sim.now(), "attack", "throughput_bps", static_cast<double>(second->attack) * 8.0);
        for (const auto& f : flows) {
            rep.add(sim.now(), "tcp:" + std::to_string(f->id()), "goodput_bytes_total",
                    static_cast<double>(f->goodput_bytes()));
        }
        *second = {};
    });

    // Stagger starts to avoid phase-locked windows.
    for (size_t i = 0; i < flows.size(); ++i) {
        TcpFlow* f = flows[i].get();
        sim.at(0.01 * static_cast<double>(i), EventKind::TimerFire, [f]() { f->start(); });
    }
    attacker.start();
    sim.run_until(prm.duration_s);

    double span = prm.duration_s - prm.warmup_s;
    rep.set_summary("benign_aggregate_bps", static_cast<double>(window->benign) * 8.0 / span);
    rep.set_summary("attack_delivered_bps", static_cast<double>(window->attack) * 8.0 / span);
    rep.set_summary("utilization",
                    static_cast<double>(window->benign + window->attack) * 8.0 / span / prm.bottleneck_bps);
    rep.set_summary("dropped_packets", static_cast<double>(link.dropped_packets()));
    return rep;
}

report::RunReport scenario_bandwidth_exhaustion(double attack_multiplier, bool mirage_on, uint64_t seed) {
    BandwidthParams prm;
    prm.attack_multiplier = attack_multiplier;
    prm.mirage_on = mirage_on;
    return run_bandwidth_exhaustion(prm, seed);
}

// ============================================================================
// Address exhaustion
// ============================================================================

report::RunReport run_address_exhaustion(const AddressParams& prm, uint64_t seed) {
    if (prm.attacker_machines < 1 || prm.attacker_processes < prm.attacker_machines)
        throw std::invalid_argument("need attacker_processes >= attacker_machines >= 1");

    Simulator sim;
    std::mt19937_64 rng(seed);

    struct Proc {
        int machine;  // -1 honest
        int difficulty;
        ClientModel model;
    };
    std::vector<Proc> procs;

    // Machine -1 is the honest user's: one process, same hardware as each
    // attacker machine.
    std::vector<int> procs_on_machine(static_cast<size_t>(prm.attacker_machines), 0);
    for (int p = 0; p < prm.attacker_processes; ++p)
        procs_on_machine[static_cast<size_t>(p % prm.attacker_machines)] += 1;

    auto make_model = [&prm](int machine_procs) {
        ClientModel m;
        m.base_cycles = prm.base_cycles;
        m.attempt_cycles = prm.attempt_cycles;
        if (prm.mirage_on) {
            // Key search is CPU-bound: processes split the whole machine.
            m.cpu_hz = prm.machine_cpu_hz / std::max(machine_procs, 1);
        } else {
            // Plain resolving leaves the CPU mostly idle: each process runs at
            // the single-process ceiling until processes outnumber it.
            m.cpu_hz = prm.machine_cpu_hz / std::max(machine_procs, prm.saturation_processes);
        }
        return m;
    };

    procs.push_back(Proc{-1, prm.initial_difficulty, make_model(1)});
    for (int mach = 0; mach < prm.attacker_machines; ++mach)
        for (int i = 0; i < procs_on_machine[static_cast<size_t>(mach)]; ++i)
            procs.push_back(Proc{mach, prm.initial_difficulty,
                                 make_model(procs_on_machine[static_cast<size_t>(mach)])});

    std::vector<uint64_t> held(static_cast<size_t>(prm.attacker_machines) + 1, 0);
    auto held_of = [&held](int machine) -> uint64_t& {
        return held[static_cast<size_t>(machine + 1)];
    };

    report::RunReport rep;
    rep.scenario = "address_exhaustion";
    rep.seed = seed;

    puzzle::AllocatorState alloc;
    alloc.cfg.release_rate = prm.release_rate;
    alloc.cfg.bucket_capacity = prm.bucket_capacity;

    // The allocator runs as an asynchronous server: every solution is
    // adjudicated on arrival. Granted processes start over at the base
    // difficulty (the raised price was for that slot only); refused ones
    // re-solve at the escalated difficulty.
    std::function<void(uint64_t)> schedule_solve = [&](uint64_t req) {
        Proc& pr = procs[req];
        if (prm.mirage_on) {
            double dt = solve_time(pr.model, pr.difficulty, rng);
            sim.after(dt, EventKind::PuzzleSolved, [&, req]() {
                std::vector<puzzle::PendingSolution> sol{puzzle::PendingSolution{
                    req, procs[req].difficulty, sim.now(), 0, true}};
                auto step = puzzle::allocator_step(alloc, sim.now(), sol);
                if (!step.grants.empty()) {
                    held_of(procs[req].machine) += 1;
                    procs[req].difficulty = prm.initial_difficulty;
                } else if (!step.escalations.empty()) {
                    procs[req].difficulty = step.escalations.front().new_difficulty;
                }
                schedule_solve(req);
            });
        } else {
            double dt = resolve_time(pr.model);
            sim.after(dt, EventKind::PuzzleSolved, [&, req]() {
                held_of(procs[req].machine) += 1;
                schedule_solve(req);
            });
        }
    };

    sim.every(10.0, EventKind::TimerFire, [&]() {
        rep.add(sim.now(), "machine:honest", "held_suffixes", static_cast<double>(held_of(-1)));
        for (int mach = 0; mach < prm.attacker_machines; ++mach)
            rep.add(sim.now(), "machine:attacker:" + std::to_string(mach), "held_suffixes",
                    static_cast<double>(held_of(mach)));
        if (prm.mirage_on && log::enabled(log::Level::Debug)) {
            double att_d = 0;
            for (size_t i = 1; i < procs.size(); ++i) att_d += procs[i].difficulty;
            att_d /= static_cast<double>(procs.size() - 1);
            MIRAGE_LOG_DEBUG("t=%.0f held honest=%llu attacker=%llu d_honest=%d d_attacker_mean=%.1f",
                             sim.now(), static_cast<unsigned long long>(held_of(-1)),
                             static_cast<unsigned long long>(held[1]), procs[0].difficulty, att_d);
        }
    });

    for (uint64_t req = 0; req < procs.size(); ++req) schedule_solve(req);
    sim.run_until(prm.duration_s);

    double honest = static_cast<double>(held_of(-1));
    double attacker_total = 0;
    for (int mach = 0; mach < prm.attacker_machines; ++mach)
        attacker_total += static_cast<double>(held_of(mach));
    double per_machine = attacker_total / prm.attacker_machines;
    rep.set_summary("held_honest", honest);
    rep.set_summary("held_attacker_total", attacker_total);
    rep.set_summary("held_attacker_per_machine", per_machine);
    rep.set_summary("attacker_honest_ratio", honest > 0 ? per_machine / honest : 0.0);
    rep.set_summary("grants_total", static_cast<double>(alloc.grants_total));
    rep.set_summary("escalations_total", static_cast<double>(alloc.escalations_total));
    return rep;
}

report::RunReport scenario_address_exhaustion(int attacker_machines, int attacker_processes,
                                              bool mirage_on, uint64_t seed) {
    AddressParams prm;
    prm.attacker_machines = attacker_machines;
    prm.attacker_processes = attacker_processes;
    prm.mirage_on = mirage_on;
    return run_address_exhaustion(prm, seed);
}

// ============================================================================
// Compromised routers
// ============================================================================

report::RunReport run_compromised_routers(const CompromisedParams& prm, uint64_t seed) {
    if (prm.compromised_fraction < 0 || prm.compromised_fraction > 1)
        throw std::invalid_argument("compromised_fraction must be in [0, 1]");
    if (prm.honest_compute < 0 || prm.attacker_compute < 0 ||
        prm.honest_compute + prm.attacker_compute <= 0)
        throw std::invalid_argument("compute rates must be nonnegative and not both zero");

    Simulator sim;
    std::mt19937_64 rng(seed);

    LinkConfig lc;
    lc.capacity_bps = prm.bottleneck_bps;
    lc.per_destination_fair = true;
    lc.drr.queue_capacity_packets = prm.queue_capacity_packets;
    Link link(sim, lc);

    auto hcfg = hop_config_for_seed(seed, 1);

    // Aggregate solve throughput is normalized so both sides together emit
    // prm.solutions_per_second; each side's rate is proportional to its
    // compute. Clients within a side split that side's compute evenly.
    double total_compute = prm.honest_compute + prm.attacker_compute;
    double mean_attempts = std::exp2(prm.difficulty - 1);
    double work_cycles = 1e7 + mean_attempts * 1e6;
    double unit_hz = prm.solutions_per_second * work_cycles / total_compute;

    auto side_model = [&](double side_compute) {
        ClientModel m;
        m.base_cycles = 1e7;
        m.attempt_cycles = 1e6;
        m.cpu_hz = side_compute * unit_hz / prm.clients_per_side;
        return m;
    };
    ClientModel honest_model = side_model(prm.honest_compute);
    ClientModel attack_model = side_model(prm.attacker_compute);

    int snooped_clients =
        static_cast<int>(std::lround(prm.compromised_fraction * prm.clients_per_side));

    uint64_t address_index = 0;
    std::vector<u128> granted;
    auto next_suffix = [&]() {
        u128 v = hop::derive_suffix(hcfg, address_index++, 0).value;
        granted.push_back(v);
        link.set_acl(std::make_shared<const router::AclTable>(granted, std::vector<u128>{},
                                                              static_cast<size_t>(1) << 20));
        return v;
    };

    TcpParams tp;
    tp.rtt_s = prm.rtt_s;
    tp.packet_bytes = prm.packet_bytes;
    std::vector<std::unique_ptr<TcpFlow>> flows;
    std::unordered_map<uint64_t, TcpFlow*> by_id;
    uint64_t next_flow_id = 1;

    const uint64_t kSprayId = 0;
    CbrSource spray(sim, link, prm.spray_multiplier * prm.bottleneck_bps, prm.packet_bytes, kSprayId);

    // client ids: [0, n) honest, [n, 2n) attacker. The first `snooped_clients`
    // honest clients route via the compromised router: their traffic dies
    // before the bottleneck and their fresh addresses leak to the flooder, so
    // each such solve just feeds the spray list.
    int n = prm.clients_per_side;
    std::function<void(int)> schedule_client = [&](int client) {
        bool honest = client < n;
        const ClientModel& m = honest ? honest_model : attack_model;
        double dt = solve_time(m, prm.difficulty, rng);
        sim.after(dt, EventKind::PuzzleSolved, [&, client]() {
            u128 dst = next_suffix();
            bool is_honest = client < n;
            bool snooped = is_honest && client < snooped_clients;
            if (is_honest && !snooped) {
                auto f = std::make_unique<TcpFlow>(sim, link, dst, next_flow_id++, tp);
                by_id[f->id()] = f.get();
                f->start();
                flows.push_back(std::move(f));
            } else {
                spray.add_destination(dst);
            }
            schedule_client(client);
        });
    };

    struct Split {
        uint64_t honest = 0;
        uint64_t attack = 0;
    };
    auto window = std::make_shared<Split>();
    auto second = std::make_shared<Split>();
    link.on_deliver = [&, window, second](const router::Packet& p) {
        auto it = by_id.find(p.flow_id);
        if (it != by_id.end()) {
            it->second->delivered(p);
            second->honest += p.size_bytes;
            if (sim.now() >= prm.warmup_s) window->honest += p.size_bytes;
        } else {
            second->attack += p.size_bytes;
            if (sim.now() >= prm.warmup_s) window->attack += p.size_bytes;
        }
    };
    link.on_drop = [&](const router::Packet& p) {
        auto it = by_id.find(p.flow_id);
        if (it != by_id.end()) it->second->dropped(p);
    };

    report::RunReport rep;
    rep.scenario = "compromised_routers";
    rep.seed = seed;
    sim.every(1.0, EventKind::TimerFire, [&, second]() {
        rep.add(sim.now(), "honest_agg", "throughput_bps", static_cast<double>(second->honest) * 8.0);
        rep.add(sim.now(), "attack_agg", "throughput_bps", static_cast<double>(second->attack) * 8.0);
        rep.add(sim.now(), "honest_agg", "flows", static_cast<double>(by_id.size()));
        rep.add(sim.now(), "attack_agg", "flows",
                static_cast<double>(granted.size() - by_id.size()));
        *second = {};
    });

    for (int c = 0; c < 2 * n; ++c) schedule_client(c);
    spray.start();
    sim.run_until(prm.duration_s);

    double delivered_honest = static_cast<double>(window->honest);
    double delivered_attack = static_cast<double>(window->attack);
    double total = delivered_honest + delivered_attack;
    rep.set_summary("honest_share", total > 0 ? delivered_honest / total : 0.0);
    rep.set_summary("honest_delivered_bps",
                    delivered_honest * 8.0 / (prm.duration_s - prm.warmup_s));
    rep.set_summary("attack_delivered_bps",
                    delivered_attack * 8.0 / (prm.duration_s - prm.warmup_s));
    rep.set_summary("honest_flows", static_cast<double>(by_id.size()));
    rep.set_summary("attacker_queues", static_cast<double>(granted.size() - by_id.size()));
    return rep;
}

report::RunReport scenario_compromised_routers(double compromised_fraction, double honest_compute,
                                               double attacker_compute, uint64_t seed) {
    CompromisedParams prm;
    prm.compromised_fraction = compromised_fraction;
    prm.honest_compute = honest_compute;
    prm.attacker_compute = attacker_compute;
    return run_compromised_routers(prm, seed);
}

}  // namespace mirage::simnet
