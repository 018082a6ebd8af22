#include "mirage/simnet.hpp"

#include <cmath>
#include <stdexcept>

namespace mirage::simnet {

void Simulator::at(double t, EventKind kind, std::function<void()> fn) {
    if (t < now_) throw std::invalid_argument("cannot schedule into the past");
    queue_.push(Ev{t, next_seq_++, kind, std::move(fn)});
}

void Simulator::after(double dt, EventKind kind, std::function<void()> fn) {
    at(now_ + dt, kind, std::move(fn));
}

void Simulator::every(double period, EventKind kind, std::function<void()> fn) {
    if (period <= 0) throw std::invalid_argument("timer period must be positive");
    auto shared = std::make_shared<std::function<void()>>(std::move(fn));
    // Self-rescheduling wrapper; stops once the horizon cuts it off.
    struct Rearm {
        Simulator* sim;
        double period;
        EventKind kind;
        std::shared_ptr<std::function<void()>> fn;
        void operator()() const {
            (*fn)();
            sim->at(sim->now() + period, kind, Rearm{sim, period, kind, fn});
        }
    };
    at(now_ + period, kind, Rearm{this, period, kind, shared});
}

void Simulator::run_until(double horizon) {
    horizon_ = horizon;
    while (!queue_.empty() && queue_.top().t <= horizon) {
        Ev ev = queue_.top();
        queue_.pop();
        now_ = ev.t;
        ++processed_;
        ev.fn();
    }
    now_ = horizon;
}

double sample_attempts(const ClientModel& m, int difficulty, std::mt19937_64& rng) {
    if (difficulty < 0 || difficulty > 30) throw std::invalid_argument("difficulty must be in [0, 30]");
    double space = std::exp2(difficulty);
    double mean = m.attempts_dist ? m.attempts_dist->first : space / 2.0;
    double sd = m.attempts_dist ? m.attempts_dist->second : space / (2.0 * std::sqrt(3.0));
    if (sd <= 0) return std::min(std::max(mean, 1.0), space);
    std::normal_distribution<double> dist(mean, sd);
    // Truncate by redraw; the window covers well over half the mass, so this
    // terminates quickly.
    for (int tries = 0; tries < 1000; ++tries) {
        double n = dist(rng);
        if (n >= 1.0 && n <= space) return n;
    }
    return std::min(std::max(mean, 1.0), space);
}

double solve_time(const ClientModel& m, int difficulty, std::mt19937_64& rng) {
    if (m.cpu_hz <= 0) throw std::invalid_argument("cpu_hz must be positive");
    double n = sample_attempts(m, difficulty, rng);
    return (m.base_cycles + n * m.attempt_cycles) / m.cpu_hz;
}

double resolve_time(const ClientModel& m) {
    if (m.cpu_hz <= 0) throw std::invalid_argument("cpu_hz must be positive");
    return m.base_cycles / m.cpu_hz;
}

Link::Link(Simulator& sim, LinkConfig cfg) : sim_(sim), cfg_(cfg), drr_(cfg.drr) {
    if (cfg_.capacity_bps <= 0) throw std::invalid_argument("link capacity must be positive");
}

void Link::send(const router::Packet& p) {
    if (acl_ && acl_->filter(p.dst_suffix) == router::FilterDecision::Drop) {
        ++dropped_packets_;
        if (on_drop) on_drop(p);
        return;
    }
    bool accepted;
    if (cfg_.per_destination_fair) {
        accepted = drr_.enqueue(p);
    } else {
        accepted = fifo_.size() < cfg_.fifo_capacity_packets;
        if (accepted) fifo_.push_back(p);
    }
    if (!accepted) {
        ++dropped_packets_;
        if (on_drop) on_drop(p);
        return;
    }
    if (!busy_) start_tx();
}

std::optional<router::Packet> Link::pop_next() {
    if (cfg_.per_destination_fair) return drr_.dequeue();
    if (fifo_.empty()) return std::nullopt;
    router::Packet p = fifo_.front();
    fifo_.pop_front();
    return p;
}

void Link::start_tx() {
    auto next = pop_next();
    if (!next) {
        busy_ = false;
        return;
    }
    busy_ = true;
    router::Packet p = *next;
    double tx = p.size_bytes * 8.0 / cfg_.capacity_bps;
    sim_.after(tx, EventKind::PacketArrival, [this, p]() {
        delivered_bytes_ += p.size_bytes;
        delivered_packets_ += 1;
        if (cfg_.prop_delay_s > 0) {
            router::Packet q = p;
            sim_.after(cfg_.prop_delay_s, EventKind::PacketArrival, [this, q]() {
                if (on_deliver) on_deliver(q);
            });
        } else if (on_deliver) {
            on_deliver(p);
        }
        start_tx();
    });
}

}  // namespace mirage::simnet
