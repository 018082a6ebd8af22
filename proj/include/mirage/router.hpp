#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mirage/bytes.hpp"

namespace mirage::router {

struct AclOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Packet {
    u128 dst_suffix = 0;
    uint32_t size_bytes = 0;
    uint64_t flow_id = 0;
    uint64_t seq = 0;
};

enum class FilterDecision { Forward, Drop, ForwardAndAlarm };

// Dataplane allowlist plus decoy entries. Decoys are addresses never handed
// to clients; traffic to one means the address feed leaked. The table is an
// immutable snapshot apart from the per-decoy hit counters, so concurrent
// filtering against one snapshot is safe.
class AclTable {
  public:
    AclTable();
    AclTable(std::vector<u128> allowed, std::vector<u128> decoys, size_t max_entries);

    AclTable(const AclTable&);
    AclTable& operator=(const AclTable&) = delete;

    FilterDecision filter(u128 dst_suffix) const;
    FilterDecision filter(const Packet& p) const { return filter(p.dst_suffix); }

    size_t size() const { return allowed_.size() + decoys_.size(); }
    size_t max_entries() const { return max_entries_; }
    const std::vector<u128>& allowed() const { return allowed_; }
    const std::vector<u128>& decoys() const { return decoys_; }
    uint64_t decoy_hits(u128 decoy) const;

    friend AclTable acl_update(const AclTable&, std::vector<u128>, std::vector<u128>);

  private:
    std::vector<u128> allowed_;  // sorted
    std::vector<u128> decoys_;   // sorted
    std::unique_ptr<std::atomic<uint64_t>[]> hits_;  // parallel to decoys_
    size_t max_entries_;
};

// New snapshot with the replacement entries; hit counters carry over for
// decoys present in both tables.
AclTable acl_update(const AclTable& cur, std::vector<u128> new_allowed,
                    std::vector<u128> new_decoys);

struct LeakFinding {
    u128 decoy_suffix = 0;
    uint64_t hits = 0;
};

// Decoys whose hit count reached the threshold, highest count first.
std::vector<LeakFinding> detect_leak(const AclTable& t, uint64_t threshold);

// Swap point for concurrent readers: writers install a whole new snapshot,
// readers pin one and never see a mix of generations.
class AclHandle {
  public:
    AclHandle() : cur_(std::make_shared<const AclTable>()) {}
    explicit AclHandle(AclTable t) : cur_(std::make_shared<const AclTable>(std::move(t))) {}

    std::shared_ptr<const AclTable> snapshot() const {
        std::lock_guard<std::mutex> lk(m_);
        return cur_;
    }
    void install(AclTable t) {
        auto next = std::make_shared<const AclTable>(std::move(t));
        std::lock_guard<std::mutex> lk(m_);
        cur_ = std::move(next);
    }

  private:
    mutable std::mutex m_;
    std::shared_ptr<const AclTable> cur_;
};

// Snapshot file: one lowercase hex suffix per line; decoy lines are prefixed
// with "#decoy ". Other #-lines are comments.
void write_acl_file(const AclTable& t, const std::string& path, int suffix_bits);
AclTable read_acl_file(const std::string& path, size_t max_entries);

// ============================================================================
// Deficit round robin over per-destination queues.
// ============================================================================

struct DrrConfig {
    uint32_t quantum_bytes = 1500;
    uint32_t queue_capacity_packets = 64;  // tail drop beyond this
};

class DrrScheduler {
  public:
    explicit DrrScheduler(DrrConfig cfg = {});

    // Weight applies from the next credit; unknown destinations default to 1.
    void set_weight(u128 dst_suffix, uint32_t weight);

    // False when the destination queue is full (packet dropped).
    bool enqueue(const Packet& p);

    std::optional<Packet> dequeue();

    bool empty() const { return backlog_packets_ == 0; }
    size_t backlog_packets() const { return backlog_packets_; }
    uint64_t backlog_bytes() const { return backlog_bytes_; }
    size_t active_queues() const { return active_.size(); }
    uint64_t deficit_of(u128 dst_suffix) const;

  private:
    struct Queue {
        std::deque<Packet> pkts;
        uint64_t deficit = 0;
        uint32_t weight = 1;
        bool active = false;
    };

    DrrConfig cfg_;
    std::unordered_map<u128, Queue, U128Hash> queues_;
    std::deque<u128> active_;  // service order
    bool credit_granted_ = false;  // front queue already credited this visit
    size_t backlog_packets_ = 0;
    uint64_t backlog_bytes_ = 0;
};

}  // namespace mirage::router
