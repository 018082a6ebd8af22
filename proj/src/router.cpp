#include "mirage/router.hpp"

#include <algorithm>
#include <fstream>

namespace mirage::router {

static void sort_unique(std::vector<u128>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

AclTable::AclTable() : max_entries_(1) {}

AclTable::AclTable(std::vector<u128> allowed, std::vector<u128> decoys, size_t max_entries)
    : allowed_(std::move(allowed)), decoys_(std::move(decoys)), max_entries_(max_entries) {
    sort_unique(allowed_);
    sort_unique(decoys_);
    for (u128 d : decoys_)
        if (std::binary_search(allowed_.begin(), allowed_.end(), d))
            throw std::invalid_argument("decoy entries must be disjoint from allowed entries");
    if (allowed_.size() + decoys_.size() > max_entries_)
        throw AclOverflow("ACL entry count exceeds max_entries");
    if (!decoys_.empty()) {
        hits_ = std::make_unique<std::atomic<uint64_t>[]>(decoys_.size());
        for (size_t i = 0; i < decoys_.size(); ++i) hits_[i].store(0, std::memory_order_relaxed);
    }
}

AclTable::AclTable(const AclTable& o)
    : allowed_(o.allowed_), decoys_(o.decoys_), max_entries_(o.max_entries_) {
    if (!decoys_.empty()) {
        hits_ = std::make_unique<std::atomic<uint64_t>[]>(decoys_.size());
        for (size_t i = 0; i < decoys_.size(); ++i)
            hits_[i].store(o.hits_[i].load(std::memory_order_relaxed), std::memory_order_relaxed);
    }
}

FilterDecision AclTable::filter(u128 dst_suffix) const {
    if (std::binary_search(allowed_.begin(), allowed_.end(), dst_suffix)) return FilterDecision::Forward;
    auto it = std::lower_bound(decoys_.begin(), decoys_.end(), dst_suffix);
    if (it != decoys_.end() && *it == dst_suffix) {
        hits_[static_cast<size_t>(it - decoys_.begin())].fetch_add(1, std::memory_order_relaxed);
        return FilterDecision::ForwardAndAlarm;
    }
    return FilterDecision::Drop;
}

uint64_t AclTable::decoy_hits(u128 decoy) const {
    auto it = std::lower_bound(decoys_.begin(), decoys_.end(), decoy);
    if (it == decoys_.end() || *it != decoy) return 0;
    return hits_[static_cast<size_t>(it - decoys_.begin())].load(std::memory_order_relaxed);
}

AclTable acl_update(const AclTable& cur, std::vector<u128> new_allowed,
                    std::vector<u128> new_decoys) {
    AclTable next(std::move(new_allowed), std::move(new_decoys), cur.max_entries());
    for (size_t i = 0; i < next.decoys().size(); ++i) {
        u128 d = next.decoys()[i];
        uint64_t carried = cur.decoy_hits(d);
        if (carried) next.hits_[i].store(carried, std::memory_order_relaxed);
    }
    return next;
}

std::vector<LeakFinding> detect_leak(const AclTable& t, uint64_t threshold) {
    std::vector<LeakFinding> out;
    for (u128 d : t.decoys()) {
        uint64_t h = t.decoy_hits(d);
        if (h >= threshold && threshold > 0) out.push_back(LeakFinding{d, h});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LeakFinding& a, const LeakFinding& b) { return a.hits > b.hits; });
    return out;
}

void write_acl_file(const AclTable& t, const std::string& path, int suffix_bits) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open ACL file for writing: " + path);
    for (u128 v : t.allowed()) f << suffix_to_hex(v, suffix_bits) << "\n";
    for (u128 v : t.decoys()) f << "#decoy " << suffix_to_hex(v, suffix_bits) << "\n";
}

AclTable read_acl_file(const std::string& path, size_t max_entries) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open ACL file: " + path);
    std::vector<u128> allowed, decoys;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string_view sv(line);
        bool decoy = false;
        if (sv.rfind("#decoy ", 0) == 0) {
            decoy = true;
            sv.remove_prefix(7);
        } else if (sv[0] == '#') {
            continue;
        }
        u128 v;
        if (!parse_hex_u128(sv, v))
            throw ParseError("ACL file " + path + " line " + std::to_string(lineno) + ": bad hex suffix");
        (decoy ? decoys : allowed).push_back(v);
    }
    return AclTable(std::move(allowed), std::move(decoys), max_entries);
}

DrrScheduler::DrrScheduler(DrrConfig cfg) : cfg_(cfg) {}

void DrrScheduler::set_weight(u128 dst_suffix, uint32_t weight) {
    if (weight == 0) throw std::invalid_argument("DRR weight must be positive");
    queues_[dst_suffix].weight = weight;
}

bool DrrScheduler::enqueue(const Packet& p) {
    Queue& q = queues_[p.dst_suffix];
    if (q.pkts.size() >= cfg_.queue_capacity_packets) return false;
    q.pkts.push_back(p);
    backlog_packets_ += 1;
    backlog_bytes_ += p.size_bytes;
    if (!q.active) {
        q.active = true;
        active_.push_back(p.dst_suffix);
    }
    return true;
}

std::optional<Packet> DrrScheduler::dequeue() {
    if (backlog_packets_ == 0) return std::nullopt;
    // Deficits grow by weight*quantum per visit, so some head packet becomes
    // serviceable after finitely many rounds.
    while (true) {
        Queue& q = queues_[active_.front()];
        if (q.pkts.empty()) {
            q.deficit = 0;
            q.active = false;
            active_.pop_front();
            credit_granted_ = false;
            continue;
        }
        if (!credit_granted_) {
            q.deficit += static_cast<uint64_t>(q.weight) * cfg_.quantum_bytes;
            credit_granted_ = true;
        }
        if (q.pkts.front().size_bytes <= q.deficit) {
            Packet p = q.pkts.front();
            q.pkts.pop_front();
            q.deficit -= p.size_bytes;
            backlog_packets_ -= 1;
            backlog_bytes_ -= p.size_bytes;
            if (q.pkts.empty()) {
                q.deficit = 0;  // an empty queue holds no credit
                q.active = false;
                active_.pop_front();
                credit_granted_ = false;
            }
            return p;
        }
        // Turn over: head does not fit (or queue somehow empty).
        active_.push_back(active_.front());
        active_.pop_front();
        credit_granted_ = false;
    }
}

uint64_t DrrScheduler::deficit_of(u128 dst_suffix) const {
    auto it = queues_.find(dst_suffix);
    return it == queues_.end() ? 0 : it->second.deficit;
}

}  // namespace mirage::router
