#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "mirage/bytes.hpp"

namespace mirage::hop {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DepthTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Keyed address-hopping schedule. Each interval exposes a fresh set of
// pseudorandom host suffixes under a fixed network prefix; a suffix is derived
// as hash(encrypt(index || interval)) truncated to the host part.
struct HopConfig {
    Block16 master_key{};
    int prefix_bits = 64;            // network part, 8..120
    u128 prefix = 0;                 // value of the high prefix_bits
    uint32_t addresses_per_interval = 64;
    double interval_seconds = 300.0;
    double grace_seconds = 30.0;

    int suffix_bits() const { return 128 - prefix_bits; }
    void validate() const;
};

struct AddressSuffix {
    u128 value = 0;        // suffix_bits wide
    uint64_t index = 0;    // i
    uint64_t interval = 0; // T

    bool operator==(const AddressSuffix& o) const {
        return value == o.value && index == o.index && interval == o.interval;
    }
};

AddressSuffix derive_suffix(const HopConfig& cfg, uint64_t index, uint64_t interval);

// Suffixes for indices [0, addresses_per_interval), deduplicated by value
// (first index wins). Result size may be below n only on value collisions.
std::vector<AddressSuffix> active_set(const HopConfig& cfg, uint64_t interval);

// Constant-time-queryable view of one interval's values.
struct ActiveSetView {
    uint64_t interval = 0;
    std::unordered_set<u128, U128Hash> values;
};
ActiveSetView active_view(const HopConfig& cfg, uint64_t interval);

uint64_t interval_of(const HopConfig& cfg, double now_seconds);

// True while the suffix is in the current interval's set, or in the previous
// interval's set during the rollover grace window.
bool is_active(const HopConfig& cfg, u128 suffix_value, double now_seconds);
bool is_active(const HopConfig& cfg, const AddressSuffix& s, double now_seconds);

// Binary tree of addresses for aggregate scheduling: level l holds 2^l nodes,
// node (l, k) is derived from tree index 2^l - 1 + k and carries weight 2^l.
struct TreeNode {
    int level = 0;
    uint64_t pos = 0;
    uint64_t tree_index = 0;
    AddressSuffix suffix;
    uint64_t weight = 1;
};

struct AddressTree {
    int depth = 0;  // deepest level, levels 0..depth
    std::vector<TreeNode> nodes;  // level-major order

    size_t level_offset(int level) const { return (static_cast<size_t>(1) << level) - 1; }
    const TreeNode& node(int level, uint64_t pos) const { return nodes[level_offset(level) + pos]; }
};

// Throws DepthTooLarge when the node count would exceed 2^20. Value
// collisions are resolved by re-deriving with a salted index so every node
// carries a distinct suffix.
AddressTree build_adaptive_tree(const HopConfig& cfg, int depth, uint64_t interval);

}  // namespace mirage::hop
