#include "mirage/hop.hpp"

#include <cmath>

#include "mirage/crypto.hpp"

namespace mirage::hop {

void HopConfig::validate() const {
    if (prefix_bits < 8 || prefix_bits > 120)
        throw ConfigError("prefix_bits must be in [8, 120]");
    if (!(interval_seconds > 0))
        throw ConfigError("interval_seconds must be positive");
    if (grace_seconds < 0 || grace_seconds >= interval_seconds)
        throw ConfigError("grace_seconds must be in [0, interval_seconds)");
    if (addresses_per_interval == 0)
        throw ConfigError("addresses_per_interval must be positive");
}

static u128 derive_value(const crypto::Aes128& aes, int suffix_bits, uint64_t index, uint64_t interval) {
    Block16 block;
    store_be64(block.data(), index);
    store_be64(block.data() + 8, interval);
    Block16 ct = aes.encrypt(block);
    auto digest = crypto::sha256(ct);
    u128 head = 0;
    for (int i = 0; i < 16; ++i) head = (head << 8) | digest[static_cast<size_t>(i)];
    return head >> (128 - suffix_bits);
}

AddressSuffix derive_suffix(const HopConfig& cfg, uint64_t index, uint64_t interval) {
    cfg.validate();
    crypto::Aes128 aes(cfg.master_key);
    return AddressSuffix{derive_value(aes, cfg.suffix_bits(), index, interval), index, interval};
}

std::vector<AddressSuffix> active_set(const HopConfig& cfg, uint64_t interval) {
    cfg.validate();
    crypto::Aes128 aes(cfg.master_key);
    std::vector<AddressSuffix> out;
    out.reserve(cfg.addresses_per_interval);
    std::unordered_set<u128, U128Hash> seen;
    for (uint64_t i = 0; i < cfg.addresses_per_interval; ++i) {
        u128 v = derive_value(aes, cfg.suffix_bits(), i, interval);
        if (seen.insert(v).second) out.push_back(AddressSuffix{v, i, interval});
    }
    return out;
}

ActiveSetView active_view(const HopConfig& cfg, uint64_t interval) {
    ActiveSetView view;
    view.interval = interval;
    for (const auto& s : active_set(cfg, interval)) view.values.insert(s.value);
    return view;
}

uint64_t interval_of(const HopConfig& cfg, double now_seconds) {
    if (now_seconds < 0) throw ConfigError("now_seconds must be nonnegative");
    return static_cast<uint64_t>(now_seconds / cfg.interval_seconds);
}

bool is_active(const HopConfig& cfg, u128 suffix_value, double now_seconds) {
    cfg.validate();
    uint64_t t_now = interval_of(cfg, now_seconds);
    ActiveSetView cur = active_view(cfg, t_now);
    if (cur.values.count(suffix_value)) return true;
    double into_interval = now_seconds - static_cast<double>(t_now) * cfg.interval_seconds;
    if (t_now > 0 && into_interval < cfg.grace_seconds) {
        ActiveSetView prev = active_view(cfg, t_now - 1);
        return prev.values.count(suffix_value) != 0;
    }
    return false;
}

bool is_active(const HopConfig& cfg, const AddressSuffix& s, double now_seconds) {
    return is_active(cfg, s.value, now_seconds);
}

AddressTree build_adaptive_tree(const HopConfig& cfg, int depth, uint64_t interval) {
    cfg.validate();
    if (depth < 0) throw ConfigError("depth must be nonnegative");
    uint64_t node_count = (static_cast<uint64_t>(1) << (depth + 1)) - 1;
    if (depth > 19 || node_count > (1u << 20))
        throw DepthTooLarge("address tree would exceed 2^20 nodes");

    crypto::Aes128 aes(cfg.master_key);
    AddressTree tree;
    tree.depth = depth;
    tree.nodes.reserve(node_count);
    std::unordered_set<u128, U128Hash> seen;
    for (int level = 0; level <= depth; ++level) {
        uint64_t width = static_cast<uint64_t>(1) << level;
        for (uint64_t pos = 0; pos < width; ++pos) {
            uint64_t tree_index = width - 1 + pos;
            uint64_t use_index = tree_index;
            u128 v = derive_value(aes, cfg.suffix_bits(), use_index, interval);
            // Collision: re-derive with a salt counter folded into the high
            // half of the index (structural tree indices stay below 2^20).
            for (uint64_t salt = 1; !seen.insert(v).second; ++salt) {
                use_index = tree_index + (salt << 32);
                v = derive_value(aes, cfg.suffix_bits(), use_index, interval);
            }
            tree.nodes.push_back(TreeNode{level, pos, tree_index,
                                          AddressSuffix{v, use_index, interval},
                                          static_cast<uint64_t>(1) << level});
        }
    }
    return tree;
}

}  // namespace mirage::hop
