#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace mirage {

using u128 = unsigned __int128;
using Block16 = std::array<uint8_t, 16>;

inline void store_be64(uint8_t* p, uint64_t v) {
    for (int i = 7; i >= 0; --i) {
        p[i] = static_cast<uint8_t>(v & 0xff);
        v >>= 8;
    }
}

inline uint64_t load_be64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

// Big-endian 128-bit value packed into one cipher block.
inline Block16 block_from_u128(u128 v) {
    Block16 b{};
    for (int i = 15; i >= 0; --i) {
        b[static_cast<size_t>(i)] = static_cast<uint8_t>(v & 0xff);
        v >>= 8;
    }
    return b;
}

inline u128 u128_from_block(const Block16& b) {
    u128 v = 0;
    for (uint8_t byte : b) v = (v << 8) | byte;
    return v;
}

inline u128 u128_mask(int bits) {
    if (bits <= 0) return 0;
    if (bits >= 128) return ~static_cast<u128>(0);
    return (static_cast<u128>(1) << bits) - 1;
}

std::string to_hex(const uint8_t* p, size_t n);
std::string to_hex(const Block16& b);

// Fixed width: one nibble per 4 bits, rounded up.
std::string suffix_to_hex(u128 value, int bits);

// Accepts 1..32 hex nibbles, optional 0x prefix. Returns false on bad input.
bool parse_hex_u128(std::string_view s, u128& out);
bool parse_hex_block(std::string_view s, Block16& out);

struct U128Hash {
    size_t operator()(u128 v) const noexcept {
        uint64_t lo = static_cast<uint64_t>(v);
        uint64_t hi = static_cast<uint64_t>(v >> 64);
        uint64_t x = lo ^ (hi * 0x9e3779b97f4a7c15ULL);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return static_cast<size_t>(x);
    }
};

}  // namespace mirage
