#include "mirage/bytes.hpp"

namespace mirage {

static const char* kHexDigits = "0123456789abcdef";

std::string to_hex(const uint8_t* p, size_t n) {
    std::string out;
    out.reserve(n * 2);
    for (size_t i = 0; i < n; ++i) {
        out.push_back(kHexDigits[p[i] >> 4]);
        out.push_back(kHexDigits[p[i] & 0x0f]);
    }
    return out;
}

std::string to_hex(const Block16& b) { return to_hex(b.data(), b.size()); }

std::string suffix_to_hex(u128 value, int bits) {
    int nibbles = (bits + 3) / 4;
    if (nibbles < 1) nibbles = 1;
    std::string out(static_cast<size_t>(nibbles), '0');
    for (int i = nibbles - 1; i >= 0; --i) {
        out[static_cast<size_t>(i)] = kHexDigits[static_cast<unsigned>(value & 0x0f)];
        value >>= 4;
    }
    return out;
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool parse_hex_u128(std::string_view s, u128& out) {
    if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
    if (s.empty() || s.size() > 32) return false;
    u128 v = 0;
    for (char c : s) {
        int d = hex_val(c);
        if (d < 0) return false;
        v = (v << 4) | static_cast<unsigned>(d);
    }
    out = v;
    return true;
}

bool parse_hex_block(std::string_view s, Block16& out) {
    if (s.size() != 32) return false;
    for (size_t i = 0; i < 16; ++i) {
        int hi = hex_val(s[2 * i]);
        int lo = hex_val(s[2 * i + 1]);
        if (hi < 0 || lo < 0) return false;
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return true;
}

}  // namespace mirage
