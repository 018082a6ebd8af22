#include "mirage/crypto.hpp"

#include <cstring>

namespace mirage::crypto {

namespace {

const uint8_t kSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16};

uint8_t kInvSbox[256];
bool inv_sbox_ready = false;

void init_inv_sbox() {
    if (inv_sbox_ready) return;
    for (int i = 0; i < 256; ++i) kInvSbox[kSbox[i]] = static_cast<uint8_t>(i);
    inv_sbox_ready = true;
}

inline uint8_t xtime(uint8_t x) {
    return static_cast<uint8_t>((x << 1) ^ ((x >> 7) * 0x1b));
}

inline uint8_t gmul(uint8_t a, uint8_t b) {
    uint8_t p = 0;
    for (int i = 0; i < 8; ++i) {
        if (b & 1) p ^= a;
        a = xtime(a);
        b >>= 1;
    }
    return p;
}

inline uint32_t rot_word(uint32_t w) { return (w << 8) | (w >> 24); }

inline uint32_t sub_word(uint32_t w) {
    return (static_cast<uint32_t>(kSbox[(w >> 24) & 0xff]) << 24) |
           (static_cast<uint32_t>(kSbox[(w >> 16) & 0xff]) << 16) |
           (static_cast<uint32_t>(kSbox[(w >> 8) & 0xff]) << 8) |
           static_cast<uint32_t>(kSbox[w & 0xff]);
}

const uint32_t kRcon[10] = {0x01000000, 0x02000000, 0x04000000, 0x08000000, 0x10000000,
                            0x20000000, 0x40000000, 0x80000000, 0x1b000000, 0x36000000};

void add_round_key(uint8_t st[16], const uint32_t* rk) {
    for (int c = 0; c < 4; ++c) {
        uint32_t w = rk[c];
        st[4 * c + 0] ^= static_cast<uint8_t>(w >> 24);
        st[4 * c + 1] ^= static_cast<uint8_t>(w >> 16);
        st[4 * c + 2] ^= static_cast<uint8_t>(w >> 8);
        st[4 * c + 3] ^= static_cast<uint8_t>(w);
    }
}

void sub_bytes(uint8_t st[16]) {
    for (int i = 0; i < 16; ++i) st[i] = kSbox[st[i]];
}

void inv_sub_bytes(uint8_t st[16]) {
    for (int i = 0; i < 16; ++i) st[i] = kInvSbox[st[i]];
}

// State is column-major: st[4*c + r] is row r, column c.
void shift_rows(uint8_t st[16]) {
    uint8_t t;
    t = st[1]; st[1] = st[5]; st[5] = st[9]; st[9] = st[13]; st[13] = t;
    std::swap(st[2], st[10]);
    std::swap(st[6], st[14]);
    t = st[15]; st[15] = st[11]; st[11] = st[7]; st[7] = st[3]; st[3] = t;
}

void inv_shift_rows(uint8_t st[16]) {
    uint8_t t;
    t = st[13]; st[13] = st[9]; st[9] = st[5]; st[5] = st[1]; st[1] = t;
    std::swap(st[2], st[10]);
    std::swap(st[6], st[14]);
    t = st[3]; st[3] = st[7]; st[7] = st[11]; st[11] = st[15]; st[15] = t;
}

void mix_columns(uint8_t st[16]) {
    for (int c = 0; c < 4; ++c) {
        uint8_t* s = st + 4 * c;
        uint8_t a0 = s[0], a1 = s[1], a2 = s[2], a3 = s[3];
        s[0] = static_cast<uint8_t>(xtime(a0) ^ (xtime(a1) ^ a1) ^ a2 ^ a3);
        s[1] = static_cast<uint8_t>(a0 ^ xtime(a1) ^ (xtime(a2) ^ a2) ^ a3);
        s[2] = static_cast<uint8_t>(a0 ^ a1 ^ xtime(a2) ^ (xtime(a3) ^ a3));
        s[3] = static_cast<uint8_t>((xtime(a0) ^ a0) ^ a1 ^ a2 ^ xtime(a3));
    }
}

void inv_mix_columns(uint8_t st[16]) {
    for (int c = 0; c < 4; ++c) {
        uint8_t* s = st + 4 * c;
        uint8_t a0 = s[0], a1 = s[1], a2 = s[2], a3 = s[3];
        s[0] = static_cast<uint8_t>(gmul(a0, 14) ^ gmul(a1, 11) ^ gmul(a2, 13) ^ gmul(a3, 9));
        s[1] = static_cast<uint8_t>(gmul(a0, 9) ^ gmul(a1, 14) ^ gmul(a2, 11) ^ gmul(a3, 13));
        s[2] = static_cast<uint8_t>(gmul(a0, 13) ^ gmul(a1, 9) ^ gmul(a2, 14) ^ gmul(a3, 11));
        s[3] = static_cast<uint8_t>(gmul(a0, 11) ^ gmul(a1, 13) ^ gmul(a2, 9) ^ gmul(a3, 14));
    }
}

}  // namespace

Aes128::Aes128(const Block16& key) {
    init_inv_sbox();
    for (int i = 0; i < 4; ++i) {
        round_keys_[static_cast<size_t>(i)] =
            (static_cast<uint32_t>(key[4 * i]) << 24) | (static_cast<uint32_t>(key[4 * i + 1]) << 16) |
            (static_cast<uint32_t>(key[4 * i + 2]) << 8) | static_cast<uint32_t>(key[4 * i + 3]);
    }
    for (int i = 4; i < 44; ++i) {
        uint32_t t = round_keys_[static_cast<size_t>(i - 1)];
        if (i % 4 == 0) t = sub_word(rot_word(t)) ^ kRcon[i / 4 - 1];
        round_keys_[static_cast<size_t>(i)] = round_keys_[static_cast<size_t>(i - 4)] ^ t;
    }
}

Block16 Aes128::encrypt(const Block16& plaintext) const {
    uint8_t st[16];
    std::memcpy(st, plaintext.data(), 16);
    add_round_key(st, round_keys_.data());
    for (int round = 1; round <= 9; ++round) {
        sub_bytes(st);
        shift_rows(st);
        mix_columns(st);
        add_round_key(st, round_keys_.data() + 4 * round);
    }
    sub_bytes(st);
    shift_rows(st);
    add_round_key(st, round_keys_.data() + 40);
    Block16 out;
    std::memcpy(out.data(), st, 16);
    return out;
}

Block16 Aes128::decrypt(const Block16& ciphertext) const {
    uint8_t st[16];
    std::memcpy(st, ciphertext.data(), 16);
    add_round_key(st, round_keys_.data() + 40);
    for (int round = 9; round >= 1; --round) {
        inv_shift_rows(st);
        inv_sub_bytes(st);
        add_round_key(st, round_keys_.data() + 4 * round);
        inv_mix_columns(st);
    }
    inv_shift_rows(st);
    inv_sub_bytes(st);
    add_round_key(st, round_keys_.data());
    Block16 out;
    std::memcpy(out.data(), st, 16);
    return out;
}

namespace {

const uint32_t kShaK[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

inline uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::array<uint8_t, 32> sha256(const uint8_t* data, size_t len) {
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

    // Padded message: data || 0x80 || zeros || 64-bit bit length.
    size_t total = len + 1 + 8;
    size_t padded = (total + 63) / 64 * 64;
    uint8_t block[64];
    uint64_t bitlen = static_cast<uint64_t>(len) * 8;

    for (size_t off = 0; off < padded; off += 64) {
        for (size_t i = 0; i < 64; ++i) {
            size_t idx = off + i;
            uint8_t b = 0;
            if (idx < len) b = data[idx];
            else if (idx == len) b = 0x80;
            else if (idx >= padded - 8) b = static_cast<uint8_t>(bitlen >> (8 * (padded - 1 - idx)));
            block[i] = b;
        }
        uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (static_cast<uint32_t>(block[4 * i]) << 24) | (static_cast<uint32_t>(block[4 * i + 1]) << 16) |
                   (static_cast<uint32_t>(block[4 * i + 2]) << 8) | static_cast<uint32_t>(block[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + s1 + ch + kShaK[i] + w[i];
            uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    std::array<uint8_t, 32> out;
    for (int i = 0; i < 8; ++i) {
        out[static_cast<size_t>(4 * i)] = static_cast<uint8_t>(h[i] >> 24);
        out[static_cast<size_t>(4 * i + 1)] = static_cast<uint8_t>(h[i] >> 16);
        out[static_cast<size_t>(4 * i + 2)] = static_cast<uint8_t>(h[i] >> 8);
        out[static_cast<size_t>(4 * i + 3)] = static_cast<uint8_t>(h[i]);
    }
    return out;
}

std::array<uint8_t, 32> sha256(const Block16& block) { return sha256(block.data(), block.size()); }

}  // namespace mirage::crypto
