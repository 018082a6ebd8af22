#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mirage/bytes.hpp"
#include "mirage/hop.hpp"

namespace mirage::puzzle {

struct DifficultyOutOfRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SerializeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kMaxDifficulty = 30;

// A solvable address puzzle. The issuer encrypts (check_value || suffix) with
// a throwaway key and hands out everything except the low `difficulty` key
// bits; recovering those bits by brute force reveals the suffix. check_bits +
// suffix_bits == 128, so the plaintext is exactly one cipher block.
struct Puzzle {
    uint8_t prefix_bits = 64;   // P
    uint8_t check_bits = 64;    // r
    uint8_t difficulty = 0;     // d, missing low key bits
    u128 check_value = 0;       // R, check_bits wide
    Block16 cipher{};           // ENC_key(R || suffix)
    Block16 partial_key{};      // key with the low d bits cleared
    uint64_t index = 0;         // i
    uint64_t interval = 0;      // T

    int suffix_bits() const { return 128 - prefix_bits; }
    bool operator==(const Puzzle& o) const;
};

// Issuer-side material, never shipped to puzzle servers.
struct PuzzleOracle {
    Block16 key{};
    u128 suffix_value = 0;
};

struct MadePuzzle {
    Puzzle puzzle;
    PuzzleOracle oracle;
};

// Deterministic for a fixed (cfg, index, interval, difficulty, rng_seed).
MadePuzzle make_puzzle(const hop::HopConfig& cfg, uint64_t index, uint64_t interval,
                       int difficulty, uint64_t rng_seed);

struct PuzzleSolution {
    u128 suffix_value = 0;
    uint64_t attempts = 0;  // decryptions performed
    uint64_t index = 0;
    uint64_t interval = 0;
};

// Brute force over the 2^d missing key bits, ascending from zero. Empty when
// no candidate key reproduces the check value (corrupted puzzle).
std::optional<PuzzleSolution> solve_puzzle(const Puzzle& pz);

bool verify_claim(const PuzzleOracle& oracle, u128 claimed_suffix);

// Canonical big-endian layout:
//   P(1) | r(1) | d(1) | R(8) | cipher(16) | partial_key(16) | i(8) | T(8)
constexpr size_t kPuzzleWireBytes = 59;
std::vector<uint8_t> to_bytes(const Puzzle& pz);
Puzzle from_bytes(const uint8_t* data, size_t len);
Puzzle from_bytes(const std::vector<uint8_t>& data);

// ============================================================================
// Difficulty auction: a leaky bucket of address slots granted to the highest
// bidders; losers get their difficulty bumped and try again.
// ============================================================================

struct PendingSolution {
    uint64_t requester = 0;
    int difficulty = 0;
    double arrival = 0;     // seconds
    u128 suffix_value = 0;
    bool valid = true;
};

struct AllocatorConfig {
    double release_rate = 1.0;      // address slots per second
    double bucket_capacity = 10.0;  // max stored slots
    int max_difficulty = kMaxDifficulty;
};

struct AllocatorState {
    AllocatorConfig cfg;
    double tokens = 0;
    double last_time = 0;
    std::vector<PendingSolution> pending;
    uint64_t grants_total = 0;
    uint64_t escalations_total = 0;
};

struct SlotGrant {
    uint64_t requester = 0;
    u128 suffix_value = 0;
};

struct Escalation {
    uint64_t requester = 0;
    int new_difficulty = 0;
};

struct AllocatorStep {
    std::vector<SlotGrant> grants;
    std::vector<Escalation> escalations;
};

// Accrues tokens for the elapsed time, grants whole tokens to the
// highest-difficulty pending solutions (ties: earliest arrival, then lowest
// requester id), then escalates and clears everything left over. Invalid
// solutions are discarded on entry.
AllocatorStep allocator_step(AllocatorState& st, double now,
                             const std::vector<PendingSolution>& new_solutions);

}  // namespace mirage::puzzle
