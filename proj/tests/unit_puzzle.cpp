#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "mirage/puzzle.hpp"

using namespace mirage;
using puzzle::AllocatorState;
using puzzle::PendingSolution;

namespace {

hop::HopConfig test_cfg(int prefix_bits = 64) {
    hop::HopConfig cfg;
    for (int i = 0; i < 16; ++i) cfg.master_key[static_cast<size_t>(i)] = static_cast<uint8_t>(i);
    cfg.prefix_bits = prefix_bits;
    return cfg;
}

}  // namespace

TEST_CASE("solving a fresh puzzle recovers the scheduled suffix") {
    auto cfg = test_cfg();
    for (int d : {0, 1, 4, 8}) {
        auto made = puzzle::make_puzzle(cfg, 3, 7, d, 42);
        CHECK(made.puzzle.prefix_bits == 64);
        CHECK(made.puzzle.check_bits == 64);
        CHECK(made.puzzle.difficulty == d);
        CHECK(made.oracle.suffix_value == hop::derive_suffix(cfg, 3, 7).value);

        auto sol = puzzle::solve_puzzle(made.puzzle);
        REQUIRE(sol.has_value());
        CHECK(sol->suffix_value == made.oracle.suffix_value);
        CHECK(sol->index == 3);
        CHECK(sol->interval == 7);
        CHECK(sol->attempts >= 1);
        CHECK(sol->attempts <= (1ULL << d));
        CHECK(puzzle::verify_claim(made.oracle, sol->suffix_value));
        CHECK_FALSE(puzzle::verify_claim(made.oracle, sol->suffix_value ^ 1));
    }
}

TEST_CASE("attempts equal the low difficulty bits of the dropped key plus one") {
    auto cfg = test_cfg();
    for (uint64_t seed = 0; seed < 30; ++seed) {
        auto made = puzzle::make_puzzle(cfg, seed, 1, 10, seed);
        uint64_t key_low = load_be64(made.oracle.key.data() + 8) & ((1ULL << 10) - 1);
        auto sol = puzzle::solve_puzzle(made.puzzle);
        REQUIRE(sol.has_value());
        CHECK(sol->attempts == key_low + 1);
    }
}

TEST_CASE("difficulty zero solves on the first decryption") {
    auto made = puzzle::make_puzzle(test_cfg(), 0, 0, 0, 1);
    CHECK(made.puzzle.partial_key == made.oracle.key);
    auto sol = puzzle::solve_puzzle(made.puzzle);
    REQUIRE(sol.has_value());
    CHECK(sol->attempts == 1);
}

TEST_CASE("puzzles work across suffix widths") {
    for (int prefix_bits : {8, 32, 64}) {
        auto cfg = test_cfg(prefix_bits);
        auto made = puzzle::make_puzzle(cfg, 1, 2, 5, 9);
        CHECK(made.puzzle.suffix_bits() == 128 - prefix_bits);
        CHECK(made.puzzle.check_value <= u128_mask(made.puzzle.check_bits));
        auto sol = puzzle::solve_puzzle(made.puzzle);
        REQUIRE(sol.has_value());
        CHECK(sol->suffix_value == made.oracle.suffix_value);
    }
}

TEST_CASE("corrupted ciphers solve to nothing") {
    auto cfg = test_cfg();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto made = puzzle::make_puzzle(cfg, static_cast<uint64_t>(trial), 2, 4, rng());
        puzzle::Puzzle broken = made.puzzle;
        broken.cipher[rng() % 16] ^= static_cast<uint8_t>(1u << (rng() % 8));
        auto sol = puzzle::solve_puzzle(broken);
        CHECK_FALSE(sol.has_value());
    }
}

TEST_CASE("puzzle generation is reproducible and seed-sensitive") {
    auto cfg = test_cfg();
    auto a = puzzle::make_puzzle(cfg, 1, 1, 6, 1000);
    auto b = puzzle::make_puzzle(cfg, 1, 1, 6, 1000);
    auto c = puzzle::make_puzzle(cfg, 1, 1, 6, 1001);
    CHECK(a.puzzle == b.puzzle);
    CHECK(a.oracle.key == b.oracle.key);
    CHECK_FALSE(a.puzzle == c.puzzle);
}

TEST_CASE("difficulty bounds are enforced") {
    auto cfg = test_cfg();
    CHECK_THROWS_AS(puzzle::make_puzzle(cfg, 0, 0, 31, 1), puzzle::DifficultyOutOfRange);
    CHECK_THROWS_AS(puzzle::make_puzzle(cfg, 0, 0, -1, 1), puzzle::DifficultyOutOfRange);
    CHECK_NOTHROW(puzzle::make_puzzle(cfg, 0, 0, puzzle::kMaxDifficulty, 1));
}

TEST_CASE("wire layout is the canonical 59 bytes") {
    auto made = puzzle::make_puzzle(test_cfg(), 0x0102030405060708ULL, 0x1112131415161718ULL, 9, 77);
    auto bytes = puzzle::to_bytes(made.puzzle);
    REQUIRE(bytes.size() == puzzle::kPuzzleWireBytes);
    CHECK(bytes[0] == 64);  // P
    CHECK(bytes[1] == 64);  // r
    CHECK(bytes[2] == 9);   // d
    CHECK(load_be64(bytes.data() + 3) == static_cast<uint64_t>(made.puzzle.check_value));
    CHECK(std::equal(made.puzzle.cipher.begin(), made.puzzle.cipher.end(), bytes.begin() + 11));
    CHECK(std::equal(made.puzzle.partial_key.begin(), made.puzzle.partial_key.end(),
                     bytes.begin() + 27));
    CHECK(load_be64(bytes.data() + 43) == 0x0102030405060708ULL);
    CHECK(load_be64(bytes.data() + 51) == 0x1112131415161718ULL);

    auto round = puzzle::from_bytes(bytes);
    CHECK(round == made.puzzle);
    auto sol = puzzle::solve_puzzle(round);
    REQUIRE(sol.has_value());
    CHECK(sol->suffix_value == made.oracle.suffix_value);
}

TEST_CASE("check values wider than 64 bits have no wire form") {
    // prefix_bits 100 makes the check part 100 bits; the record reserves 8 bytes.
    auto made = puzzle::make_puzzle(test_cfg(100), 0, 0, 3, 1);
    CHECK(made.puzzle.check_bits == 100);
    CHECK_THROWS_AS(puzzle::to_bytes(made.puzzle), puzzle::SerializeError);
}

TEST_CASE("malformed wire records are rejected") {
    auto made = puzzle::make_puzzle(test_cfg(), 1, 1, 3, 1);
    auto good = puzzle::to_bytes(made.puzzle);

    auto truncated = good;
    truncated.pop_back();
    CHECK_THROWS_AS(puzzle::from_bytes(truncated), puzzle::SerializeError);

    auto bad_prefix = good;
    bad_prefix[0] = 4;
    CHECK_THROWS_AS(puzzle::from_bytes(bad_prefix), puzzle::SerializeError);

    auto bad_check = good;
    bad_check[1] = 65;
    CHECK_THROWS_AS(puzzle::from_bytes(bad_check), puzzle::SerializeError);
    bad_check[1] = 0;
    CHECK_THROWS_AS(puzzle::from_bytes(bad_check), puzzle::SerializeError);

    auto bad_difficulty = good;
    bad_difficulty[2] = 31;
    CHECK_THROWS_AS(puzzle::from_bytes(bad_difficulty), puzzle::SerializeError);
}

TEST_CASE("allocator grants the scarce slot to the highest difficulty") {
    AllocatorState st;
    st.cfg.release_rate = 1.0;
    st.cfg.bucket_capacity = 10.0;

    std::vector<PendingSolution> batch = {
        {1, 8, 1.0, 111, true},
        {2, 8, 1.0, 222, true},
        {3, 10, 1.0, 333, true},
    };
    auto step = puzzle::allocator_step(st, 1.0, batch);  // one accrued token

    REQUIRE(step.grants.size() == 1);
    CHECK(step.grants[0].requester == 3);
    CHECK(step.grants[0].suffix_value == 333);

    REQUIRE(step.escalations.size() == 2);
    CHECK(step.escalations[0].requester == 1);  // equal arrival, lower id first
    CHECK(step.escalations[0].new_difficulty == 9);
    CHECK(step.escalations[1].requester == 2);
    CHECK(step.escalations[1].new_difficulty == 9);

    CHECK(st.pending.empty());  // everything cleared each step
    CHECK(st.grants_total == 1);
    CHECK(st.escalations_total == 2);
}

TEST_CASE("allocator grants everything when tokens cover the batch") {
    AllocatorState st;
    st.cfg.release_rate = 1.0;
    st.cfg.bucket_capacity = 10.0;
    std::vector<PendingSolution> batch = {
        {7, 2, 3.0, 1, true},
        {8, 5, 3.0, 2, true},
        {9, 3, 3.0, 3, true},
    };
    auto step = puzzle::allocator_step(st, 3.0, batch);
    REQUIRE(step.grants.size() == 3);
    CHECK(step.escalations.empty());
    CHECK(step.grants[0].requester == 8);  // served in difficulty order
    CHECK(step.grants[1].requester == 9);
    CHECK(step.grants[2].requester == 7);
}

TEST_CASE("allocator ties break by arrival then requester id") {
    AllocatorState st;
    st.cfg.release_rate = 1.0;
    st.cfg.bucket_capacity = 1.0;
    std::vector<PendingSolution> batch = {
        {5, 6, 2.0, 0, true},
        {4, 6, 1.5, 0, true},  // earlier arrival wins the slot
    };
    auto step = puzzle::allocator_step(st, 2.0, batch);
    REQUIRE(step.grants.size() == 1);
    CHECK(step.grants[0].requester == 4);
    REQUIRE(step.escalations.size() == 1);
    CHECK(step.escalations[0].requester == 5);
}

TEST_CASE("allocator tokens accrue while idle and cap at the bucket") {
    AllocatorState st;
    st.cfg.release_rate = 2.0;
    st.cfg.bucket_capacity = 3.0;

    auto idle = puzzle::allocator_step(st, 100.0, {});
    CHECK(idle.grants.empty());
    CHECK(st.tokens == 3.0);  // capped well below 200 accrued

    std::vector<PendingSolution> batch = {
        {1, 4, 100.0, 0, true}, {2, 4, 100.0, 0, true},
        {3, 4, 100.0, 0, true}, {4, 4, 100.0, 0, true},
    };
    auto step = puzzle::allocator_step(st, 100.0, batch);
    CHECK(step.grants.size() == 3);
    CHECK(step.escalations.size() == 1);
    CHECK(st.tokens < 1.0);
}

TEST_CASE("fractional tokens grant nothing") {
    AllocatorState st;
    st.cfg.release_rate = 1.0;
    st.cfg.bucket_capacity = 10.0;
    auto step = puzzle::allocator_step(st, 0.5, {{1, 3, 0.5, 0, true}});
    CHECK(step.grants.empty());
    REQUIRE(step.escalations.size() == 1);
    CHECK(step.escalations[0].new_difficulty == 4);
}

TEST_CASE("invalid solutions are dropped on entry") {
    AllocatorState st;
    st.cfg.release_rate = 1.0;
    st.cfg.bucket_capacity = 10.0;
    std::vector<PendingSolution> batch = {
        {1, 9, 5.0, 0, false},
        {2, 3, 5.0, 0, true},
    };
    auto step = puzzle::allocator_step(st, 5.0, batch);
    REQUIRE(step.grants.size() == 1);
    CHECK(step.grants[0].requester == 2);
    CHECK(step.escalations.empty());  // the invalid one vanished, not escalated
}

TEST_CASE("escalation saturates at the difficulty ceiling") {
    AllocatorState st;
    st.cfg.release_rate = 0.0;
    st.cfg.bucket_capacity = 1.0;
    st.cfg.max_difficulty = 30;
    auto step = puzzle::allocator_step(st, 1.0, {{1, 30, 1.0, 0, true}});
    REQUIRE(step.escalations.size() == 1);
    CHECK(step.escalations[0].new_difficulty == 30);
}

TEST_CASE("allocator refuses time running backwards") {
    AllocatorState st;
    puzzle::allocator_step(st, 5.0, {});
    CHECK_THROWS_AS(puzzle::allocator_step(st, 4.0, {}), std::invalid_argument);
}
