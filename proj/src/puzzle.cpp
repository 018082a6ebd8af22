#include "mirage/puzzle.hpp"

#include <algorithm>
#include <random>

#include "mirage/crypto.hpp"

namespace mirage::puzzle {

bool Puzzle::operator==(const Puzzle& o) const {
    return prefix_bits == o.prefix_bits && check_bits == o.check_bits && difficulty == o.difficulty &&
           check_value == o.check_value && cipher == o.cipher && partial_key == o.partial_key &&
           index == o.index && interval == o.interval;
}

MadePuzzle make_puzzle(const hop::HopConfig& cfg, uint64_t index, uint64_t interval,
                       int difficulty, uint64_t rng_seed) {
    cfg.validate();
    if (difficulty < 0 || difficulty > kMaxDifficulty)
        throw DifficultyOutOfRange("difficulty must be in [0, 30]");

    int suffix_bits = cfg.suffix_bits();
    int check_bits = 128 - suffix_bits;  // == prefix_bits; plaintext fills one block

    hop::AddressSuffix s = derive_suffix(cfg, index, interval);

    // Raw engine words keep the draw reproducible across standard libraries.
    std::mt19937_64 rng(rng_seed);
    Block16 key;
    store_be64(key.data(), rng());
    store_be64(key.data() + 8, rng());
    u128 check = rng();
    if (check_bits > 64) check = (check << 64) | rng();
    check &= u128_mask(check_bits);

    u128 plaintext = (check << suffix_bits) | s.value;
    crypto::Aes128 aes(key);
    Block16 cipher = aes.encrypt(block_from_u128(plaintext));

    Block16 partial = key;
    // Clear the low `difficulty` bits of the 128-bit key value.
    for (int bit = 0; bit < difficulty; ++bit)
        partial[15 - static_cast<size_t>(bit / 8)] &= static_cast<uint8_t>(~(1u << (bit % 8)));

    MadePuzzle out;
    out.puzzle = Puzzle{static_cast<uint8_t>(cfg.prefix_bits),
                        static_cast<uint8_t>(check_bits),
                        static_cast<uint8_t>(difficulty),
                        check,
                        cipher,
                        partial,
                        index,
                        interval};
    out.oracle = PuzzleOracle{key, s.value};
    return out;
}

std::optional<PuzzleSolution> solve_puzzle(const Puzzle& pz) {
    if (pz.difficulty > kMaxDifficulty) throw DifficultyOutOfRange("difficulty must be in [0, 30]");
    int suffix_bits = pz.suffix_bits();
    u128 want_check = pz.check_value & u128_mask(pz.check_bits);

    uint64_t space = static_cast<uint64_t>(1) << pz.difficulty;
    Block16 key = pz.partial_key;
    for (uint64_t candidate = 0; candidate < space; ++candidate) {
        // Overlay the candidate low bits onto the partial key.
        uint64_t low = load_be64(pz.partial_key.data() + 8);
        low |= candidate;  // partial key has these bits cleared
        store_be64(key.data() + 8, low);

        crypto::Aes128 aes(key);
        u128 plain = u128_from_block(aes.decrypt(pz.cipher));
        if ((plain >> suffix_bits) == want_check) {
            return PuzzleSolution{plain & u128_mask(suffix_bits), candidate + 1, pz.index, pz.interval};
        }
    }
    return std::nullopt;
}

bool verify_claim(const PuzzleOracle& oracle, u128 claimed_suffix) {
    return oracle.suffix_value == claimed_suffix;
}

std::vector<uint8_t> to_bytes(const Puzzle& pz) {
    if (pz.check_bits > 64)
        throw SerializeError("check value wider than 64 bits has no wire form");
    std::vector<uint8_t> out(kPuzzleWireBytes);
    out[0] = pz.prefix_bits;
    out[1] = pz.check_bits;
    out[2] = pz.difficulty;
    store_be64(out.data() + 3, static_cast<uint64_t>(pz.check_value));
    std::copy(pz.cipher.begin(), pz.cipher.end(), out.begin() + 11);
    std::copy(pz.partial_key.begin(), pz.partial_key.end(), out.begin() + 27);
    store_be64(out.data() + 43, pz.index);
    store_be64(out.data() + 51, pz.interval);
    return out;
}

Puzzle from_bytes(const uint8_t* data, size_t len) {
    if (len != kPuzzleWireBytes) throw SerializeError("puzzle record must be 59 bytes");
    Puzzle pz;
    pz.prefix_bits = data[0];
    pz.check_bits = data[1];
    pz.difficulty = data[2];
    if (pz.prefix_bits < 8 || pz.prefix_bits > 120) throw SerializeError("bad prefix_bits");
    if (pz.check_bits == 0 || pz.check_bits > 64) throw SerializeError("bad check_bits");
    if (pz.difficulty > kMaxDifficulty) throw SerializeError("bad difficulty");
    pz.check_value = load_be64(data + 3);
    std::copy(data + 11, data + 27, pz.cipher.begin());
    std::copy(data + 27, data + 43, pz.partial_key.begin());
    pz.index = load_be64(data + 43);
    pz.interval = load_be64(data + 51);
    return pz;
}

Puzzle from_bytes(const std::vector<uint8_t>& data) { return from_bytes(data.data(), data.size()); }

AllocatorStep allocator_step(AllocatorState& st, double now,
                             const std::vector<PendingSolution>& new_solutions) {
    if (now < st.last_time) throw std::invalid_argument("allocator time went backwards");

    st.tokens = std::min(st.cfg.bucket_capacity, st.tokens + st.cfg.release_rate * (now - st.last_time));
    st.last_time = now;

    for (const auto& sol : new_solutions)
        if (sol.valid) st.pending.push_back(sol);

    std::stable_sort(st.pending.begin(), st.pending.end(),
                     [](const PendingSolution& a, const PendingSolution& b) {
                         if (a.difficulty != b.difficulty) return a.difficulty > b.difficulty;
                         if (a.arrival != b.arrival) return a.arrival < b.arrival;
                         return a.requester < b.requester;
                     });

    AllocatorStep out;
    size_t i = 0;
    while (st.tokens >= 1.0 && i < st.pending.size()) {
        out.grants.push_back(SlotGrant{st.pending[i].requester, st.pending[i].suffix_value});
        st.tokens -= 1.0;
        ++i;
    }
    for (; i < st.pending.size(); ++i) {
        int next_d = std::min(st.pending[i].difficulty + 1, st.cfg.max_difficulty);
        out.escalations.push_back(Escalation{st.pending[i].requester, next_d});
    }
    st.grants_total += out.grants.size();
    st.escalations_total += out.escalations.size();
    st.pending.clear();
    return out;
}

}  // namespace mirage::puzzle
