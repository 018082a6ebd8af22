#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "mirage/bytes.hpp"

namespace mirage::crypto {

// Single-block AES-128. Round keys are expanded once at construction so the
// per-block cost is just the 10 rounds; puzzle solving runs the decrypt path
// in a tight loop.
class Aes128 {
  public:
    explicit Aes128(const Block16& key);

    Block16 encrypt(const Block16& plaintext) const;
    Block16 decrypt(const Block16& ciphertext) const;

  private:
    std::array<uint32_t, 44> round_keys_;
};

std::array<uint8_t, 32> sha256(const uint8_t* data, size_t len);
std::array<uint8_t, 32> sha256(const Block16& block);

}  // namespace mirage::crypto
