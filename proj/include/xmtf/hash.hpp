#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace xmtf {

// Incremental 64-bit FNV-1a. Used for stream checksums and seed derivation;
// stable across platforms.
class Fnv1a64 {
 public:
  Fnv1a64& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= kPrime;
    }
    return *this;
  }

  Fnv1a64& update_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
    return *this;
  }

  std::uint64_t digest() const { return state_; }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  return Fnv1a64().update(bytes).digest();
}

}  // namespace xmtf
