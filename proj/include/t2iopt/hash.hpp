#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace t2iopt {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic per-call seed: a function of the parent seed, a call-kind tag
/// and an index only, so scheduling order can never change a result.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view kind, std::uint64_t index = 0);

/// Small portable PRNG stream (splitmix64). Uniform doubles take the top 53 bits.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::uint64_t state_;
};

std::string hex64(std::uint64_t value);

/// `prefix` + 16 hex digits of the FNV-1a hash over `parts` joined by 0x1f.
std::string content_id(std::string_view prefix, std::initializer_list<std::string_view> parts);

}  // namespace t2iopt
