#include "t2iopt/hash.hpp"

#include <cstdio>

namespace t2iopt {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view kind, std::uint64_t index) {
  std::uint64_t state = parent ^ fnv1a64(kind);
  std::uint64_t a = splitmix64(state);
  state = a ^ (index * 0xd1b54a32d192ed03ULL);
  return splitmix64(state);
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf, 16);
}

std::string content_id(std::string_view prefix, std::initializer_list<std::string_view> parts) {
  std::uint64_t h = kFnvOffset;
  bool first = true;
  for (auto part : parts) {
    if (!first) h = fnv1a64("\x1f", h);
    h = fnv1a64(part, h);
    first = false;
  }
  return std::string(prefix) + hex64(h);
}

}  // namespace t2iopt
