#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace ultrasr {

// 64-bit FNV-1a, used for dataset and config fingerprints.
struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;

  void mix(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace ultrasr
