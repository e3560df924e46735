#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace delrank {

// FNV-1a over the canonical text form; used as the content hash in manifests.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view text);

}  // namespace delrank
