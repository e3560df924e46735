#include "delrank/hash.hpp"

#include <cstdio>

namespace delrank {

std::string fnv1a64_hex(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return std::string(buf);
}

}  // namespace delrank
