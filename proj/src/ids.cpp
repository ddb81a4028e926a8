#include "coforge/ids.hpp"

#include <cstdio>

namespace coforge {

std::string IdSequence::next(const std::string& prefix) {
  const std::uint64_t n = ++counters_[prefix];
  char digits[32];
  std::snprintf(digits, sizeof(digits), "%06llu", static_cast<unsigned long long>(n));
  return prefix + "-" + digits;
}

}  // namespace coforge
