#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace coforge {

/// Monotonic per-prefix id source ("agent-000001"). Zero padding keeps
/// lexicographic order equal to creation order.
class IdSequence {
 public:
  std::string next(const std::string& prefix);

  const std::map<std::string, std::uint64_t>& counters() const noexcept { return counters_; }
  void restore(std::map<std::string, std::uint64_t> counters) { counters_ = std::move(counters); }

  bool operator==(const IdSequence&) const = default;

 private:
  std::map<std::string, std::uint64_t> counters_;
};

}  // namespace coforge
