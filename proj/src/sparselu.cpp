#include "taskred/sparselu.hpp"

#include <limits>
#include <map>
#include <numeric>
#include <utility>

namespace taskred::sparselu {

std::size_t TaskCounts::total() const {
  return std::accumulate(fwd.begin(), fwd.end(), std::size_t{0}) +
         std::accumulate(bdiv.begin(), bdiv.end(), std::size_t{0}) +
         std::accumulate(bmod.begin(), bmod.end(), std::size_t{0});
}

bool phases_well_ordered(const std::vector<PhaseEvent>& events) {
  struct Span {
    std::uint64_t first_begin = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t last_end = 0;
  };
  // (kk, phase) in execution order
  std::map<std::pair<int, int>, Span> spans;
  for (const auto& e : events) {
    if (e.end <= e.begin) return false;
    auto& s = spans[{e.kk, static_cast<int>(e.phase)}];
    s.first_begin = std::min(s.first_begin, e.begin);
    s.last_end = std::max(s.last_end, e.end);
  }
  const Span* prev = nullptr;
  for (const auto& [key, span] : spans) {
    if (prev != nullptr && prev->last_end >= span.first_begin) return false;
    prev = &span;
  }
  return true;
}

}  // namespace taskred::sparselu
