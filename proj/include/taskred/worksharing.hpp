#pragma once

// Static loop partitioning. A parallel construct spawns CL instances of the
// same task, each with its own index `ind`; each instance calls one of these
// loops to execute only its share of the iteration space.
//
// Ranges are half-open: a single loop covers [start, size), a nested loop
// covers [start1, size1) x [start2, size2), flattened row-major.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace taskred {

enum class Strategy { RoundRobin, Contiguous };

struct SingleLoop {
  int start = 0;
  int size = 0;
};

struct NestedLoop {
  int start1 = 0;
  int size1 = 0;
  int start2 = 0;
  int size2 = 0;
};

struct PartitionSpec {
  Strategy strategy = Strategy::RoundRobin;
  std::variant<SingleLoop, NestedLoop> shape;
  int ind = 0;
  int cl = 1;
};

using IndexPair = std::pair<int, int>;

/// Chunk of a contiguous partition: positions [offset, offset + length).
struct Chunk {
  long long offset = 0;
  long long length = 0;
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

namespace detail {

inline void check_worker(int ind, int cl) {
  if (cl < 1) throw std::invalid_argument("concurrency level must be >= 1");
  if (ind < 0 || ind >= cl) {
    throw std::invalid_argument("worker index " + std::to_string(ind) + " outside [0, " +
                                std::to_string(cl) + ")");
  }
}

inline long long extent(int start, int size) {
  if (size < start) {
    throw std::invalid_argument("loop bound " + std::to_string(size) + " below start " +
                                std::to_string(start));
  }
  return static_cast<long long>(size) - start;
}

}  // namespace detail

/// Contiguous split of m items over n workers: floor(m/n) each, plus one more
/// for each of the first m mod n workers.
inline Chunk contiguous_range(long long m, long long n, long long t) {
  if (n < 1) throw std::invalid_argument("contiguous_range needs n >= 1");
  if (t < 0 || t >= n) throw std::invalid_argument("contiguous_range worker index out of range");
  if (m < 0) throw std::invalid_argument("contiguous_range needs m >= 0");
  const long long base = m / n;
  const long long rem = m % n;
  const long long length = base + (t < rem ? 1 : 0);
  const long long offset = t * base + (t < rem ? t : rem);
  return {offset, length};
}

/// Round-robin executor over a single loop: calls work(i) for every i in
/// [start, size) with (i - start) mod cl == ind, ascending.
template <typename Work>
void par_for(int start, int size, int ind, int cl, Work&& work) {
  detail::check_worker(ind, cl);
  detail::extent(start, size);
  for (long long i = static_cast<long long>(start) + ind; i < size; i += cl) {
    work(static_cast<int>(i));
  }
}

/// Round-robin executor over a nested loop treated as one flattened loop, so
/// the assignment carries across row boundaries.
template <typename Work>
void par_nested_for(int start1, int size1, int start2, int size2, int ind, int cl, Work&& work) {
  detail::check_worker(ind, cl);
  const long long rows = detail::extent(start1, size1);
  const long long width = detail::extent(start2, size2);
  const long long total = rows * width;
  for (long long p = ind; p < total; p += cl) {
    work(static_cast<int>(start1 + p / width), static_cast<int>(start2 + p % width));
  }
}

template <typename Work>
void contiguous_for(int start, int size, int ind, int cl, Work&& work) {
  detail::check_worker(ind, cl);
  const Chunk c = contiguous_range(detail::extent(start, size), cl, ind);
  for (long long p = c.offset; p < c.offset + c.length; ++p) {
    work(static_cast<int>(start + p));
  }
}

template <typename Work>
void contiguous_nested_for(int start1, int size1, int start2, int size2, int ind, int cl,
                           Work&& work) {
  detail::check_worker(ind, cl);
  const long long rows = detail::extent(start1, size1);
  const long long width = detail::extent(start2, size2);
  const Chunk c = contiguous_range(rows * width, cl, ind);
  for (long long p = c.offset; p < c.offset + c.length; ++p) {
    work(static_cast<int>(start1 + p / width), static_cast<int>(start2 + p % width));
  }
}

/// Runs `work` once per index assigned by `spec`, in ascending order, on the
/// calling thread. Single-loop specs call work(i), nested specs work(i, j).
template <typename Work>
void run_partition(const PartitionSpec& spec, Work&& work) {
  if (const auto* s = std::get_if<SingleLoop>(&spec.shape)) {
    if constexpr (std::is_invocable_v<Work&, int>) {
      if (spec.strategy == Strategy::RoundRobin) {
        par_for(s->start, s->size, spec.ind, spec.cl, work);
      } else {
        contiguous_for(s->start, s->size, spec.ind, spec.cl, work);
      }
    } else {
      throw std::invalid_argument("single-loop partition needs a work(int) callable");
    }
  } else {
    const auto& n = std::get<NestedLoop>(spec.shape);
    if constexpr (std::is_invocable_v<Work&, int, int>) {
      if (spec.strategy == Strategy::RoundRobin) {
        par_nested_for(n.start1, n.size1, n.start2, n.size2, spec.ind, spec.cl, work);
      } else {
        contiguous_nested_for(n.start1, n.size1, n.start2, n.size2, spec.ind, spec.cl, work);
      }
    } else {
      throw std::invalid_argument("nested partition needs a work(int, int) callable");
    }
  }
}

inline std::vector<int> par_for_indices(int start, int size, int ind, int cl) {
  std::vector<int> out;
  par_for(start, size, ind, cl, [&](int i) { out.push_back(i); });
  return out;
}

inline std::vector<IndexPair> par_nested_for_indices(int start1, int size1, int start2, int size2,
                                                     int ind, int cl) {
  std::vector<IndexPair> out;
  par_nested_for(start1, size1, start2, size2, ind, cl,
                 [&](int i, int j) { out.emplace_back(i, j); });
  return out;
}

inline std::vector<int> contiguous_indices(int start, int size, int ind, int cl) {
  std::vector<int> out;
  contiguous_for(start, size, ind, cl, [&](int i) { out.push_back(i); });
  return out;
}

inline std::vector<IndexPair> contiguous_nested_range(int start1, int size1, int start2, int size2,
                                                      int ind, int cl) {
  std::vector<IndexPair> out;
  contiguous_nested_for(start1, size1, start2, size2, ind, cl,
                        [&](int i, int j) { out.emplace_back(i, j); });
  return out;
}

}  // namespace taskred
