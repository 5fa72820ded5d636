#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taskred::bench {

enum class Workload { SparseLU, Matmul };
enum class Strategy { Seq, Gprm, GprmContiguous, Taskpool };

std::string_view to_string(Workload w);
std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

/// Relative tolerance of the blocked-vs-dense LU check.
inline constexpr double kLuRelTol = 1e-3;

struct BenchConfig {
  Workload workload = Workload::SparseLU;
  Strategy strategy = Strategy::Seq;
  int nb = 50;
  int bs = 16;
  int m = 512;
  int n = 512;
  int cutoff = 1;
  std::size_t threads = 1;
  int cl = 0;  // 0: same as threads
  int repeats = 5;
  bool verify = false;
  bool stats = false;

  [[nodiscard]] int effective_cl() const { return cl == 0 ? static_cast<int>(threads) : cl; }
};

struct BenchReport {
  Workload workload = Workload::SparseLU;
  Strategy strategy = Strategy::Seq;
  std::optional<int> nb, bs, m, n, cutoff;
  std::size_t threads = 1;
  std::optional<int> cl;
  int repeats = 0;
  std::vector<double> times_ms;
  double median_ms = 0.0;
  bool verified = false;
  std::optional<double> speedup_vs_seq;

  // filled when BenchConfig::stats is set
  std::optional<double> sparsity;
  std::optional<std::uint64_t> dispatches;
  std::optional<std::uint64_t> packets;

  std::optional<double> max_rel_error;  // diagnostic, from --verify
  bool include_stats = false;
};

double median(std::vector<double> values);

/// Runs one configuration `repeats` times, timing only the factorization or
/// multiplication. Throws SingularBlockError on a zero pivot and
/// std::invalid_argument on inconsistent parameters.
BenchReport run_benchmark(const BenchConfig& cfg);

/// Sets speedup = seq median / median for every report whose problem
/// parameters match a seq report in the same list.
void fill_speedups(std::vector<BenchReport>& reports);

inline constexpr std::string_view kCsvHeader =
    "workload,strategy,nb,bs,m,n,cutoff,threads,cl,repeats,median_ms,verified,speedup";
inline constexpr std::string_view kCsvStatsColumns = ",sparsity,dispatches,packets";

std::string emit_csv(const std::vector<BenchReport>& reports);
std::string emit_json(const std::vector<BenchReport>& reports);

}  // namespace taskred::bench
