#include "taskred/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "taskred/block_kernels.hpp"
#include "taskred/blocked_sparse_matrix.hpp"
#include "taskred/matmul.hpp"
#include "taskred/runtime.hpp"
#include "taskred/sparselu.hpp"
#include "taskred/task_pool.hpp"

namespace taskred::bench {

std::string_view to_string(Workload w) {
  return w == Workload::SparseLU ? "sparselu" : "matmul";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Seq:
      return "seq";
    case Strategy::Gprm:
      return "gprm";
    case Strategy::GprmContiguous:
      return "gprm-contiguous";
    case Strategy::Taskpool:
      return "taskpool";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (Strategy st : {Strategy::Seq, Strategy::Gprm, Strategy::GprmContiguous, Strategy::Taskpool}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point begin) {
  return std::chrono::duration<double, std::milli>(Clock::now() - begin).count();
}

taskred::Strategy partition_of(Strategy s) {
  return s == Strategy::GprmContiguous ? taskred::Strategy::Contiguous : taskred::Strategy::RoundRobin;
}

bool is_gprm(Strategy s) { return s == Strategy::Gprm || s == Strategy::GprmContiguous; }

void validate(const BenchConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("--repeats must be >= 1");
  if (cfg.threads < 1) throw std::invalid_argument("--threads must be >= 1");
  if (cfg.cl < 0) throw std::invalid_argument("--cl must be >= 1");
  if (cfg.workload == Workload::SparseLU) {
    if (cfg.nb < 1 || cfg.bs < 1) throw std::invalid_argument("--nb and --bs must be >= 1");
  } else {
    if (cfg.m < 1 || cfg.n < 1) throw std::invalid_argument("--m and --n must be >= 1");
    if (cfg.strategy == Strategy::Taskpool && (cfg.cutoff < 1 || cfg.cutoff > cfg.m)) {
      throw std::invalid_argument("--cutoff must lie in [1, m]");
    }
  }
}

BenchReport skeleton(const BenchConfig& cfg) {
  BenchReport r;
  r.workload = cfg.workload;
  r.strategy = cfg.strategy;
  r.repeats = cfg.repeats;
  r.include_stats = cfg.stats;
  r.threads = cfg.strategy == Strategy::Seq ? 1 : cfg.threads;
  if (is_gprm(cfg.strategy)) r.cl = cfg.effective_cl();
  if (cfg.workload == Workload::SparseLU) {
    r.nb = cfg.nb;
    r.bs = cfg.bs;
  } else {
    r.m = cfg.m;
    r.n = cfg.n;
    if (cfg.strategy == Strategy::Taskpool) r.cutoff = cfg.cutoff;
  }
  return r;
}

void run_sparselu(const BenchConfig& cfg, BenchReport& r) {
  const SparseMatrixF input = genmat(cfg.nb, cfg.bs);
  if (cfg.stats) r.sparsity = input.sparsity();

  std::optional<Runtime> rt;
  std::optional<TaskPool> pool;
  if (is_gprm(cfg.strategy)) rt.emplace(RuntimeConfig{cfg.threads, static_cast<std::size_t>(cfg.effective_cl())});
  if (cfg.strategy == Strategy::Taskpool) pool.emplace(cfg.threads);

  SparseMatrixF result = input;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    SparseMatrixF work = input;
    if (rt) rt->reset_stats();
    if (pool) pool->reset_counters();
    const auto begin = Clock::now();
    switch (cfg.strategy) {
      case Strategy::Seq:
        sparselu::factorize_sequential(work);
        break;
      case Strategy::Gprm:
      case Strategy::GprmContiguous:
        sparselu::factorize_gprm(work, *rt, cfg.effective_cl(), partition_of(cfg.strategy));
        break;
      case Strategy::Taskpool:
        sparselu::factorize_taskpool(work, *pool);
        break;
    }
    r.times_ms.push_back(elapsed_ms(begin));
    result = std::move(work);
  }

  if (cfg.stats) {
    if (rt) {
      const int cl = cfg.effective_cl();
      r.dispatches = static_cast<std::uint64_t>(cfg.nb) *
                     static_cast<std::uint64_t>(1 + 2 * sparselu::fwd_bdiv_workers(cl) + cl);
      r.packets = rt->stats().total_packets();
    } else if (pool) {
      r.dispatches = pool->dispatched();
    } else {
      r.dispatches = 0;
    }
  }

  if (cfg.verify) {
    DenseMatrix<float> oracle = to_dense(input);
    dense_lu_inplace(oracle);
    const CompareResult cmp = compare(to_dense(result), oracle, kLuRelTol);
    r.max_rel_error = cmp.max_rel_error;
    bool ok = cmp.pass;
    if (cfg.strategy != Strategy::Seq) {
      SparseMatrixF reference = input;
      sparselu::factorize_sequential(reference);
      ok = ok && reference == result;
    }
    r.verified = ok;
  }
}

bool bitwise_equal(const DenseMatrix<float>& a, const DenseMatrix<float>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<std::size_t>(a.size())) == 0;
}

// Forward error bound of a length-n dot product in binary32:
// |fl(c) - c| <= gamma_n * sum |a||b|, gamma_n = n u / (1 - n u).
bool within_dot_product_bound(const DenseMatrix<float>& a, const DenseMatrix<float>& b,
                              const DenseMatrix<float>& c, double& max_ratio) {
  using D = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const D ad = a.cast<double>();
  const D bd = b.cast<double>();
  const D exact = ad * bd;
  const D scale = ad.cwiseAbs() * bd.cwiseAbs();
  const double u = std::ldexp(1.0, -24);
  const double nu = static_cast<double>(a.cols()) * u;
  const double gamma = nu / (1.0 - nu);
  max_ratio = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      const double err = std::abs(static_cast<double>(c(i, j)) - exact(i, j));
      const double bound = gamma * scale(i, j);
      if (err > bound) return false;
      if (bound > 0) max_ratio = std::max(max_ratio, err / bound);
    }
  }
  return true;
}

void run_matmul(const BenchConfig& cfg, BenchReport& r) {
  const auto problem = matmul::make_problem(cfg.m, cfg.n);
  std::optional<Runtime> rt;
  std::optional<TaskPool> pool;
  if (is_gprm(cfg.strategy)) rt.emplace(RuntimeConfig{cfg.threads, static_cast<std::size_t>(cfg.effective_cl())});
  if (cfg.strategy == Strategy::Taskpool) pool.emplace(cfg.threads);

  DenseMatrix<float> c;
  std::uint64_t dispatches = 0;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    c = DenseMatrix<float>::Zero(cfg.m, cfg.n);
    if (rt) rt->reset_stats();
    const auto begin = Clock::now();
    switch (cfg.strategy) {
      case Strategy::Seq:
        matmul::matmul_seq(problem.a, problem.b, c);
        break;
      case Strategy::Gprm:
      case Strategy::GprmContiguous:
        dispatches = matmul::matmul_parfor(problem.a, problem.b, c, *rt, cfg.effective_cl(),
                                           partition_of(cfg.strategy));
        break;
      case Strategy::Taskpool:
        dispatches = matmul::matmul_taskpool(problem.a, problem.b, c, *pool, cfg.cutoff);
        break;
    }
    r.times_ms.push_back(elapsed_ms(begin));
  }
  if (cfg.stats) {
    r.dispatches = dispatches;
    if (rt) r.packets = rt->stats().total_packets();
  }
  if (cfg.verify) {
    DenseMatrix<float> reference = DenseMatrix<float>::Zero(cfg.m, cfg.n);
    matmul::matmul_seq(problem.a, problem.b, reference);
    double ratio = 0.0;
    r.verified = bitwise_equal(reference, c) && within_dot_product_bound(problem.a, problem.b, reference, ratio);
    r.max_rel_error = ratio;
  }
}

std::string field(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

bool same_problem(const BenchReport& a, const BenchReport& b) {
  return a.workload == b.workload && a.nb == b.nb && a.bs == b.bs && a.m == b.m && a.n == b.n;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& cfg) {
  validate(cfg);
  BenchReport r = skeleton(cfg);
  if (cfg.workload == Workload::SparseLU) {
    run_sparselu(cfg, r);
  } else {
    run_matmul(cfg, r);
  }
  r.median_ms = median(r.times_ms);
  if (cfg.strategy == Strategy::Seq) r.speedup_vs_seq = 1.0;
  return r;
}

void fill_speedups(std::vector<BenchReport>& reports) {
  for (auto& r : reports) {
    if (r.strategy == Strategy::Seq) {
      r.speedup_vs_seq = 1.0;
      continue;
    }
    for (const auto& base : reports) {
      if (base.strategy == Strategy::Seq && same_problem(base, r) && r.median_ms > 0) {
        r.speedup_vs_seq = base.median_ms / r.median_ms;
        break;
      }
    }
  }
}

std::string emit_csv(const std::vector<BenchReport>& reports) {
  const bool stats = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.include_stats; });
  std::ostringstream os;
  os << kCsvHeader;
  if (stats) os << kCsvStatsColumns;
  os << '\n';
  for (const auto& r : reports) {
    os << to_string(r.workload) << ',' << to_string(r.strategy) << ',' << field(r.nb) << ',' << field(r.bs)
       << ',' << field(r.m) << ',' << field(r.n) << ',' << field(r.cutoff) << ',' << r.threads << ','
       << field(r.cl) << ',' << r.repeats << ',' << fixed(r.median_ms, 3) << ','
       << (r.verified ? "true" : "false") << ',' << (r.speedup_vs_seq ? fixed(*r.speedup_vs_seq, 3) : "");
    if (stats) {
      os << ',' << (r.sparsity ? fixed(*r.sparsity, 4) : "") << ','
         << (r.dispatches ? std::to_string(*r.dispatches) : "") << ','
         << (r.packets ? std::to_string(*r.packets) : "");
    }
    os << '\n';
  }
  return os.str();
}

std::string emit_json(const std::vector<BenchReport>& reports) {
  const bool stats = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.include_stats; });
  using json = nlohmann::ordered_json;
  auto opt = [](const auto& v) -> json { return v ? json(*v) : json(nullptr); };
  // Numbers are rounded exactly as in the CSV so both formats carry the same values.
  auto rounded = [](double v, int digits) { return std::stod(fixed(v, digits)); };
  json out = json::array();
  for (const auto& r : reports) {
    json o = json::object();
    o["workload"] = std::string(to_string(r.workload));
    o["strategy"] = std::string(to_string(r.strategy));
    o["nb"] = opt(r.nb);
    o["bs"] = opt(r.bs);
    o["m"] = opt(r.m);
    o["n"] = opt(r.n);
    o["cutoff"] = opt(r.cutoff);
    o["threads"] = r.threads;
    o["cl"] = opt(r.cl);
    o["repeats"] = r.repeats;
    o["median_ms"] = rounded(r.median_ms, 3);
    o["verified"] = r.verified;
    o["speedup"] = r.speedup_vs_seq ? json(rounded(*r.speedup_vs_seq, 3)) : json(nullptr);
    if (stats) {
      o["sparsity"] = r.sparsity ? json(rounded(*r.sparsity, 4)) : json(nullptr);
      o["dispatches"] = opt(r.dispatches);
      o["packets"] = opt(r.packets);
    }
    out.push_back(std::move(o));
  }
  return out.dump(2) + "\n";
}

}  // namespace taskred::bench
