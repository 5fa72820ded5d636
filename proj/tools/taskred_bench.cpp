// Benchmark harness: runs sparse LU or matrix multiplication under one or
// more strategies and prints CSV or JSON reports.
//
//   taskred-bench sparselu --nb 25 --bs 16 --strategy gprm --cl 8 --threads 8 --verify
//   taskred-bench matmul --m 512 --n 512 --strategy taskpool --cutoff 64 --threads 4
//   taskred-bench sparselu --nb 50 --bs 16 --strategy gprm --sweep cl=1,2,4,8 --baseline

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "taskred/bench.hpp"
#include "taskred/block_kernels.hpp"
#include "taskred/runtime.hpp"

namespace {

using taskred::bench::BenchConfig;
using taskred::bench::BenchReport;

struct Options {
  int nb = 50;
  int bs = 16;
  int m = 512;
  int n = 512;
  int cutoff = 1;
  std::size_t threads = taskred::default_thread_count();
  int cl = 0;
  std::string strategy = "gprm";
  int repeats = 5;
  bool verify = false;
  bool stats = false;
  bool baseline = false;
  std::string format = "csv";
  std::vector<std::string> sweeps;
};

struct Sweep {
  std::string param;
  std::vector<std::string> values;
};

Sweep parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw CLI::ValidationError("--sweep", "expected <param>=<v1,v2,...>, got '" + text + "'");
  }
  Sweep s{text.substr(0, eq), {}};
  std::stringstream ss(text.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) s.values.push_back(item);
  }
  if (s.values.empty()) throw CLI::ValidationError("--sweep", "no values for " + s.param);
  return s;
}

int to_int(const std::string& param, const std::string& v) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("--sweep", "value '" + v + "' for " + param + " is not an integer");
}

void apply(BenchConfig& cfg, const std::string& param, const std::string& v) {
  if (param == "strategy") {
    const auto s = taskred::bench::parse_strategy(v);
    if (!s) throw CLI::ValidationError("--sweep", "unknown strategy '" + v + "'");
    cfg.strategy = *s;
  } else if (param == "threads") {
    const int t = to_int(param, v);
    if (t < 1) throw CLI::ValidationError("--sweep", "threads must be >= 1");
    cfg.threads = static_cast<std::size_t>(t);
  } else {
    static const std::map<std::string, int BenchConfig::*> fields = {
        {"nb", &BenchConfig::nb}, {"bs", &BenchConfig::bs},         {"m", &BenchConfig::m},
        {"n", &BenchConfig::n},   {"cutoff", &BenchConfig::cutoff}, {"cl", &BenchConfig::cl},
        {"repeats", &BenchConfig::repeats}};
    const auto it = fields.find(param);
    if (it == fields.end()) throw CLI::ValidationError("--sweep", "cannot sweep '" + param + "'");
    cfg.*(it->second) = to_int(param, v);
  }
}

// Cartesian product of all sweeps applied to the base configuration.
std::vector<BenchConfig> expand(const BenchConfig& base, const std::vector<Sweep>& sweeps) {
  std::vector<BenchConfig> out{base};
  for (const auto& s : sweeps) {
    std::vector<BenchConfig> next;
    for (const auto& cfg : out) {
      for (const auto& v : s.values) {
        BenchConfig c = cfg;
        apply(c, s.param, v);
        next.push_back(c);
      }
    }
    out = std::move(next);
  }
  return out;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--threads", o.threads, "worker threads (default: TASKRED_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cl", o.cl, "concurrency level for gprm strategies (default: threads)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--strategy", o.strategy, "seq | gprm | gprm-contiguous | taskpool")
      ->check(CLI::IsMember({"seq", "gprm", "gprm-contiguous", "taskpool"}));
  cmd->add_option("--repeats", o.repeats, "timed repetitions; the report uses the median")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--verify", o.verify, "check the result against the reference computation");
  cmd->add_flag("--stats", o.stats, "add sparsity and dispatch counters to the report");
  cmd->add_flag("--baseline", o.baseline, "also run seq for each problem size to fill speedup");
  cmd->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--sweep", o.sweeps, "<param>=<comma-list>; repeatable (cartesian product)");
}

}  // namespace

// Clears parameters the strategy ignores, then drops repeated runs; a seq
// row swept over threads would otherwise appear once per thread count.
std::vector<BenchConfig> unique_runs(std::vector<BenchConfig> configs) {
  using taskred::bench::Strategy;
  std::vector<BenchConfig> out;
  for (BenchConfig c : configs) {
    if (c.strategy == Strategy::Seq) c.threads = 1;
    if (c.strategy != Strategy::Gprm && c.strategy != Strategy::GprmContiguous) c.cl = 0;
    if (c.strategy != Strategy::Taskpool) c.cutoff = 1;
    const auto key = [](const BenchConfig& x) {
      return std::tuple(x.strategy, x.nb, x.bs, x.m, x.n, x.cutoff, x.threads, x.cl);
    };
    if (std::none_of(out.begin(), out.end(), [&](const BenchConfig& x) { return key(x) == key(c); })) {
      out.push_back(c);
    }
  }
  return out;
}

int main(int argc, char** argv) {
  CLI::App app{"Task-parallel sparse LU and matmul benchmarks"};
  app.require_subcommand(1);
  Options o;

  auto* lu = app.add_subcommand("sparselu", "blocked sparse LU factorization");
  lu->add_option("--nb", o.nb, "blocks per dimension")->check(CLI::PositiveNumber);
  lu->add_option("--bs", o.bs, "block edge length")->check(CLI::PositiveNumber);
  add_common(lu, o);

  auto* mm = app.add_subcommand("matmul", "naive matrix multiplication (A: m x n, B: n x n)");
  mm->add_option("--m", o.m, "rows of A (number of jobs)")->check(CLI::PositiveNumber);
  mm->add_option("--n", o.n, "inner and output dimension")->check(CLI::PositiveNumber);
  auto* cutoff = mm->add_option("--cutoff", o.cutoff, "rows per task for the taskpool strategy")
                     ->check(CLI::PositiveNumber);
  add_common(mm, o);

  CLI11_PARSE(app, argc, argv);

  const bool is_lu = lu->parsed();
  CLI::App* cmd = is_lu ? lu : mm;
  std::vector<BenchConfig> configs;
  try {
    std::vector<Sweep> sweeps;
    bool strategy_swept = false;
    for (const auto& text : o.sweeps) {
      sweeps.push_back(parse_sweep(text));
      strategy_swept = strategy_swept || sweeps.back().param == "strategy";
      if (is_lu && (sweeps.back().param == "m" || sweeps.back().param == "n" || sweeps.back().param == "cutoff")) {
        throw CLI::ValidationError("--sweep", "sparselu has no parameter '" + sweeps.back().param + "'");
      }
      if (!is_lu && (sweeps.back().param == "nb" || sweeps.back().param == "bs")) {
        throw CLI::ValidationError("--sweep", "matmul has no parameter '" + sweeps.back().param + "'");
      }
    }
    if (!strategy_swept) {
      if (!is_lu && cutoff->count() > 0 && o.strategy != "taskpool") {
        throw CLI::ValidationError("--cutoff", "only applies to --strategy taskpool");
      }
      if (cmd->count("--cl") > 0 && o.strategy != "gprm" && o.strategy != "gprm-contiguous") {
        throw CLI::ValidationError("--cl", "only applies to gprm strategies");
      }
    }

    BenchConfig base;
    base.workload = is_lu ? taskred::bench::Workload::SparseLU : taskred::bench::Workload::Matmul;
    base.strategy = *taskred::bench::parse_strategy(o.strategy);
    base.nb = o.nb;
    base.bs = o.bs;
    base.m = o.m;
    base.n = o.n;
    base.cutoff = o.cutoff;
    base.threads = o.threads;
    base.cl = o.cl;
    base.repeats = o.repeats;
    base.verify = o.verify;
    base.stats = o.stats;
    configs = unique_runs(expand(base, sweeps));
  } catch (const CLI::Error& e) {
    std::cerr << cmd->help() << '\n';
    return app.exit(e);
  }

  if (o.baseline) {
    std::vector<BenchConfig> with_seq;
    for (const auto& c : configs) {
      if (c.strategy != taskred::bench::Strategy::Seq) {
        BenchConfig s = c;
        s.strategy = taskred::bench::Strategy::Seq;
        const bool seen = std::any_of(with_seq.begin(), with_seq.end(), [&](const BenchConfig& x) {
          return x.strategy == s.strategy && x.nb == s.nb && x.bs == s.bs && x.m == s.m && x.n == s.n;
        });
        if (!seen) with_seq.push_back(s);
      }
      with_seq.push_back(c);
    }
    configs = std::move(with_seq);
  }

  std::vector<BenchReport> reports;
  try {
    for (const auto& c : configs) reports.push_back(taskred::bench::run_benchmark(c));
  } catch (const taskred::SingularBlockError& e) {
    std::cerr << "error: singular matrix: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n' << cmd->help() << '\n';
    return 2;
  }

  taskred::bench::fill_speedups(reports);
  std::cout << (o.format == "json" ? taskred::bench::emit_json(reports) : taskred::bench::emit_csv(reports));

  if (o.verify) {
    for (const auto& r : reports) {
      if (!r.verified) {
        std::cerr << "verification failed: " << taskred::bench::to_string(r.workload) << ' '
                  << taskred::bench::to_string(r.strategy) << '\n';
        return 1;
      }
    }
  }
  return 0;
}
