#include <doctest.h>

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "support/oracles.hpp"
#include "support/random_tree.hpp"
#include "taskred/runtime.hpp"

using namespace taskred;

namespace {

RuntimeConfig with_threads(std::size_t n, bool trace = false, bool steal = false) {
  RuntimeConfig cfg;
  cfg.num_threads = n;
  cfg.trace = trace;
  cfg.steal_enabled = steal;
  return cfg;
}

struct Arith {
  explicit Arith(KernelRegistry& reg)
      : add(reg.add("add", 2,
                    [](std::span<const Value> a, const KernelContext&) { return Value{a[0].as_int() + a[1].as_int()}; })),
        mul(reg.add("mul", 2,
                    [](std::span<const Value> a, const KernelContext&) { return Value{a[0].as_int() * a[1].as_int()}; })),
        twice(reg.add("double", 1,
                      [](std::span<const Value> a, const KernelContext&) { return Value{2 * a[0].as_int()}; })),
        where(reg.add("where", 0, [](std::span<const Value>, const KernelContext& ctx) {
          return Value{static_cast<std::int64_t>(ctx.tile.index)};
        })) {}
  KernelId add, mul, twice, where;
};

}  // namespace

TEST_CASE("literal evaluates to itself") {
  Runtime rt(with_threads(2));
  CHECK(rt.evaluate(literal(7)) == Value{7});
  CHECK(rt.evaluate(literal(20)) == Value{20});
  CHECK(rt.quiescent());
}

TEST_CASE("nested calls give the sequential value") {
  for (std::size_t threads : {1, 2, 4}) {
    Runtime rt(with_threads(threads));
    Arith k(rt.registry());
    auto& reg = rt.registry();
    const TaskExpr e = call(reg, k.add, {call(reg, k.mul, {literal(2), literal(5)}), literal(20)});
    CHECK(rt.evaluate(e) == Value{30});
    const TaskExpr doubled = call(reg, k.add, {call(reg, k.twice, {literal(10)}), literal(20)});
    CHECK(rt.evaluate(doubled) == Value{40});
    CHECK(rt.evaluate(doubled) == testing::evaluate_recursive(doubled, reg));
    CHECK(rt.quiescent());
    CHECK(rt.outstanding_requests() == 0);
  }
}

TEST_CASE("spawn_n children reduce to the enumerated sum") {
  Runtime rt(with_threads(3));
  const KernelId reduce_sum = rt.registry().add("reduce_sum", 1, [](std::span<const Value> a, const KernelContext&) {
    std::int64_t s = 0;
    for (const auto& v : a[0].as_list()) s += v.as_int();
    return Value{s};
  });
  const auto children = [](std::size_t i) { return literal(static_cast<std::int64_t>(i)); };
  CHECK(rt.evaluate(call(rt.registry(), reduce_sum, {spawn_n(4, children)})) == Value{6});
  CHECK(rt.evaluate(spawn_n(4, children)) == Value{ValueList{0, 1, 2, 3}});
  CHECK(rt.quiescent());
}

TEST_CASE("seq runs side effects in list order") {
  for (std::size_t threads : {1, 2, 4, 8}) {
    Runtime rt(with_threads(threads, true));
    std::mutex m;
    std::string log;
    const KernelId say = rt.registry().add("log", 1, [&](std::span<const Value> a, const KernelContext&) {
      std::lock_guard lock(m);
      log += static_cast<char>(a[0].as_int());
      return a[0];
    });
    auto& reg = rt.registry();
    // each child is placed on a different tile so ordering is not an accident
    const TaskExpr e = seq({call(reg, say, {literal('a')}, EvalMode::Parallel, TileId{2}),
                            call(reg, say, {literal('b')}, EvalMode::Parallel, TileId{1}),
                            call(reg, say, {literal('c')}, EvalMode::Parallel, TileId{0})});
    CHECK(rt.evaluate(e) == Value{'c'});
    CHECK(log == "abc");
    CHECK(count_seq_order_violations(rt.trace()) == 0);
    CHECK(rt.quiescent());
  }
}

TEST_CASE("sequential call mode dispatches one argument at a time") {
  Runtime rt(with_threads(4, true));
  std::atomic<int> running{0};
  std::atomic<int> peak{0};
  const KernelId slow = rt.registry().add("slow", 1, [&](std::span<const Value> a, const KernelContext&) {
    const int now = ++running;
    peak = std::max(peak.load(), now);
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    --running;
    return a[0];
  });
  testing::PureKernels k(rt.registry());
  std::vector<TaskExpr> args;
  for (int i = 0; i < 6; ++i) args.push_back(call(rt.registry(), slow, {literal(i)}));
  const Value v = rt.evaluate(call(rt.registry(), k.combine, std::move(args), EvalMode::Sequential));
  CHECK(peak.load() == 1);
  CHECK(count_seq_order_violations(rt.trace()) == 0);
  std::uint64_t h = 17;
  for (int i = 0; i < 6; ++i) h = h * 31 + static_cast<std::uint64_t>(i);
  CHECK(v == Value{static_cast<std::int64_t>(h)});
}

TEST_CASE("placement hints and default placement choose the host tile") {
  Runtime rt(with_threads(4));
  Arith k(rt.registry());
  auto& reg = rt.registry();
  CHECK(rt.evaluate(call(reg, k.where, {}, EvalMode::Parallel, TileId{3})) == Value{3});
  CHECK(rt.evaluate(call(reg, k.where, {}, EvalMode::Parallel, TileId{6})) == Value{2});  // wraps mod 4
  const Value homes = rt.evaluate(spawn_n(8, [&](std::size_t) { return call(reg, k.where, {}); }));
  CHECK(homes == Value{ValueList{0, 1, 2, 3, 0, 1, 2, 3}});
}

TEST_CASE("kernel failures propagate with the kernel named") {
  for (std::size_t threads : {1, 3}) {
    Runtime rt(with_threads(threads));
    Arith k(rt.registry());
    auto& reg = rt.registry();
    const KernelId boom = reg.add("boom", 1, [](std::span<const Value>, const KernelContext&) -> Value {
      throw std::runtime_error("bad input");
    });
    const TaskExpr e = call(reg, k.add, {call(reg, boom, {literal(1)}), call(reg, k.twice, {literal(3)})});
    try {
      rt.evaluate(e);
      FAIL("expected an EvaluationError");
    } catch (const EvaluationError& err) {
      CHECK(err.kernel() == "boom");
      CHECK(err.message() == "bad input");
    }
    CHECK(rt.quiescent());
    // a failing child in a seq stops later children
    std::atomic<int> later{0};
    const KernelId count = reg.add("count", 0, [&](std::span<const Value>, const KernelContext&) {
      ++later;
      return Value{};
    });
    CHECK_THROWS_AS(rt.evaluate(seq({call(reg, boom, {literal(0)}), call(reg, count, {})})), EvaluationError);
    CHECK(later.load() == 0);
    CHECK(rt.quiescent());
    // runtime still usable afterwards
    CHECK(rt.evaluate(call(reg, k.twice, {literal(21)})) == Value{42});
  }
}

TEST_CASE("self-addressed nesting on a single tile does not deadlock") {
  Runtime rt(with_threads(1));
  testing::PureKernels k(rt.registry());
  TaskExpr e = literal(5);
  for (int d = 0; d < 201; ++d) e = call(rt.registry(), k.negate, {e}, EvalMode::Parallel, TileId{0});
  CHECK(rt.evaluate(call(rt.registry(), k.sum, {e, literal(1)})) == Value{-4});
  CHECK(rt.quiescent());
}

TEST_CASE("random trees match recursive evaluation with invariants intact") {
  for (std::size_t threads : {1, 2, 4, 8}) {
    for (bool steal : {false, true}) {
      Runtime rt(with_threads(threads, true, steal));
      testing::PureKernels k(rt.registry());
      testing::TreeGenerator gen(rt.registry(), k, 1234 + threads);
      for (int trial = 0; trial < 60; ++trial) {
        const TaskExpr e = gen.next();
        REQUIRE(rt.evaluate(e) == testing::evaluate_recursive(e, rt.registry()));
        REQUIRE(rt.quiescent());
        REQUIRE(count_seq_order_violations(rt.trace()) == 0);
      }
      const RuntimeStats s = rt.stats();
      REQUIRE(s.tiles.size() == threads);
      for (const auto& t : s.tiles) {
        CHECK(t.max_kernel_nesting <= 1);
        CHECK(t.foreign_dequeues == 0);
        CHECK(t.packets == t.requests + t.results);
      }
      CHECK(s.total_kernel_invocations() > 0);
      if (!steal) {
        for (const auto& t : s.tiles) CHECK(t.rehosted_in == 0);
      }
    }
  }
}

TEST_CASE("stats can be reset") {
  Runtime rt(with_threads(2));
  Arith k(rt.registry());
  rt.evaluate(call(rt.registry(), k.twice, {literal(1)}));
  CHECK(rt.stats().total_packets() > 0);
  rt.reset_stats();
  CHECK(rt.stats().total_packets() == 0);
}

TEST_CASE("configuration is validated") {
  RuntimeConfig cfg;
  cfg.num_threads = 0;
  CHECK_THROWS_AS(Runtime{cfg}, std::invalid_argument);
  Runtime rt(with_threads(3));
  CHECK(rt.num_tiles() == 3);
  CHECK(rt.config().concurrency_level == 3);
  CHECK_THROWS_AS(rt.evaluate(nullptr), std::invalid_argument);
}

TEST_CASE("seq order checker flags overlaps") {
  using K = TraceEvent::Kind;
  std::vector<TraceEvent> ok{{K::Dispatch, 1, 0, true, 0, {}}, {K::Complete, 1, 0, true, 1, {}},
                             {K::Dispatch, 1, 1, true, 2, {}}, {K::Complete, 1, 1, true, 3, {}}};
  CHECK(count_seq_order_violations(ok) == 0);
  std::vector<TraceEvent> bad{{K::Dispatch, 1, 0, true, 0, {}}, {K::Dispatch, 1, 1, true, 1, {}},
                              {K::Complete, 1, 0, true, 2, {}}, {K::Complete, 1, 1, true, 3, {}}};
  CHECK(count_seq_order_violations(bad) == 1);
  for (auto& e : bad) e.sequential = false;
  CHECK(count_seq_order_violations(bad) == 0);
}
