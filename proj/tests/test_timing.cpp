#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "irbmc/analysis.h"
#include "irbmc/frontend.h"
#include "irbmc/timing.h"

using namespace irbmc;
using namespace irbmc::timing;

namespace {

IrProgram lowered(const std::string& src) {
  auto r = minic::lower(src);
  if (!r.program)
    FAIL((r.diagnostics.empty() ? std::string("lowering failed")
                                : to_string(r.diagnostics.front())));
  return *r.program;
}

ExprPtr flag() { return eb::var("c", Ty::Bool); }

Function make_fn(std::string name, std::vector<Instr> body, std::vector<LoopInfo> loops = {}) {
  Function f;
  f.name = std::move(name);
  f.locals["c"] = Symbol{"c", Ty::Bool, {}, VarKind::Plain, {}, false, {}, {}, 0};
  f.body = std::move(body);
  f.loops = std::move(loops);
  return f;
}

IrProgram make_prog(std::vector<Function> fns) {
  IrProgram p;
  for (auto& f : fns) {
    std::string n = f.name;
    p.functions.emplace(std::move(n), std::move(f));
  }
  return p;
}

uint64_t wcet_ok(const IrProgram& p, const std::string& fn, const TimingModel& m) {
  Diagnostics d;
  auto r = wcet(p, fn, m, d);
  REQUIRE_MESSAGE(r.has_value(), (d.empty() ? std::string("no diagnostic") : to_string(d.front())));
  return *r;
}

}  // namespace

TEST_CASE("rational arithmetic is exact and normalized") {
  CHECK(rat(1, 2) + rat(1, 3) == rat(5, 6));
  CHECK(rat(2, 4) == rat(1, 2));
  CHECK(rat(3, -6) == rat(-1, 2));
  CHECK(rat(7, 10) - rat(1, 5) == rat(1, 2));
  CHECK(rat(3, 4) * rat(2, 3) == rat(1, 2));
  CHECK(rat(1, 3) < rat(1, 2));
  CHECK(rat(-1, 2) < rat(1, 3));
  CHECK(rat(5, 10) <= rat(1, 2));

  CHECK(rat_from_decimal("2.89") == rat(289, 100));
  CHECK(rat_from_decimal("-0.5") == rat(-1, 2));
  CHECK(rat_from_decimal("140") == rat(140));
  CHECK_THROWS_AS(rat_from_decimal("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(rat_from_decimal("ms"), std::invalid_argument);
  CHECK_THROWS_AS(rat_from_decimal(""), std::invalid_argument);

  CHECK(ceil_to_int(rat(5, 2)) == 3);
  CHECK(ceil_to_int(rat(4, 2)) == 2);
  CHECK(ceil_to_int(rat(-5, 2)) == -2);
  CHECK(ceil_div(rat(27, 10), rat(5)) == 1);
  CHECK(ceil_div(rat(289, 100), rat(5, 2)) == 2);
  CHECK(ceil_div(rat(3), rat(1)) == 3);
}

TEST_CASE("decimal formatting is exact for terminating fractions") {
  CHECK(to_decimal(rat(289, 100)) == "2.89");
  CHECK(to_decimal(rat(1, 2)) == "0.5");
  CHECK(to_decimal(rat(-1, 8)) == "-0.125");
  CHECK(to_decimal(rat(3)) == "3");
  CHECK(to_decimal(rat(0)) == "0");
  CHECK(to_decimal(rat(10, 4)) == "2.5");
  CHECK(to_decimal(rat(1, 3)) == "1/3");
}

TEST_CASE("straight line of unit-cost instructions costs its length") {
  std::vector<Instr> body;
  for (int i = 0; i < 5; ++i) body.push_back(Instr::assign("c", eb::tru()));
  IrProgram p = make_prog({make_fn("f", std::move(body))});
  TimingModel m;  // every opcode defaults to one cycle
  CHECK(wcet_ok(p, "f", m) == 5);
}

TEST_CASE("branch cost is the branch instruction plus its costlier arm") {
  // 0: branch (2 cycles), then-arm = assign 5 + join goto 1, else-arm = havoc 3
  IrProgram p = make_prog({make_fn("f", {
                                            Instr::branch(flag(), 3),
                                            Instr::assign("c", eb::tru()),
                                            Instr::jump(4),
                                            Instr::havoc("c"),
                                        })});
  TimingModel m;
  m.op_cost["if_goto"] = 2;
  m.op_cost["assign"] = 5;
  m.op_cost["goto"] = 1;
  m.op_cost["havoc"] = 3;
  CHECK(wcet_ok(p, "f", m) == 2 + 5 + 1);  // max(5 + 1, 3) plus the branch itself
}

TEST_CASE("bounded loop expands to iterations times body plus final test") {
  // Header test 2 cycles, one-iteration cost 9 (test 2 + body 6 + backedge 1),
  // bound 10: 10 * 9 + the exit evaluation of the test = 92.
  LoopInfo loop;
  loop.id = "f.L0";
  loop.header = 0;
  loop.backedge = 2;
  IrProgram p = make_prog({make_fn("f",
                                   {
                                       Instr::branch(flag(), 3),
                                       Instr::assign("c", eb::tru()),
                                       Instr::jump(0),
                                   },
                                   {loop})});
  TimingModel m;
  m.op_cost["if_goto"] = 2;
  m.op_cost["assign"] = 6;
  m.op_cost["goto"] = 1;
  m.loop_iters["f.L0"] = 10;
  CHECK(wcet_ok(p, "f", m) == 92);

  m.loop_iters["f.L0"] = 1;
  CHECK(wcet_ok(p, "f", m) == 9 + 2);
}

TEST_CASE("nested loops multiply out innermost first") {
  LoopInfo outer;
  outer.id = "f.L0";
  outer.header = 0;
  outer.backedge = 5;
  LoopInfo inner;
  inner.id = "f.L1";
  inner.header = 1;
  inner.backedge = 3;
  IrProgram p = make_prog({make_fn("f",
                                   {
                                       Instr::branch(flag(), 6),
                                       Instr::branch(flag(), 4),
                                       Instr::assign("c", eb::tru()),
                                       Instr::jump(1),
                                       Instr::assign("c", eb::fls()),
                                       Instr::jump(0),
                                   },
                                   {outer, inner})});
  TimingModel m;
  m.loop_iters["f.L0"] = 3;
  m.loop_iters["f.L1"] = 4;
  // inner: 4 * (1 + 1 + 1) + 1 = 13; outer iteration: 1 + 13 + 1 + 1 = 16;
  // whole loop: 3 * 16 + 1 = 49.
  CHECK(wcet_ok(p, "f", m) == 49);
}

TEST_CASE("calls add the callee's worst case at each site") {
  IrProgram p = make_prog({
      make_fn("h", {Instr::assign("c", eb::tru()), Instr::assign("c", eb::fls())}),
      make_fn("g", {Instr::call("h"), Instr::assign("c", eb::tru())}),
      make_fn("f", {Instr::call("g"), Instr::call("g"), Instr::assign("c", eb::tru())}),
  });
  TimingModel m;
  // h = 2; g = (1 + 2) + 1 = 4; f = (1 + 4) * 2 + 1 = 11.
  CHECK(wcet_ok(p, "f", m) == 11);
}

TEST_CASE("recursion is rejected with a diagnostic") {
  IrProgram p = make_prog({make_fn("f", {Instr::call("f")})});
  TimingModel m;
  Diagnostics d;
  CHECK_FALSE(wcet(p, "f", m, d).has_value());
  REQUIRE_FALSE(d.empty());
  CHECK(d.front().message.find("cycle") != std::string::npos);
}

TEST_CASE("missing loop bound fails naming the loop") {
  IrProgram p = lowered(R"(
fn main() {
  u8 n = 0;
  while (n < 200) {
    n = n + 1;
  }
}
)");
  TimingModel m;
  Diagnostics d;
  CHECK_FALSE(wcet(p, "main", m, d).has_value());
  REQUIRE_FALSE(d.empty());
  CHECK(d.front().message.find("main.L0") != std::string::npos);
  CHECK(d.front().message.find("bound") != std::string::npos);

  m.loop_iters["main.L0"] = 200;
  Diagnostics d2;
  CHECK(wcet(p, "main", m, d2).has_value());
  CHECK(d2.empty());
}

TEST_CASE("counted loops carry their own bound") {
  IrProgram p = lowered(R"(
fn main() {
  u32 s = 0;
  for i in 0..8 {
    s = s + i;
  }
}
)");
  TimingModel none;
  uint64_t base = wcet_ok(p, "main", none);

  TimingModel five;
  five.loop_iters["main.L0"] = 5;
  uint64_t shorter = wcet_ok(p, "main", five);
  TimingModel six;
  six.loop_iters["main.L0"] = 6;
  // One more iteration costs exactly one header + body + increment + backedge.
  CHECK(wcet_ok(p, "main", six) - shorter == 4);
  CHECK(base - shorter == 3 * 4);  // the static trip of 8 was used unprompted
}

TEST_CASE("worst case ignores functions unreachable from the entry") {
  IrProgram p = lowered(R"(
fn helper() -> u8 {
  u8 a = 1;
  a = a + 1;
  a = a + 1;
  return a;
}

fn main() {
  u8 x = 2;
  x = x + 1;
}
)");
  TimingModel m;
  uint64_t before = wcet_ok(p, "main", m);

  auto dead = analysis::dead_code(p, "main");
  REQUIRE(dead.functions.count("helper") == 1);
  IrProgram pruned = p;
  for (const auto& fn : dead.functions) pruned.functions.erase(fn);
  CHECK(wcet_ok(pruned, "main", m) == before);
}

TEST_CASE("opcode costs default to one cycle and never drop below it") {
  TimingModel m;
  CHECK(op_cost_of(m, Op::Assign) == 1);
  m.op_cost["assign"] = 0;
  CHECK(op_cost_of(m, Op::Assign) == 1);
  m.op_cost["assign"] = 7;
  CHECK(op_cost_of(m, Op::Assign) == 7);
  CHECK(std::string(op_name(Op::MmioRead)) == "mmio_read");
  CHECK(std::string(op_name(Op::IfGoto)) == "if_goto");
}

TEST_CASE("response time iterates the preemption recurrence to its fixed point") {
  auto r = response_time(rat(2), {{rat(1), rat(4)}}, rat(1000));
  REQUIRE(r.has_value());
  CHECK(*r == rat(3));

  auto headline = response_time(
      rat(27, 10), {{rat(6, 100), rat(5)}, {rat(65, 1000), rat(5, 2)}}, rat(5));
  REQUIRE(headline.has_value());
  CHECK(*headline == rat(289, 100));
  CHECK(to_decimal(*headline) == "2.89");
}

TEST_CASE("response time of an uninterrupted task is its own cost") {
  auto r = response_time(rat(27, 10), {}, rat(5));
  REQUIRE(r.has_value());
  CHECK(*r == rat(27, 10));
}

TEST_CASE("full utilization means the task may never run") {
  CHECK_FALSE(response_time(rat(1), {{rat(1), rat(1)}}, rat(1000)).has_value());
  CHECK_FALSE(response_time(rat(1), {{rat(2), rat(3)}, {rat(1), rat(3)}}, rat(1000)).has_value());
}

TEST_CASE("iteration past the caller's cap reports unbounded") {
  // Utilization 0.5 converges to 2 eventually, but the cap cuts the search.
  CHECK_FALSE(response_time(rat(1), {{rat(1, 2), rat(1)}}, rat(9, 5)).has_value());
  auto r = response_time(rat(1), {{rat(1, 2), rat(1)}}, rat(2));
  REQUIRE(r.has_value());
  CHECK(*r == rat(2));
}

TEST_CASE("response time never decreases under heavier interrupt load") {
  auto base = response_time(rat(2), {{rat(1), rat(4)}}, rat(1000));
  auto fatter = response_time(rat(2), {{rat(3, 2), rat(4)}}, rat(1000));
  auto denser = response_time(rat(2), {{rat(1), rat(2)}}, rat(1000));
  REQUIRE(base.has_value());
  REQUIRE(fatter.has_value());
  REQUIRE(denser.has_value());
  CHECK(*base <= *fatter);
  CHECK(*base <= *denser);
  CHECK(rat(2) <= *base);  // response includes the task's own cost
  CHECK(rat(2) <= *fatter);
  CHECK(rat(2) <= *denser);
}

TEST_CASE("schedulable means the response fits strictly inside the period") {
  TimingModel m;
  m.period_ms = rat(5);
  CHECK(schedulability(m, rat(289, 100)) == TimingVerdict::Schedulable);
  CHECK(schedulability(m, rat(51, 10)) == TimingVerdict::NotSchedulable);
  CHECK(schedulability(m, rat(5)) == TimingVerdict::NotSchedulable);
  CHECK(schedulability(m, std::nullopt) == TimingVerdict::NotSchedulable);
}

TEST_CASE("a watermark above the computed response wins over every other verdict") {
  TimingModel m;
  m.period_ms = rat(5);
  m.watermark_ms = rat(32, 10);
  CHECK(schedulability(m, rat(289, 100)) == TimingVerdict::WatermarkViolation);
  m.watermark_ms = rat(289, 100);  // equal measurement is consistent
  CHECK(schedulability(m, rat(289, 100)) == TimingVerdict::Schedulable);
  m.watermark_ms = rat(32, 10);
  CHECK(schedulability(m, std::nullopt) == TimingVerdict::NotSchedulable);
  CHECK(std::string(timing_verdict_name(TimingVerdict::WatermarkViolation)) ==
        "watermark-violation");
}

TEST_CASE("cycle counts convert exactly into milliseconds") {
  CHECK(cycles_to_ms(2890, 1000) == rat(289, 100));
  CHECK(cycles_to_ms(92, 8000) == rat(92, 8000));
  CHECK(to_decimal(cycles_to_ms(2890, 1000)) == "2.89");
}

TEST_CASE("the pieces compose into a schedulability verdict") {
  LoopInfo loop;
  loop.id = "f.L0";
  loop.header = 0;
  loop.backedge = 2;
  IrProgram p = make_prog({make_fn("f",
                                   {
                                       Instr::branch(flag(), 3),
                                       Instr::assign("c", eb::tru()),
                                       Instr::jump(0),
                                   },
                                   {loop})});
  TimingModel m;
  m.op_cost["if_goto"] = 2;
  m.op_cost["assign"] = 6;
  m.op_cost["goto"] = 1;
  m.loop_iters["f.L0"] = 10;
  m.cycles_per_ms = 100;
  m.period_ms = rat(5);
  m.interrupts.push_back({"uart", 6, 500});      // 0.06 ms every 5 ms
  m.interrupts.push_back({"trigger", 13, 250});  // 0.13 ms every 2.5 ms

  uint64_t cycles = wcet_ok(p, "f", m);
  CHECK(cycles == 92);
  Rat c = cycles_to_ms(cycles, m.cycles_per_ms);
  CHECK(c == rat(92, 100));

  std::vector<std::pair<Rat, Rat>> irqs;
  for (const auto& irq : m.interrupts)
    irqs.emplace_back(cycles_to_ms(irq.wcet_cycles, m.cycles_per_ms),
                      cycles_to_ms(irq.mint_cycles, m.cycles_per_ms));
  auto wcrt = response_time(c, irqs, m.period_ms);
  REQUIRE(wcrt.has_value());
  // 0.92 + 0.06 + 0.13 = 1.11; both ceilings stay at one trigger inside 1.11 ms.
  CHECK(*wcrt == rat(111, 100));
  CHECK(schedulability(m, wcrt) == TimingVerdict::Schedulable);
}
