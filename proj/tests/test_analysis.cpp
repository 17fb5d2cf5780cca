#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>

#include "irbmc/analysis.h"
#include "irbmc/frontend.h"
#include "irbmc/oracle.h"

using namespace irbmc;
using namespace irbmc::analysis;

namespace {

IrProgram lowered(const std::string& src) {
  auto r = minic::lower(src);
  if (!r.program)
    FAIL((r.diagnostics.empty() ? std::string("lowering failed")
                                : to_string(r.diagnostics.front())));
  return *r.program;
}

}  // namespace

TEST_CASE("a variable read later is live, a redefined one is not") {
  IrProgram p = lowered(R"(
    u8 x = 0;
    u8 y = 0;
    fn main() {
      x = 1;
      y = x;
    }
  )");
  auto live = live_variables(p, {"main", 1});
  CHECK(live.count("x") == 1);
  CHECK(live.count("y") == 0);

  IrProgram q = lowered(R"(
    u8 x = 0;
    u8 y = 0;
    fn main() {
      x = 1;
      x = 2;
      y = x;
    }
  )");
  CHECK(live_variables(q, {"main", 1}).count("x") == 0);
}

TEST_CASE("liveness is interprocedural through call summaries") {
  IrProgram p = lowered(R"(
    u8 g = 0;
    u8 h = 0;
    fn reads_g() -> u8 { return g; }
    fn writes_h() { h = 5; }
    fn main() {
      g = 1;
      h = 2;
      writes_h();
      g = reads_g();
      assert(g + h < 20);
    }
  )");
  auto at3 = live_variables(p, {"main", 3});
  CHECK(at3.count("g") == 1);
  CHECK(at3.count("h") == 1);

  // writes_h overwrites h on every path, so h is dead before the call and
  // the store h = 2 is dead too.
  auto at2 = live_variables(p, {"main", 2});
  CHECK(at2.count("g") == 1);
  CHECK(at2.count("h") == 0);
  CHECK(live_variables(p, {"main", 1}).count("h") == 0);
}

TEST_CASE("liveness flows out of a callee into the caller's continuation") {
  IrProgram p = lowered(R"(
    u8 acc = 0;
    u8 out = 0;
    fn step() { acc = acc + 1; }
    fn main() {
      acc = 3;
      step();
      out = acc;
      assert(out < 10);
    }
  )");
  // Inside step, acc stays live because main reads it after the call.
  auto inside = live_variables(p, {"step", 1});
  CHECK(inside.count("acc") == 1);
}

TEST_CASE("variables referenced by an isr are live everywhere") {
  IrProgram p = lowered(R"(
    @shared u8 s = 0;
    u8 quiet = 0;
    @interrupt(t, mint=100) fn isr() { s = s + 1; }
    fn main() {
      quiet = 1;
      quiet = 2;
    }
  )");
  auto live = live_variables(p, {"main", 0});
  CHECK(live.count("s") == 1);
  CHECK(live.count("quiet") == 0);
  CHECK(live_variables(p, {"main", 2}).count("s") == 1);
}

TEST_CASE("invalid points are rejected") {
  IrProgram p = lowered("fn main() { }");
  CHECK_THROWS_AS(live_variables(p, {"nosuch", 0}), InternalError);
  CHECK_THROWS_AS(live_variables(p, {"main", 99}), InternalError);
  CHECK_NOTHROW(live_variables(p, {"main", 0}));
}

static const char* kThreeModes = R"(
  u8 a = 0;
  u8 b = 0;
  @mode(one, 0) fn m1() { a = 1; }
  @mode(two, 1) fn m2() { b = a; }
  @mode(three, 2) fn m3() { assert(b < 10); }
)";

TEST_CASE("three modes yield two interfaces with boundary liveness") {
  IrProgram p = lowered(kThreeModes);
  Diagnostics diags;
  auto ifs = mode_interfaces(p, {}, diags);
  CHECK(!has_errors(diags));
  REQUIRE(ifs.size() == 2);
  CHECK(ifs[0].predecessor == "one");
  CHECK(ifs[0].successor == "two");
  CHECK(ifs[0].live.count("a") == 1);
  CHECK(ifs[0].live.count("b") == 0);
  CHECK(ifs[1].predecessor == "two");
  CHECK(ifs[1].successor == "three");
  CHECK(ifs[1].live.count("b") == 1);
  CHECK(ifs[1].live.count("a") == 0);
}

TEST_CASE("a range on a live variable is attached; on a dead one it warns and is kept") {
  IrProgram p = lowered(kThreeModes);
  std::map<BoundaryKey, VarRanges> ranges;
  ranges[{"one", "two"}]["a"] = {0, 5};
  Diagnostics diags;
  auto ifs = mode_interfaces(p, ranges, diags);
  REQUIRE(ifs.size() == 2);
  CHECK(diags.empty());
  REQUIRE(ifs[0].ranges.count("a") == 1);
  CHECK(ifs[0].ranges.at("a") == std::pair<int64_t, int64_t>{0, 5});

  ranges.clear();
  ranges[{"one", "two"}]["b"] = {0, 9};
  diags.clear();
  ifs = mode_interfaces(p, ranges, diags);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].severity == Severity::Warning);
  CHECK(ifs[0].ranges.count("b") == 1);
  CHECK(ifs[0].live.count("b") == 1);

  ranges.clear();
  ranges[{"one", "two"}]["nosuch"] = {0, 9};
  diags.clear();
  ifs = mode_interfaces(p, ranges, diags);
  CHECK(has_errors(diags));
}

TEST_CASE("single-mode and mode-free programs have no interfaces") {
  IrProgram p = lowered("@mode(only, 0) fn m() { }");
  Diagnostics diags;
  CHECK(mode_interfaces(p, {}, diags).empty());
  CHECK(diags.empty());

  IrProgram q = lowered("fn main() { }");
  CHECK(mode_interfaces(q, {}, diags).empty());
}

TEST_CASE("the whole-program driver sequences the modes") {
  IrProgram p = lowered(kThreeModes);
  std::string entry = add_whole_driver(p);
  CHECK(entry == "__whole");
  CHECK(validate(p).empty());
  const Function* drv = p.find_function(entry);
  REQUIRE(drv);
  REQUIRE(drv->body.size() == 4);
  CHECK(drv->body[0].callee == "m1");
  CHECK(drv->body[1].callee == "m2");
  CHECK(drv->body[2].callee == "m3");

  auto out = oracle::enumerate_executions(p, [] {
    oracle::Options o;
    o.entry = "__whole";
    return o;
  }());
  REQUIRE(out.ok());
  CHECK(out.violated.empty());
  CHECK(out.executions == 1);

  IrProgram plain = lowered("fn main() { }");
  CHECK(add_whole_driver(plain) == "main");
}

TEST_CASE("dead code keeps isr-reachable functions and drops the rest") {
  IrProgram p = lowered(R"(
    u8 g = 0;
    u8 dead_g = 0;
    @shared u8 s = 0;
    fn helper() -> u8 { return 1; }
    fn from_isr() { s = 2; }
    fn unused() { dead_g = 1; }
    @interrupt(t, mint=100) fn isr() { from_isr(); }
    fn main() { g = helper(); }
  )");
  auto dc = dead_code(p, "main");
  CHECK(dc.functions == std::set<std::string>{"unused"});
  CHECK(dc.globals == std::set<std::string>{"dead_g"});
}

TEST_CASE("mmio sites resolve literal, const and single-assignment addresses") {
  IrProgram p = lowered(R"(
    const u16 BARO = 0x26;
    u16 x = 0;
    fn direct() { x = [0x25]; }
    fn via_const() { x = [BARO]; }
    fn via_chain() {
      u16 addr = 0x30;
      x = [addr];
    }
    fn via_nondet() {
      u16 addr = nondet_u16();
      x = [addr];
    }
    fn store() { [0x40] = x; }
    fn main() { direct(); via_const(); via_chain(); via_nondet(); store(); }
  )");
  Diagnostics diags;
  auto sites = mmio_sites(p, diags);
  REQUIRE(sites.size() == 5);

  auto find = [&](const std::string& fn) -> const MmioSite& {
    for (const auto& s : sites)
      if (s.function == fn) return s;
    FAIL(("no site in " + fn).c_str());
    return sites[0];
  };
  CHECK(find("direct").address == 0x25);
  CHECK(find("via_const").address == 0x26);
  CHECK(find("via_chain").address == 0x30);
  CHECK(!find("via_nondet").address.has_value());
  CHECK(find("store").is_write);
  CHECK(find("store").address == 0x40);

  REQUIRE(diags.size() == 1);
  CHECK(diags[0].severity == Severity::Warning);
  CHECK(diags[0].message.find("via_nondet") != std::string::npos);
}

static const char* kRetryLoop = R"(
  bool ready = false;
  u8 status = 0;
  fn main() {
    while (!ready) {
      havoc(ready);
    }
    status = 7;
    assert(status == 7);
  }
)";

TEST_CASE("a pure wait loop is removable") {
  IrProgram p = lowered(kRetryLoop);
  auto ga = guard_removability(p, "main.L0", true);
  CHECK(ga.verdict == GuardVerdict::Removable);
  CHECK(ga.impact.count("ready") == 1);
  CHECK(ga.variant.count("ready") == 1);
  CHECK(ga.live_after.count("ready") == 0);
}

TEST_CASE("a loop feeding data past its exit is not removable") {
  IrProgram p = lowered(R"(
    u8 retries = 0;
    bool ready = false;
    u8 out = 0;
    fn main() {
      while (!ready) {
        havoc(ready);
        retries = retries + 1;
      }
      out = retries;
      assert(out < 100);
    }
  )");
  auto ga = guard_removability(p, "main.L0", true);
  CHECK(ga.verdict == GuardVerdict::NotRemovable);
  CHECK(ga.impact.count("retries") == 1);
  CHECK(ga.variant.count("retries") == 1);
  CHECK(ga.live_after.count("retries") == 1);
}

TEST_CASE("without the eventually-true annotation the verdict is bound-required") {
  IrProgram p = lowered(kRetryLoop);
  auto ga = guard_removability(p, "main.L0", false);
  CHECK(ga.verdict == GuardVerdict::BoundRequired);
  CHECK(ga.impact.count("ready") == 1);
}

TEST_CASE("unknown loop ids are rejected") {
  IrProgram p = lowered(kRetryLoop);
  CHECK_THROWS_AS(guard_removability(p, "main.L9", true), InternalError);
  IrProgram q = lowered(kRetryLoop);
  CHECK_THROWS_AS(remove_guard(q, "main.L9"), InternalError);
  CHECK_THROWS_AS(add_retry_bound(q, "main.L9", 3), InternalError);
}

TEST_CASE("removing a removable guard preserves verdicts and terminates") {
  IrProgram p = lowered(kRetryLoop);
  oracle::Options opts;
  opts.step_bound = 200;
  auto before = oracle::enumerate_executions(p, opts);
  REQUIRE(before.ok());
  CHECK(before.violated.empty());

  remove_guard(p, "main.L0");
  CHECK(validate(p).empty());
  CHECK(p.find_function("main")->loops.empty());
  auto after = oracle::enumerate_executions(p, opts);
  REQUIRE(after.ok());
  CHECK(after.violated.empty());
  CHECK(!after.truncated);
  CHECK(after.executions == 2);
}

TEST_CASE("removing a non-removable guard changes behavior, so the test has teeth") {
  const char* src = R"(
    u8 i = 0;
    fn main() {
      while (i < 3) {
        i = i + 1;
      }
      assert(i == 3);
    }
  )";
  IrProgram p = lowered(src);
  auto ga = guard_removability(p, "main.L0", true);
  CHECK(ga.verdict == GuardVerdict::NotRemovable);

  auto before = oracle::enumerate_executions(p);
  REQUIRE(before.ok());
  CHECK(before.violated.empty());

  remove_guard(p, "main.L0");
  auto after = oracle::enumerate_executions(p);
  REQUIRE(after.ok());
  CHECK(after.violated.size() == 1);
}

TEST_CASE("a retry bound makes a wait loop finite") {
  IrProgram p = lowered(kRetryLoop);
  add_retry_bound(p, "main.L0", 3);
  CHECK(validate(p).empty());
  REQUIRE(p.find_function("main")->loops.size() == 1);
  CHECK(p.find_function("main")->loops[0].static_trip == 3);

  auto out = oracle::enumerate_executions(p);
  REQUIRE(out.ok());
  CHECK(!out.truncated);
  // ready on the 1st, 2nd or 3rd try, or never: exactly four paths.
  CHECK(out.executions == 4);
  CHECK(out.violated.empty());
}
