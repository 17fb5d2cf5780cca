#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "irbmc/frontend.h"
#include "irbmc/oracle.h"

using namespace irbmc;

namespace {

IrProgram lowered(const std::string& src) {
  auto r = minic::lower(src);
  if (!r.program)
    FAIL((r.diagnostics.empty() ? std::string("lowering failed")
                                : to_string(r.diagnostics.front())));
  return std::move(*r.program);
}

oracle::Options opts(unsigned cap = 8) {
  oracle::Options o;
  o.width_cap = cap;
  return o;
}

}  // namespace

TEST_CASE("single bool nondet splits into two executions") {
  IrProgram p = lowered("fn main() { bool x = nondet_bool(); assert(x); }");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.executions == 2);
  CHECK(out.violated == std::set<std::string>{"user:main#2"});
  CHECK_FALSE(out.truncated);
}

TEST_CASE("deterministic straight line is one execution") {
  IrProgram p = lowered(R"(
    u8 g = 3;
    fn main() { u8 x = 2; g = g * x; assert(g == 6); }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.executions == 1);
  CHECK(out.violated.empty());
  REQUIRE(out.final_states.size() == 1);
  CHECK(out.final_states.count("g=6") == 1);
}

TEST_CASE("execution count is the product of choice cardinalities") {
  IrProgram p = lowered(R"(
    u8 y = 0;
    fn main() {
      bool a = nondet_bool();
      bool b = nondet_bool();
      havoc(y); assume(y < 4);
      assert(y < 4);
    }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.executions == 2 * 2 * 4);
  CHECK(out.violated.empty());
}

TEST_CASE("failed assumptions prune instead of counting") {
  IrProgram p = lowered(R"(
    fn main() { bool x = nondet_bool(); assume(x); assert(x); }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.executions == 1);
  CHECK(out.violated.empty());
}

TEST_CASE("an ISR may fire before any instruction") {
  IrProgram p = lowered(R"(
    @shared u8 s = 0;
    @interrupt(t, mint=100) fn isr() { s = 1; }
    fn main() { u8 a = s; assert(a == 0); }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  // three main instructions, each preceded by a fire/skip choice
  CHECK(out.executions == 8);
  CHECK(out.violated == std::set<std::string>{"user:main#1"});
}

TEST_CASE("each ISR fires at most once per boundary") {
  const char* isr = R"(
    @shared u8 s = 0;
    @persistent u8 p = 0;
    @interrupt(t, mint=100) fn isr() { p = p + 1; s = p; }
  )";
  SUBCASE("one boundary before the read caps the count at one") {
    IrProgram p = lowered(std::string(isr) + "fn main() { u8 a = s; assert(a <= 1); }");
    auto out = oracle::enumerate_executions(p, opts());
    REQUIRE(out.ok());
    CHECK(out.violated.empty());
  }
  SUBCASE("an extra instruction adds a boundary and a second firing") {
    IrProgram p = lowered(std::string(isr) +
                          "fn main() { u8 x = 0; u8 a = s; assert(a <= 1); }");
    auto out = oracle::enumerate_executions(p, opts());
    REQUIRE(out.ok());
    CHECK(out.violated == std::set<std::string>{"user:main#2"});
  }
}

TEST_CASE("width cap rejects wide unconstrained nondets") {
  IrProgram p = lowered("fn main() { u8 x = nondet_u8(); assert(x < 10); }");
  auto narrow = oracle::enumerate_executions(p, opts(4));
  CHECK_FALSE(narrow.ok());
  REQUIRE(narrow.errors.size() == 1);
  CHECK(narrow.errors[0].find("width cap") != std::string::npos);

  auto wide = oracle::enumerate_executions(p, opts(8));
  REQUIRE(wide.ok());
  CHECK(wide.executions == 256);
  CHECK(wide.violated == std::set<std::string>{"user:main#2"});
}

TEST_CASE("an adjacent assumption narrows the enumerated domain") {
  IrProgram p = lowered(R"(
    u8 x = 0;
    fn main() { havoc(x); assume(x < 16); assert(x < 16); }
  )");
  auto out = oracle::enumerate_executions(p, opts(4));
  REQUIRE(out.ok());
  CHECK(out.executions == 16);

  IrProgram q = lowered(R"(
    u8 x = 0;
    fn main() { havoc(x); assume(x < 20); assert(x < 20); }
  )");
  auto over = oracle::enumerate_executions(q, opts(4));
  CHECK_FALSE(over.ok());
}

TEST_CASE("wide nondets are enumerable through a constant range assumption") {
  IrProgram p = lowered(R"(
    u16 x = 0;
    fn main() { havoc(x); assume(x >= 100 && x <= 107); assert(x >= 100); }
  )");
  auto out = oracle::enumerate_executions(p, opts(4));
  REQUIRE(out.ok());
  CHECK(out.executions == 8);
  CHECK(out.violated.empty());
}

TEST_CASE("step bound exhaustion reports truncation") {
  IrProgram p = lowered(R"(
    fn main() { u8 i = 0; while (i < 200) { i = i + 1; } }
  )");
  oracle::Options o = opts();
  o.step_bound = 50;
  auto out = oracle::enumerate_executions(p, o);
  REQUIRE(out.ok());
  CHECK(out.truncated);
  CHECK(out.executions == 0);
}

TEST_CASE("out-of-range array accesses read the last element and drop writes") {
  IrProgram p = lowered(R"(
    u8 a[3] = {1, 2, 9};
    fn main() {
      u8 v = a[4];
      assert(v == 9);
      a[7] = 5;
      assert(a[2] == 9);
    }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.violated.empty());
  CHECK(out.executions == 1);
}

TEST_CASE("division by zero follows the pinned semantics") {
  IrProgram p = lowered(R"(
    fn main() {
      u8 n = 7;
      u8 d = 0;
      u8 q = n / d;
      u8 r = n % d;
      assert(q == 0);
      assert(r == 7);
    }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.violated.empty());
}

TEST_CASE("calls pass arguments and return values") {
  IrProgram p = lowered(R"(
    fn add(u8 a, u8 b) -> u8 { return a + b; }
    fn main() { u8 r = add(200, 100); assert(r == 44); }
  )");
  auto out = oracle::enumerate_executions(p, opts());
  REQUIRE(out.ok());
  CHECK(out.executions == 1);
  CHECK(out.violated.empty());
}

TEST_CASE("simulate builds a trace that replay confirms") {
  IrProgram p = lowered(R"(
    fn main() {
      bool a = nondet_bool();
      bool b = nondet_bool();
      assert(!a || b);
    }
  )");
  std::vector<uint64_t> tape{1, 0};
  auto sim = oracle::simulate(p, "main", tape, 1000, "user:main#4");
  REQUIRE(sim.violations.size() == 1);
  CHECK(sim.violations[0] == "user:main#4");

  Counterexample cex;
  cex.property = "user:main#4";
  cex.entry = "main";
  cex.steps = sim.steps;
  cex.nondets = tape;
  auto ok = oracle::replay(p, cex);
  CHECK(ok.reached);

  SUBCASE("a mutated nondet value diverges at its own step") {
    cex.nondets[1] = 1;
    auto bad = oracle::replay(p, cex);
    CHECK_FALSE(bad.reached);
    CHECK(bad.diverged_at == 2);  // the second HAVOC is the third step
  }
  SUBCASE("an exhausted tape diverges") {
    cex.nondets.pop_back();
    auto bad = oracle::replay(p, cex);
    CHECK_FALSE(bad.reached);
    CHECK(bad.message.find("tape") != std::string::npos);
  }
}

TEST_CASE("captured witnesses replay, interleaving markers included") {
  IrProgram p = lowered(R"(
    @shared u8 s = 0;
    @interrupt(t, mint=100) fn isr() { s = 1; }
    fn main() { u8 a = s; assert(a == 0); }
  )");
  oracle::Options o = opts();
  o.capture_witnesses = true;
  auto out = oracle::enumerate_executions(p, o);
  REQUIRE(out.ok());
  REQUIRE(out.witnesses.count("user:main#1") == 1);
  const Counterexample& cex = out.witnesses.at("user:main#1");
  bool has_marker = false;
  for (const auto& st : cex.steps) has_marker = has_marker || st.isr_fire;
  CHECK(has_marker);
  auto rep = oracle::replay(p, cex);
  CHECK(rep.reached);
}

TEST_CASE("enumeration is deterministic") {
  IrProgram p = lowered(R"(
    @shared u8 s = 0;
    @interrupt(t, mint=100) fn isr() { s = s + 1; }
    fn main() {
      u8 a = s;
      u8 b = nondet_u8();
      assert(a + b < 200);
    }
  )");
  auto a = oracle::enumerate_executions(p, opts());
  auto b = oracle::enumerate_executions(p, opts());
  REQUIRE(a.ok());
  CHECK(a.violated == b.violated);
  CHECK(a.executions == b.executions);
  CHECK(a.final_states == b.final_states);
}

TEST_CASE("missing entry function is an error") {
  IrProgram p = lowered("fn helper() { }");
  auto out = oracle::enumerate_executions(p, opts());
  CHECK_FALSE(out.ok());
}
