#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "irbmc/bitblast.h"
#include "irbmc/cnf.h"
#include "irbmc/diagnostics.h"
#include "irbmc/expr.h"
#include "irbmc/solver.h"

using namespace irbmc;
using sat::CnfFormula;
using sat::Encoder;
using sat::Lit;
using sat::SolveLimits;
using sat::SolveStatus;

namespace {

bool lit_value(Lit l, const std::vector<bool>& model) {
  return l > 0 ? model[size_t(l)] : !model[size_t(-l)];
}

uint64_t read_bits(const std::vector<Lit>& bs, const std::vector<bool>& model) {
  uint64_t v = 0;
  for (size_t i = 0; i < bs.size(); ++i)
    if (lit_value(bs[i], model)) v |= uint64_t{1} << i;
  return v;
}

// Binary-operator circuit over two free operands. Concrete pairs are
// evaluated by copying the formula, pinning the operand bits with unit
// clauses and solving.
struct BinCircuit {
  CnfFormula base;
  std::vector<Lit> a, b, out;

  BinCircuit(BinOp op, Ty t) {
    Encoder enc(base);
    a = enc.var_bits("a", t);
    b = enc.var_bits("b", t);
    out = enc.bits(eb::binary(op, eb::var("a", t), eb::var("b", t)));
  }

  uint64_t run(uint64_t va, uint64_t vb) const {
    CnfFormula f = base;
    for (size_t i = 0; i < a.size(); ++i)
      f.add_clause({(va >> i) & 1 ? a[i] : -a[i]});
    for (size_t i = 0; i < b.size(); ++i)
      f.add_clause({(vb >> i) & 1 ? b[i] : -b[i]});
    auto r = sat::solve(f);
    REQUIRE(r.status == SolveStatus::Sat);
    return read_bits(out, r.model);
  }
};

const uint64_t kGrid[] = {0, 1, 2, 3, 7, 8, 15, 127, 128, 129, 254, 255};

void check_binop_grid(BinOp op, Ty t) {
  BinCircuit c(op, t);
  for (uint64_t va : kGrid) {
    for (uint64_t vb : kGrid) {
      uint64_t got = c.run(va, vb);
      uint64_t want = eval_binop(op, t, va, vb);
      if (got != want) {
        CAPTURE(int(op));
        CAPTURE(ty_name(t));
        CAPTURE(va);
        CAPTURE(vb);
        CHECK(got == want);
        return;
      }
    }
  }
  CHECK(true);
}

uint32_t lcg(uint32_t& s) { return s = s * 1664525u + 1013904223u; }

}  // namespace

TEST_CASE("dimacs export matches the pinned layout") {
  CnfFormula f;
  f.new_var();
  f.new_var();
  f.add_clause({1, 2});
  f.add_clause({-1});
  CHECK(sat::export_dimacs(f) == "p cnf 2 2\n1 2 0\n-1 0\n");

  CnfFormula empty;
  CHECK(sat::export_dimacs(empty) == "p cnf 0 0\n");
}

TEST_CASE("dimacs export carries variable annotations as comments") {
  CnfFormula f;
  Lit x = f.new_var();
  f.annotate(x, "speed", 3);
  f.add_clause({x});
  std::string out = sat::export_dimacs(f);
  CHECK(out.find("c 1 speed[3]\n") != std::string::npos);
  CHECK(out.find("p cnf 1 1\n") != std::string::npos);
}

TEST_CASE("trivial formulas") {
  CnfFormula empty;
  auto r = sat::solve(empty);
  CHECK(r.status == SolveStatus::Sat);

  CnfFormula unit;
  unit.new_var();
  unit.add_clause({1});
  r = sat::solve(unit);
  REQUIRE(r.status == SolveStatus::Sat);
  CHECK(r.model.at(1) == true);

  CnfFormula contra;
  contra.new_var();
  contra.add_clause({1});
  contra.add_clause({-1});
  CHECK(sat::solve(contra).status == SolveStatus::Unsat);

  CnfFormula empty_clause;
  empty_clause.add_clause({});
  CHECK(sat::solve(empty_clause).status == SolveStatus::Unsat);
}

TEST_CASE("all four binary combinations over two variables are unsat") {
  CnfFormula f;
  f.new_var();
  f.new_var();
  f.add_clause({1, 2});
  f.add_clause({-1, 2});
  f.add_clause({1, -2});
  f.add_clause({-1, -2});
  auto r = sat::solve(f);
  CHECK(r.status == SolveStatus::Unsat);
  CHECK(r.conflicts >= 1);
}

TEST_CASE("pigeonhole 4 into 3 is unsat") {
  CnfFormula f;
  auto var = [&](int pigeon, int hole) { return Lit(1 + pigeon * 3 + hole); };
  for (int i = 0; i < 12; ++i) f.new_var();
  for (int p = 0; p < 4; ++p)
    f.add_clause({var(p, 0), var(p, 1), var(p, 2)});
  for (int h = 0; h < 3; ++h)
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q)
        f.add_clause({-var(p, h), -var(q, h)});
  CHECK(sat::solve(f).status == SolveStatus::Unsat);
}

TEST_CASE("conflict limit reports unknown") {
  CnfFormula f;
  auto var = [&](int pigeon, int hole) { return Lit(1 + pigeon * 7 + hole); };
  for (int i = 0; i < 56; ++i) f.new_var();
  for (int p = 0; p < 8; ++p) {
    std::vector<Lit> c;
    for (int h = 0; h < 7; ++h) c.push_back(var(p, h));
    f.add_clause(c);
  }
  for (int h = 0; h < 7; ++h)
    for (int p = 0; p < 8; ++p)
      for (int q = p + 1; q < 8; ++q)
        f.add_clause({-var(p, h), -var(q, h)});
  SolveLimits lim;
  lim.max_conflicts = 3;
  auto r = sat::solve(f, lim);
  CHECK(r.status == SolveStatus::Unknown);
  CHECK(!r.limit_message.empty());
}

TEST_CASE("random 3-sat agrees with brute force") {
  const int nvars = 10;
  uint32_t seed = 0xC0FFEEu;
  for (int inst = 0; inst < 40; ++inst) {
    CnfFormula f;
    for (int i = 0; i < nvars; ++i) f.new_var();
    int nclauses = 20 + int(lcg(seed) % 31);
    for (int c = 0; c < nclauses; ++c) {
      std::vector<Lit> cl;
      for (int k = 0; k < 3; ++k) {
        Lit v = Lit(1 + lcg(seed) % nvars);
        cl.push_back(lcg(seed) & 1 ? v : -v);
      }
      f.add_clause(cl);
    }

    bool expect_sat = false;
    for (uint32_t m = 0; m < (1u << nvars) && !expect_sat; ++m) {
      bool all = true;
      for (const auto& cl : f.clauses) {
        bool any = false;
        for (Lit l : cl) {
          bool b = l > 0 ? (m >> (l - 1)) & 1 : !((m >> (-l - 1)) & 1);
          any = any || b;
        }
        if (!any) {
          all = false;
          break;
        }
      }
      expect_sat = all;
    }

    auto r = sat::solve(f);
    CAPTURE(inst);
    REQUIRE(r.status == (expect_sat ? SolveStatus::Sat : SolveStatus::Unsat));
    if (r.status == SolveStatus::Sat) {
      for (const auto& cl : f.clauses) {
        bool any = false;
        for (Lit l : cl) any = any || lit_value(l, r.model);
        REQUIRE(any);
      }
    }
  }
}

TEST_CASE("solver is deterministic") {
  CnfFormula f;
  auto var = [&](int pigeon, int hole) { return Lit(1 + pigeon * 4 + hole); };
  for (int i = 0; i < 20; ++i) f.new_var();
  for (int p = 0; p < 5; ++p)
    f.add_clause({var(p, 0), var(p, 1), var(p, 2), var(p, 3)});
  for (int h = 0; h < 4; ++h)
    for (int p = 0; p < 5; ++p)
      for (int q = p + 1; q < 5; ++q)
        f.add_clause({-var(p, h), -var(q, h)});
  auto r1 = sat::solve(f);
  auto r2 = sat::solve(f);
  CHECK(r1.status == SolveStatus::Unsat);
  CHECK(r1.conflicts == r2.conflicts);
  CHECK(r1.decisions == r2.decisions);
}

TEST_CASE("arithmetic circuits match the evaluator on a value grid") {
  for (Ty t : {Ty::U8, Ty::I8}) {
    check_binop_grid(BinOp::Add, t);
    check_binop_grid(BinOp::Sub, t);
    check_binop_grid(BinOp::Mul, t);
    check_binop_grid(BinOp::BitAnd, t);
    check_binop_grid(BinOp::BitOr, t);
    check_binop_grid(BinOp::BitXor, t);
  }
}

TEST_CASE("division and remainder match the evaluator, including zero divisors") {
  for (Ty t : {Ty::U8, Ty::I8}) {
    check_binop_grid(BinOp::Div, t);
    check_binop_grid(BinOp::Rem, t);
  }
}

TEST_CASE("signed minimum divided by minus one wraps") {
  BinCircuit div(BinOp::Div, Ty::I8);
  CHECK(div.run(0x80, 0xFF) == 0x80);
  BinCircuit rem(BinOp::Rem, Ty::I8);
  CHECK(rem.run(0x80, 0xFF) == 0);
}

TEST_CASE("shifts match the evaluator, including oversized amounts") {
  for (Ty t : {Ty::U8, Ty::I8}) {
    check_binop_grid(BinOp::Shl, t);
    check_binop_grid(BinOp::Shr, t);
  }
}

TEST_CASE("comparisons match the evaluator") {
  for (Ty t : {Ty::U8, Ty::I8}) {
    for (BinOp op : {BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge})
      check_binop_grid(op, t);
  }
}

TEST_CASE("wide operands keep the same semantics") {
  BinCircuit add(BinOp::Add, Ty::U16);
  CHECK(add.run(0xFFFF, 1) == 0);
  CHECK(add.run(0x1234, 0x0EDC) == 0x2110);
  BinCircuit div(BinOp::Div, Ty::I16);
  CHECK(div.run(uint64_t(int64_t(-300)) & 0xFFFF, 7) == (uint64_t(int64_t(-42)) & 0xFFFF));
  BinCircuit shl(BinOp::Shl, Ty::U16);
  CHECK(shl.run(1, 15) == 0x8000);
  CHECK(shl.run(1, 16) == 0);
}

TEST_CASE("unary circuits match the evaluator") {
  CnfFormula base;
  Encoder enc(base);
  auto av = enc.var_bits("a", Ty::U8);
  auto neg_bits = enc.bits(eb::neg(eb::var("a", Ty::U8)));
  auto not_bits = enc.bits(eb::bnot(eb::var("a", Ty::U8)));
  for (uint64_t va : kGrid) {
    CnfFormula f = base;
    for (size_t i = 0; i < av.size(); ++i)
      f.add_clause({(va >> i) & 1 ? av[i] : -av[i]});
    auto r = sat::solve(f);
    REQUIRE(r.status == SolveStatus::Sat);
    CHECK(read_bits(neg_bits, r.model) == eval_unop(UnOp::Neg, Ty::U8, va));
    CHECK(read_bits(not_bits, r.model) == eval_unop(UnOp::BitNot, Ty::U8, va));
  }
}

TEST_CASE("boolean connectives") {
  CnfFormula base;
  Encoder enc(base);
  Lit p = enc.var_bits("p", Ty::Bool)[0];
  Lit q = enc.var_bits("q", Ty::Bool)[0];
  auto pv = eb::var("p", Ty::Bool);
  auto qv = eb::var("q", Ty::Bool);
  Lit conj = enc.bit(eb::land(pv, qv));
  Lit disj = enc.bit(eb::lor(pv, qv));
  Lit negp = enc.bit(eb::lnot(pv));
  for (int vp = 0; vp < 2; ++vp) {
    for (int vq = 0; vq < 2; ++vq) {
      CnfFormula f = base;
      f.add_clause({vp ? p : -p});
      f.add_clause({vq ? q : -q});
      auto r = sat::solve(f);
      REQUIRE(r.status == SolveStatus::Sat);
      CHECK(lit_value(conj, r.model) == (vp && vq));
      CHECK(lit_value(disj, r.model) == (vp || vq));
      CHECK(lit_value(negp, r.model) == !vp);
    }
  }
}

TEST_CASE("select with equal arms is that value") {
  CnfFormula f;
  Encoder enc(f);
  enc.var_bits("c", Ty::Bool);
  auto five = eb::cnst(5, Ty::U8);
  auto sel = eb::select(eb::var("c", Ty::Bool), five, five);
  enc.assert_true(eb::ne(sel, five));
  CHECK(sat::solve(f).status == SolveStatus::Unsat);
}

TEST_CASE("select follows its condition") {
  CnfFormula base;
  Encoder enc(base);
  Lit c = enc.var_bits("c", Ty::Bool)[0];
  auto sel = enc.bits(eb::select(eb::var("c", Ty::Bool), eb::cnst(11, Ty::U8),
                                 eb::cnst(22, Ty::U8)));
  for (int vc = 0; vc < 2; ++vc) {
    CnfFormula f = base;
    f.add_clause({vc ? c : -c});
    auto r = sat::solve(f);
    REQUIRE(r.status == SolveStatus::Sat);
    CHECK(read_bits(sel, r.model) == (vc ? 11u : 22u));
  }
}

TEST_CASE("casts match the evaluator") {
  struct Case {
    Ty from, to;
  };
  const Case cases[] = {
      {Ty::U8, Ty::U16}, {Ty::I8, Ty::I16}, {Ty::I8, Ty::U16},
      {Ty::U16, Ty::U8}, {Ty::I16, Ty::I8}, {Ty::U16, Ty::I8},
  };
  for (const auto& cs : cases) {
    CnfFormula base;
    Encoder enc(base);
    auto av = enc.var_bits("a", cs.from);
    auto out = enc.bits(eb::cast(eb::var("a", cs.from), cs.to));
    for (uint64_t raw : kGrid) {
      uint64_t va = wrap(raw * 257, cs.from);
      CnfFormula f = base;
      for (size_t i = 0; i < av.size(); ++i)
        f.add_clause({(va >> i) & 1 ? av[i] : -av[i]});
      auto r = sat::solve(f);
      REQUIRE(r.status == SolveStatus::Sat);
      CAPTURE(ty_name(cs.from));
      CAPTURE(ty_name(cs.to));
      CAPTURE(va);
      CHECK(read_bits(out, r.model) == eval_cast(va, cs.from, cs.to));
    }
  }
}

TEST_CASE("value_of reads an annotated variable from a model") {
  CnfFormula f;
  Encoder enc(f);
  enc.var_bits("x", Ty::U8);
  enc.assert_true(eb::eq(eb::var("x", Ty::U8), eb::cnst(200, Ty::U8)));
  auto r = sat::solve(f);
  REQUIRE(r.status == SolveStatus::Sat);
  CHECK(enc.value_of("x", Ty::U8, r.model) == 200);
}

TEST_CASE("constraint solving finds operands, not just outputs") {
  // x * x == 49 over u8 has exactly the models 7, 249, 121, 135.
  CnfFormula f;
  Encoder enc(f);
  enc.var_bits("x", Ty::U8);
  auto xv = eb::var("x", Ty::U8);
  enc.assert_true(eb::eq(eb::mul(xv, xv), eb::cnst(49, Ty::U8)));
  auto r = sat::solve(f);
  REQUIRE(r.status == SolveStatus::Sat);
  uint64_t x = enc.value_of("x", Ty::U8, r.model);
  CHECK(eval_binop(BinOp::Mul, Ty::U8, x, x) == 49);
}

TEST_CASE("nondet and index nodes are rejected by the encoder") {
  CnfFormula f;
  Encoder enc(f);
  CHECK_THROWS_AS(enc.bits(eb::nondet(Ty::U8)), InternalError);
  CHECK_THROWS_AS(
      enc.bits(eb::index("arr", Ty::U8, eb::cnst(1, Ty::U8))), InternalError);
}
