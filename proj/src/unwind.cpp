#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "irbmc/bmc.h"

namespace irbmc::bmc {

namespace {

[[noreturn]] void bug(const std::string& msg) {
  throw std::logic_error("bmc: " + msg);
}

// Rebuilds e with variables renamed per rn. Nodes without renamed variables
// are returned as-is so sharing survives inlining.
ExprPtr rename_expr(const ExprPtr& e, const std::map<std::string, std::string>& rn) {
  if (!e || rn.empty()) return e;
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::Nondet:
      return e;
    case ExprKind::Var: {
      auto it = rn.find(e->name);
      return it == rn.end() ? e : eb::var(it->second, e->type);
    }
    case ExprKind::Index: {
      auto it = rn.find(e->name);
      ExprPtr sub = rename_expr(e->a, rn);
      if (it == rn.end() && sub == e->a) return e;
      return eb::index(it == rn.end() ? e->name : it->second, e->type, sub);
    }
    case ExprKind::Unary: {
      ExprPtr a = rename_expr(e->a, rn);
      return a == e->a ? e : eb::unary(e->un, a);
    }
    case ExprKind::Cast: {
      ExprPtr a = rename_expr(e->a, rn);
      return a == e->a ? e : eb::cast(a, e->type);
    }
    case ExprKind::Binary: {
      ExprPtr a = rename_expr(e->a, rn);
      ExprPtr b = rename_expr(e->b, rn);
      return a == e->a && b == e->b ? e : eb::binary(e->bin, a, b);
    }
    case ExprKind::Select: {
      ExprPtr a = rename_expr(e->a, rn);
      ExprPtr b = rename_expr(e->b, rn);
      ExprPtr c = rename_expr(e->c, rn);
      return a == e->a && b == e->b && c == e->c ? e : eb::select(a, b, c);
    }
  }
  bug("unhandled expression kind");
}

// A fully inlined body with self-relative jump targets (an index equal to
// the body size means exit) and loop markers in the same coordinates.
struct Expansion {
  std::vector<Instr> body;
  std::vector<LoopInfo> loops;
};

class Inliner {
 public:
  explicit Inliner(const IrProgram& prog) : prog_(prog) {}

  // Expands fn with its locals renamed by prefix. Non-entry instantiations
  // bind params from args and turn RETURN v into an assignment to ret_var
  // (dropped when the caller discards the value) plus a jump to the end.
  Expansion instantiate(const Function& fn, const std::string& prefix,
                        const std::vector<ExprPtr>& args, const std::string& ret_var,
                        bool keep_returns) {
    if (active_.count(fn.name)) bug("recursive call through '" + fn.name + "'");
    active_.insert(fn.name);

    std::map<std::string, std::string> rn;
    for (const auto& [name, sym] : fn.locals) {
      if (!prefix.empty()) rn.emplace(name, prefix + name);
      Symbol renamed = sym;
      renamed.name = prefix + name;
      locals.emplace(renamed.name, std::move(renamed));
    }
    auto local_name = [&](const std::string& n) {
      auto it = rn.find(n);
      return it == rn.end() ? n : it->second;
    };

    Expansion out;
    if (args.size() != fn.params.size()) bug("argument count mismatch calling '" + fn.name + "'");
    for (size_t i = 0; i < args.size(); ++i) {
      Instr p = Instr::assign(local_name(fn.params[i]), args[i], fn.line);
      p.origin_fn = fn.name;
      out.body.push_back(std::move(p));
    }

    // Jumps are emitted with their original targets and patched through
    // pos_map once every instruction's final position is known.
    std::vector<int> pos_map(fn.body.size() + 1, -1);
    std::vector<size_t> jump_fixups;
    for (size_t j = 0; j < fn.body.size(); ++j) {
      pos_map[j] = int(out.body.size());
      const Instr& in = fn.body[j];
      if (in.op == Op::Call) {
        auto it = prog_.functions.find(in.callee);
        if (it == prog_.functions.end()) bug("call to unknown function '" + in.callee + "'");
        std::string sub_prefix = "__i" + std::to_string(instances_++) + "_" + in.callee + "_";
        std::vector<ExprPtr> sub_args;
        sub_args.reserve(in.args.size());
        for (const ExprPtr& a : in.args) sub_args.push_back(rename_expr(a, rn));
        Expansion sub =
            instantiate(it->second, sub_prefix, sub_args, local_name(in.lhs), false);
        int base = int(out.body.size());
        for (Instr& si : sub.body) {
          if (si.op == Op::Goto || si.op == Op::IfGoto) si.target += base;
          out.body.push_back(std::move(si));
        }
        for (LoopInfo& sl : sub.loops) {
          sl.header += base;
          sl.backedge += base;
          out.loops.push_back(std::move(sl));
        }
        continue;
      }
      Instr c = in;
      if (!c.lhs.empty()) c.lhs = local_name(c.lhs);
      c.lhs_index = rename_expr(c.lhs_index, rn);
      c.rhs = rename_expr(c.rhs, rn);
      c.cond = rename_expr(c.cond, rn);
      c.address = rename_expr(c.address, rn);
      if (c.origin_fn.empty()) {
        c.origin_fn = fn.name;
        c.origin_idx = int(j);
      }
      if (c.op == Op::Return && !keep_returns) {
        if (!ret_var.empty() && c.rhs) {
          Instr store = Instr::assign(ret_var, c.rhs, c.line);
          store.origin_fn = c.origin_fn;
          store.origin_idx = c.origin_idx;
          out.body.push_back(std::move(store));
        }
        Instr leave = Instr::jump(int(fn.body.size()));
        leave.origin_fn = c.origin_fn;
        leave.origin_idx = c.origin_idx;
        jump_fixups.push_back(out.body.size());
        out.body.push_back(std::move(leave));
        continue;
      }
      if (c.op == Op::Goto || c.op == Op::IfGoto) jump_fixups.push_back(out.body.size());
      out.body.push_back(std::move(c));
    }
    pos_map[fn.body.size()] = int(out.body.size());

    for (size_t fi : jump_fixups) {
      int orig = out.body[fi].target;
      if (orig < 0 || orig > int(fn.body.size())) bug("dangling jump in '" + fn.name + "'");
      out.body[fi].target = pos_map[orig];
    }
    for (const LoopInfo& l : fn.loops) {
      LoopInfo nl = l;
      nl.header = pos_map[l.header];
      nl.backedge = pos_map[l.backedge];
      out.loops.push_back(std::move(nl));
    }

    active_.erase(fn.name);
    return out;
  }

  std::map<std::string, Symbol> locals;

 private:
  const IrProgram& prog_;
  std::set<std::string> active_;
  int instances_ = 0;
};

// Replaces loop li with bound copies of its iteration region. The region is
// [backedge target, backedge]; after weaving it starts before the header, so
// each replica re-runs the interleaving block ahead of the guard. The check
// block after the last replica models the final guard evaluation: one more
// preheader copy, the optional unwinding assertion, and an ASSUME that cuts
// executions needing further iterations.
void unroll_one(Function& fn, size_t li, uint64_t bound, bool uw_asserts) {
  const LoopInfo loop = fn.loops[li];
  int h = loop.header;
  int b = loop.backedge;
  if (h < 0 || b <= h || b >= int(fn.body.size())) bug("corrupt loop markers for " + loop.id);
  if (fn.body[b].op != Op::Goto) bug("backedge of " + loop.id + " is not a jump");
  if (fn.body[h].op != Op::IfGoto) bug("header of " + loop.id + " is not a branch");
  int t = fn.body[b].target;
  if (t < 0 || t > h) bug("backedge of " + loop.id + " does not close the loop");

  int n = int(bound);
  int region = b - t + 1;
  int pre = h - t;
  int shift = (n - 1) * region + pre + (uw_asserts ? 2 : 1);
  int check_base = t + n * region;
  ExprPtr exit_cond = fn.body[h].cond;

  auto outside = [&](int x) {
    if (x <= t) return x;
    if (x > b) return x + shift;
    bug("jump into the body of " + loop.id);
  };

  std::vector<Instr> out;
  out.reserve(fn.body.size() + size_t(shift));
  for (int j = 0; j < t; ++j) {
    Instr c = fn.body[j];
    if (c.op == Op::Goto || c.op == Op::IfGoto) c.target = outside(c.target);
    out.push_back(std::move(c));
  }
  for (int k = 0; k < n; ++k) {
    for (int j = t; j <= b; ++j) {
      Instr c = fn.body[j];
      if (c.op == Op::Goto || c.op == Op::IfGoto) {
        int x = c.target;
        if (x == t) {
          c.target = t + (k + 1) * region;  // next replica, or the check block
        } else if (x > t && x <= b) {
          c.target = t + k * region + (x - t);
        } else if (x > b) {
          c.target = x + shift;
        } else {
          bug("backward jump out of " + loop.id);
        }
      }
      out.push_back(std::move(c));
    }
  }
  for (int j = t; j < h; ++j) {
    Instr c = fn.body[j];
    if (c.op == Op::Goto || c.op == Op::IfGoto) {
      int x = c.target;
      if (x >= t && x <= h) {
        c.target = check_base + (x - t);
      } else if (x > b) {
        c.target = x + shift;
      } else {
        bug("preheader of " + loop.id + " jumps into the loop body");
      }
    }
    out.push_back(std::move(c));
  }
  const Instr& hdr = fn.body[h];
  if (uw_asserts) {
    Instr a = Instr::assertion(exit_cond, PropertyClass::Unwinding, "unwinding:" + loop.id,
                               hdr.line);
    a.origin_fn = hdr.origin_fn;
    a.origin_idx = hdr.origin_idx;
    out.push_back(std::move(a));
  }
  Instr cut = Instr::assume(exit_cond, "assume:unwinding:" + loop.id, hdr.line);
  cut.origin_fn = hdr.origin_fn;
  cut.origin_idx = hdr.origin_idx;
  out.push_back(std::move(cut));
  for (int j = b + 1; j < int(fn.body.size()); ++j) {
    Instr c = fn.body[j];
    if (c.op == Op::Goto || c.op == Op::IfGoto) c.target = outside(c.target);
    out.push_back(std::move(c));
  }

  std::vector<LoopInfo> loops;
  for (size_t i = 0; i < fn.loops.size(); ++i) {
    if (i == li) continue;
    LoopInfo m = fn.loops[i];
    auto marker = [&](int x) {
      if (x < t) return x;
      if (x > b) return x + shift;
      bug("loops " + loop.id + " and " + m.id + " overlap");
    };
    m.header = marker(m.header);
    m.backedge = marker(m.backedge);
    loops.push_back(std::move(m));
  }
  fn.body = std::move(out);
  fn.loops = std::move(loops);
}

// A loop is safe to unroll once no other loop's header sits inside its
// region; unrolling innermost-first keeps loop markers unique.
size_t pick_innermost(const Function& fn) {
  for (size_t i = 0; i < fn.loops.size(); ++i) {
    int t = fn.body[fn.loops[i].backedge].target;
    int b = fn.loops[i].backedge;
    bool inner = true;
    for (size_t j = 0; j < fn.loops.size() && inner; ++j) {
      if (j == i) continue;
      inner = !(fn.loops[j].header >= t && fn.loops[j].header <= b);
    }
    if (inner) return i;
  }
  bug("loop nesting is not well bracketed");
}

}  // namespace

uint64_t UnwindConfig::bound_for(const LoopInfo& loop) const {
  auto it = loop_bounds.find(loop.id);
  if (it != loop_bounds.end()) return std::max<uint64_t>(1, it->second);
  if (loop.static_trip) return std::max<uint64_t>(1, *loop.static_trip);
  return std::max<uint64_t>(1, default_bound);
}

IrProgram unwind(const IrProgram& prog, const std::string& entry, const UnwindConfig& cfg) {
  const Function* fn = prog.find_function(entry);
  if (!fn) bug("unknown entry '" + entry + "'");
  if (!fn->params.empty()) bug("entry '" + entry + "' takes parameters");

  Inliner inliner(prog);
  Expansion flat = inliner.instantiate(*fn, "", {}, "", true);

  IrProgram out;
  out.globals = prog.globals;
  Function whole;
  whole.name = entry;
  whole.ret = fn->ret;
  whole.locals = std::move(inliner.locals);
  whole.body = std::move(flat.body);
  whole.loops = std::move(flat.loops);
  whole.line = fn->line;
  whole.end_line = fn->end_line;

  while (!whole.loops.empty()) {
    size_t li = pick_innermost(whole);
    uint64_t bound = cfg.bound_for(whole.loops[li]);
    unroll_one(whole, li, bound, cfg.unwinding_assertions);
  }

  for (size_t i = 0; i < whole.body.size(); ++i) {
    const Instr& in = whole.body[i];
    if ((in.op == Op::Goto || in.op == Op::IfGoto) && in.target <= int(i))
      bug("unwound body is not acyclic");
  }

  out.functions.emplace(entry, std::move(whole));
  return out;
}

}  // namespace irbmc::bmc
