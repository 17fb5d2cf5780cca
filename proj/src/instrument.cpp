#include "irbmc/instrument.h"

#include <algorithm>

#include "irbmc/expr.h"

namespace irbmc::instrument {

namespace {

uint64_t mask_to(Ty t, int64_t v) {
  const int w = width(t);
  const uint64_t bits = static_cast<uint64_t>(v);
  return w == 64 ? bits : bits & ((uint64_t{1} << w) - 1);
}

// insert_before leaves a loop header that sits exactly at the insertion
// point unmoved, so the marker would start naming the first inserted
// instruction instead of the guard branch. Bump it back onto the guard; the
// backedge keeps targeting the inserted block, which therefore re-runs on
// every iteration.
void insert_keeping_guard(Function& fn, int idx, std::vector<Instr> block) {
  const int k = static_cast<int>(block.size());
  if (k == 0) return;
  insert_before(fn, idx, std::move(block));
  for (LoopInfo& loop : fn.loops)
    if (loop.header == idx) loop.header += k;
}

// The operation redone in the widened type, compared against the bounds of
// the original type. Unsigned wrap (including subtraction borrow) lands far
// above the type maximum in the widened type, so one upper bound suffices.
ExprPtr overflow_cond(const ExprPtr& e) {
  const Ty t = e->type;
  const Ty wide = widened(t);
  ExprPtr redone = eb::binary(e->bin, eb::cast(e->a, wide), eb::cast(e->b, wide));
  const int w = width(t);
  if (is_signed(t)) {
    const uint64_t lo = mask_to(wide, -(int64_t{1} << (w - 1)));
    const uint64_t hi = (uint64_t{1} << (w - 1)) - 1;
    return eb::land(eb::le(eb::cnst(lo, wide), redone),
                    eb::le(redone, eb::cnst(hi, wide)));
  }
  return eb::le(redone, eb::cnst((uint64_t{1} << w) - 1, wide));
}

// Subscript compared in u64: a negative signed index sign-extends to a huge
// unsigned value, so one comparison covers both failure directions.
ExprPtr bounds_cond(const IrProgram& prog, const Function& fn,
                    const std::string& array, const ExprPtr& subscript) {
  const Symbol* sym = prog.find_symbol(fn, array);
  if (!sym || !sym->array_len) return nullptr;
  return eb::lt(eb::cast(subscript, Ty::U64), eb::cnst(*sym->array_len, Ty::U64));
}

using Check = std::pair<PropertyClass, ExprPtr>;

// Post-order walk: operand sites come before the operator's own site. The
// expression language is total and evaluates eagerly, so a site inside a
// select arm or a logical connective genuinely receives its operands and is
// checked unconditionally.
void collect_checks(const ExprPtr& e, const IrProgram& prog, const Function& fn,
                    std::vector<Check>& out) {
  if (!e) return;
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::Var:
    case ExprKind::Nondet:
      return;
    case ExprKind::Index: {
      collect_checks(e->a, prog, fn, out);
      if (ExprPtr cond = bounds_cond(prog, fn, e->name, e->a))
        out.emplace_back(PropertyClass::Bounds, std::move(cond));
      return;
    }
    case ExprKind::Unary:
    case ExprKind::Cast:
      collect_checks(e->a, prog, fn, out);
      return;
    case ExprKind::Select:
      collect_checks(e->a, prog, fn, out);
      collect_checks(e->b, prog, fn, out);
      collect_checks(e->c, prog, fn, out);
      return;
    case ExprKind::Binary: {
      collect_checks(e->a, prog, fn, out);
      collect_checks(e->b, prog, fn, out);
      switch (e->bin) {
        case BinOp::Add:
        case BinOp::Sub:
        case BinOp::Mul:
          if (is_integer(e->type))
            out.emplace_back(PropertyClass::Overflow, overflow_cond(e));
          break;
        case BinOp::Div:
        case BinOp::Rem:
          out.emplace_back(PropertyClass::DivZero,
                           eb::ne(e->b, eb::cnst(0, e->b->type)));
          break;
        default:
          break;
      }
      return;
    }
  }
}

// Expression roots of one instruction, in evaluation order.
void instr_roots(const Instr& in, std::vector<ExprPtr>& out) {
  switch (in.op) {
    case Op::Assign:
      if (in.lhs_index) out.push_back(in.lhs_index);
      out.push_back(in.rhs);
      break;
    case Op::Assume:
    case Op::Assert:
    case Op::IfGoto:
      out.push_back(in.cond);
      break;
    case Op::Return:
      if (in.rhs) out.push_back(in.rhs);
      break;
    case Op::Call:
      for (const ExprPtr& a : in.args) out.push_back(a);
      break;
    case Op::MmioRead:
      out.push_back(in.address);
      break;
    case Op::MmioWrite:
      out.push_back(in.address);
      out.push_back(in.rhs);
      break;
    case Op::Havoc:
    case Op::Goto:
      break;
  }
}

// Reads and writes of a function including everything it calls. The call
// graph is a DAG (validation rejects recursion), so a visited set suffices.
void effect_closure(const IrProgram& prog, const Function& root,
                    std::set<std::string>& reads, std::set<std::string>& writes) {
  std::set<std::string> visited{root.name};
  std::vector<const Function*> stack{&root};
  std::vector<std::string> buf;
  while (!stack.empty()) {
    const Function* f = stack.back();
    stack.pop_back();
    for (const Instr& in : f->body) {
      buf.clear();
      instr_reads(in, buf);
      reads.insert(buf.begin(), buf.end());
      buf.clear();
      instr_writes(in, buf);
      writes.insert(buf.begin(), buf.end());
      if (in.op == Op::Call && visited.insert(in.callee).second)
        if (const Function* g = prog.find_function(in.callee)) stack.push_back(g);
    }
  }
}

ExprPtr strict_range_cond(const ExprPtr& v, Ty t, int64_t lo, int64_t hi) {
  return eb::land(eb::lt(eb::cnst(mask_to(t, lo), t), v),
                  eb::lt(v, eb::cnst(mask_to(t, hi), t)));
}

}  // namespace

std::size_t instrument_safety(IrProgram& prog) {
  std::size_t added = 0;
  for (auto& [fname, fn] : prog.functions) {
    struct Pending {
      int idx;
      std::vector<Instr> asserts;
    };
    std::vector<Pending> pending;
    std::vector<ExprPtr> roots;
    std::vector<Check> checks;
    for (int i = 0; i < static_cast<int>(fn.body.size()); ++i) {
      const Instr& in = fn.body[i];
      roots.clear();
      checks.clear();
      instr_roots(in, roots);
      for (const ExprPtr& r : roots) collect_checks(r, prog, fn, checks);
      if (in.op == Op::Assign && in.lhs_index)
        if (ExprPtr cond = bounds_cond(prog, fn, in.lhs, in.lhs_index))
          checks.emplace_back(PropertyClass::Bounds, std::move(cond));
      if (checks.empty()) continue;
      Pending p{i, {}};
      std::map<PropertyClass, int> ordinal;
      for (auto& [cls, cond] : checks) {
        const int k = ordinal[cls]++;
        std::string id = std::string(property_class_name(cls)) + ":" + fname + "#" +
                         std::to_string(i);
        if (k > 0) id += "." + std::to_string(k);
        p.asserts.push_back(Instr::assertion(cond, cls, std::move(id), in.line));
      }
      added += p.asserts.size();
      pending.push_back(std::move(p));
    }
    for (auto it = pending.rbegin(); it != pending.rend(); ++it)
      insert_keeping_guard(fn, it->idx, std::move(it->asserts));
  }
  return added;
}

WeaveReport weave_isrs(IrProgram& prog, Diagnostics& diags) {
  WeaveReport rep;
  std::set<std::string> shared;
  for (const auto& [name, sym] : prog.globals)
    if (sym.kind == VarKind::Shared) shared.insert(name);
  if (shared.empty() || prog.isr_functions.empty()) return rep;

  // Shared writes decide where a handler gets called; the persistent state
  // of every handler is havocked at every observation point, because a
  // handler may have fired any number of times since the last one.
  std::vector<std::set<std::string>> shared_writes;
  for (const std::string& iname : prog.isr_functions) {
    const Function* isr = prog.find_function(iname);
    std::set<std::string> reads, writes;
    effect_closure(prog, *isr, reads, writes);
    std::set<std::string> sw;
    std::set<std::string> persistent;
    auto keep_persistent = [&](const std::set<std::string>& vars) {
      for (const std::string& v : vars) {
        auto it = prog.globals.find(v);
        if (it != prog.globals.end() && it->second.kind == VarKind::Persistent)
          persistent.insert(v);
      }
    };
    for (const std::string& v : writes)
      if (shared.count(v)) sw.insert(v);
    keep_persistent(reads);
    keep_persistent(writes);
    if (sw.empty() && persistent.empty())
      diags.push_back({Severity::Warning, isr ? isr->line : 0, 0,
                       "isr '" + iname +
                           "' writes no shared and no persistent variable; it has "
                           "no modeled effect"});
    rep.havocked_persistent.insert(persistent.begin(), persistent.end());
    rep.calls_per_isr[iname] = 0;
    shared_writes.push_back(std::move(sw));
  }

  for (auto& [fname, fn] : prog.functions) {
    if (fn.is_isr) continue;
    struct Point {
      int idx;
      std::vector<int> isrs;  // ordinals into isr_functions
    };
    std::vector<Point> points;
    std::vector<std::string> buf;
    for (int i = 0; i < static_cast<int>(fn.body.size()); ++i) {
      buf.clear();
      instr_reads(fn.body[i], buf);
      std::set<std::string> read_shared;
      for (const std::string& v : buf)
        if (shared.count(v)) read_shared.insert(v);
      if (read_shared.empty()) continue;
      Point pt{i, {}};
      for (int k = 0; k < static_cast<int>(shared_writes.size()); ++k) {
        bool overlaps = std::any_of(read_shared.begin(), read_shared.end(),
                                    [&](const std::string& v) {
                                      return shared_writes[k].count(v) != 0;
                                    });
        if (overlaps) pt.isrs.push_back(k);
      }
      if (pt.isrs.empty() && rep.havocked_persistent.empty()) continue;
      points.push_back(std::move(pt));
    }
    if (points.empty()) continue;

    const bool needs_choice =
        std::any_of(points.begin(), points.end(),
                    [](const Point& p) { return !p.isrs.empty(); });
    if (needs_choice && !fn.locals.count("__weave")) {
      Symbol s;
      s.name = "__weave";
      s.type = Ty::Bool;
      fn.locals.emplace(s.name, std::move(s));
    }

    int delta = 0;
    for (const Point& pt : points) {
      const int at = pt.idx + delta;
      std::vector<Instr> block;
      for (const std::string& v : rep.havocked_persistent)
        block.push_back(Instr::havoc(v));
      for (int k : pt.isrs) {
        const std::string& iname = prog.isr_functions[k];
        const int off = static_cast<int>(block.size());
        block.push_back(Instr::havoc("__weave"));
        block.push_back(
            Instr::branch(eb::lnot(eb::var("__weave", Ty::Bool)), off + 3));
        block.push_back(Instr::call(iname));
        ++rep.calls_per_isr[iname];
      }
      const int size = static_cast<int>(block.size());
      insert_keeping_guard(fn, at, std::move(block));
      delta += size;
      rep.observation_points.push_back({fname, static_cast<size_t>(at + size)});
    }
  }
  return rep;
}

bool havoc_inputs(IrProgram& prog, const MmioConfig& cfg, Diagnostics& diags) {
  std::vector<analysis::MmioSite> sites = analysis::mmio_sites(prog, diags);
  bool ok = true;
  for (const analysis::MmioSite& s : sites) {
    if (s.address) continue;
    const std::string key = s.function + "#" + std::to_string(s.index);
    if (!cfg.confirmed_unknown.count(key)) {
      diags.push_back({Severity::Error, 0, 0,
                       "mmio site '" + key +
                           "' has an unresolved address and no confirmation; "
                           "refusing to rewrite"});
      ok = false;
    }
  }
  if (!ok) return false;

  std::map<std::string, std::vector<const analysis::MmioSite*>> reads_by_fn;
  for (const analysis::MmioSite& s : sites)
    if (!s.is_write) reads_by_fn[s.function].push_back(&s);

  for (auto& [fname, fsites] : reads_by_fn) {
    Function& fn = prog.functions.at(fname);
    std::sort(fsites.begin(), fsites.end(),
              [](const analysis::MmioSite* a, const analysis::MmioSite* b) {
                return a->index > b->index;
              });
    for (const analysis::MmioSite* s : fsites) {
      const std::string dest = fn.body[s->index].lhs;
      const int line = fn.body[s->index].line;
      const Symbol* sym = prog.find_symbol(fn, dest);
      const Ty t = sym ? sym->type : Ty::U32;
      std::optional<std::pair<int64_t, int64_t>> domain;
      if (s->address) {
        auto it = cfg.domains.find(*s->address);
        if (it != cfg.domains.end()) domain = it->second;
      }
      fn.body[s->index] = Instr::havoc(dest, line);
      if (domain) {
        ExprPtr v = eb::var(dest, t);
        ExprPtr cond =
            eb::land(eb::le(eb::cnst(mask_to(t, domain->first), t), v),
                     eb::le(v, eb::cnst(mask_to(t, domain->second), t)));
        Instr a = Instr::assume(
            std::move(cond),
            "assume:mmio:" + fname + "#" + std::to_string(s->index), line);
        insert_fallthrough_after(fn, static_cast<int>(s->index), {std::move(a)});
      }
    }
  }
  return true;
}

ModeSlice partition_modes(const IrProgram& prog,
                          const std::vector<analysis::ModeInterface>& interfaces,
                          const std::string& target, Diagnostics& diags) {
  ModeSlice out;
  const Function* tf = nullptr;
  if (const Function* f = prog.find_function(target); f && f->is_mode) tf = f;
  if (!tf)
    for (const auto& [name, f] : prog.functions)
      if (f.is_mode && f.mode_name == target) {
        tf = &f;
        break;
      }
  if (!tf) {
    diags.push_back({Severity::Error, 0, 0, "unknown mode '" + target + "'"});
    out.program = prog;
    return out;
  }
  const std::string tname = tf->name;
  const std::string tmode = tf->mode_name;
  const bool first = prog.mode_functions.front() == tname;
  const bool last = prog.mode_functions.back() == tname;

  // Interfaces are keyed by mode names, not function names.
  const analysis::ModeInterface* incoming = nullptr;
  const analysis::ModeInterface* outgoing = nullptr;
  for (const analysis::ModeInterface& mi : interfaces) {
    if (mi.successor == tmode) incoming = &mi;
    if (mi.predecessor == tmode) outgoing = &mi;
  }
  if (!first && !incoming) {
    diags.push_back({Severity::Error, 0, 0,
                     "no interface into mode '" + tmode + "'"});
    out.program = prog;
    return out;
  }
  if (!last && !outgoing) {
    diags.push_back({Severity::Error, 0, 0,
                     "no interface out of mode '" + tmode + "'"});
    out.program = prog;
    return out;
  }

  out.program = prog;
  IrProgram& p = out.program;
  for (const std::string& m : prog.mode_functions)
    if (m != tname) p.functions.erase(m);
  p.mode_functions = {tname};
  p.functions.at(tname).mode_order = 0;

  auto ranged_ok = [&](const std::string& v) {
    if (p.globals.count(v)) return true;
    diags.push_back({Severity::Error, 0, 0,
                     "range names unknown variable '" + v + "'"});
    return false;
  };

  Function drv;
  drv.name = "__check_" + tname;
  std::set<std::string> havocs;
  if (incoming) {
    havocs = incoming->live;
    for (const auto& [v, range] : incoming->ranges)
      if (!havocs.count(v)) {
        diags.push_back({Severity::Warning, 0, 0,
                         "range on variable '" + v + "' that is not live into '" +
                             tname + "'"});
        havocs.insert(v);
      }
  }
  for (const std::string& v : havocs) drv.body.push_back(Instr::havoc(v));
  if (incoming)
    for (const auto& [v, range] : incoming->ranges) {
      if (!ranged_ok(v)) continue;
      const Ty t = p.globals.at(v).type;
      drv.body.push_back(Instr::assume(
          strict_range_cond(eb::var(v, t), t, range.first, range.second),
          "assume:range:" + v));
    }
  drv.body.push_back(Instr::call(tname));
  if (outgoing)
    for (const auto& [v, range] : outgoing->ranges) {
      if (!ranged_ok(v)) continue;
      const Ty t = p.globals.at(v).type;
      drv.body.push_back(Instr::assertion(
          strict_range_cond(eb::var(v, t), t, range.first, range.second),
          PropertyClass::ModeExit, "mode-exit-guarantee:" + tname + ":" + v));
    }
  drv.body.push_back(Instr::ret());
  out.entry = drv.name;
  p.functions.emplace(drv.name, std::move(drv));

  analysis::DeadCode dead = analysis::dead_code(p, out.entry);
  for (const std::string& f : dead.functions) p.functions.erase(f);
  for (const std::string& g : dead.globals) p.globals.erase(g);
  return out;
}

std::size_t probe_assumptions(IrProgram& prog) {
  std::size_t added = 0;
  for (auto& [fname, fn] : prog.functions) {
    std::vector<int> sites;
    for (int i = 0; i < static_cast<int>(fn.body.size()); ++i)
      if (fn.body[i].op == Op::Assume) sites.push_back(i);
    for (auto it = sites.rbegin(); it != sites.rend(); ++it) {
      const Instr& a = fn.body[*it];
      std::string id = a.prop_id.empty()
                           ? "probe:" + fname + "#" + std::to_string(*it)
                           : "probe:" + a.prop_id;
      insert_fallthrough_after(
          fn, *it,
          {Instr::assertion(eb::fls(), PropertyClass::AssumeProbe,
                            std::move(id), a.line)});
      ++added;
    }
  }
  return added;
}

}  // namespace irbmc::instrument
