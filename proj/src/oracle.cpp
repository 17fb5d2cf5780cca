#include "irbmc/oracle.h"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

namespace irbmc::oracle {

namespace {

struct Cell {
  Ty type = Ty::U8;
  bool is_array = false;
  bool track = true;  // rendered in final states
  std::vector<uint64_t> v;
};

Cell make_cell(const Symbol& s) {
  Cell c;
  c.type = s.type;
  c.track = !s.is_const && s.kind != VarKind::MmioInput;
  if (s.array_len) {
    c.is_array = true;
    c.v.assign(*s.array_len, 0);
    for (size_t i = 0; i < s.array_init.size() && i < c.v.size(); ++i)
      c.v[i] = wrap(s.array_init[i], s.type);
  } else {
    c.v.assign(1, s.init ? wrap(*s.init, s.type) : 0);
  }
  return c;
}

struct Frame {
  const Function* fn = nullptr;
  size_t pc = 0;
  std::map<std::string, Cell> locals;
  std::string ret_into;
  bool fired = false;  // pushed by an ISR firing, not by CALL
};

struct State {
  std::map<std::string, Cell> globals;
  std::vector<Frame> stack;
  uint64_t steps = 0;
  unsigned isr_cursor = 0;  // firing decisions taken at the current boundary
  bool in_isr = false;
  std::vector<TraceStep> trace;  // capture mode only
  std::vector<uint64_t> tape;    // capture mode only
};

struct BasicOut {
  bool pruned = false;              // assume evaluated false
  const std::string* violated = nullptr;  // failing assert's property id
};

// Shared execution core: state layout, expression evaluation, and every
// deterministic instruction. HAVOC and MMIO_READ are handled by the callers,
// which own the nondet policy (enumeration vs tape).
class Machine {
 public:
  explicit Machine(const IrProgram& prog) : prog_(prog) {}

  const IrProgram& prog() const { return prog_; }

  State initial_state() const {
    State s;
    for (const auto& [name, sym] : prog_.globals) s.globals.emplace(name, make_cell(sym));
    return s;
  }

  Cell* find_cell(State& s, const std::string& name) const {
    if (!s.stack.empty()) {
      auto it = s.stack.back().locals.find(name);
      if (it != s.stack.back().locals.end()) return &it->second;
    }
    auto it = s.globals.find(name);
    return it == s.globals.end() ? nullptr : &it->second;
  }

  uint64_t eval(State& s, const ExprPtr& e) const {
    switch (e->kind) {
      case ExprKind::Const:
        return e->value;
      case ExprKind::Var: {
        Cell* c = find_cell(s, e->name);
        if (!c) throw InternalError("oracle: unknown variable '" + e->name + "'");
        return c->v[0];
      }
      case ExprKind::Index: {
        Cell* c = find_cell(s, e->name);
        if (!c || !c->is_array || c->v.empty())
          throw InternalError("oracle: '" + e->name + "' is not an array");
        uint64_t i = eval(s, e->a);
        // Out-of-range reads pin to the last element, matching the encoder.
        return i < c->v.size() ? c->v[i] : c->v.back();
      }
      case ExprKind::Unary:
        return eval_unop(e->un, e->a->type, eval(s, e->a));
      case ExprKind::Binary: {
        uint64_t a = eval(s, e->a);
        uint64_t b = eval(s, e->b);
        return eval_binop(e->bin, e->a->type, a, b);
      }
      case ExprKind::Select:
        return eval(s, e->a) ? eval(s, e->b) : eval(s, e->c);
      case ExprKind::Cast:
        return eval_cast(eval(s, e->a), e->a->type, e->type);
      case ExprKind::Nondet:
        throw InternalError("oracle: raw nondet expression");
    }
    throw InternalError("oracle: bad expression kind");
  }

  void push_frame(State& s, const Function* fn, const std::vector<uint64_t>& args,
                  std::string ret_into, bool fired) const {
    Frame f;
    f.fn = fn;
    f.ret_into = std::move(ret_into);
    f.fired = fired;
    for (const auto& [name, sym] : fn->locals) f.locals.emplace(name, make_cell(sym));
    for (size_t i = 0; i < fn->params.size() && i < args.size(); ++i) {
      Cell& c = f.locals.at(fn->params[i]);
      c.v[0] = wrap(args[i], c.type);
    }
    s.stack.push_back(std::move(f));
    if (fired) s.in_isr = true;
  }

  void pop_frame(State& s, std::optional<uint64_t> ret, TraceStep* st) const {
    Frame done = std::move(s.stack.back());
    s.stack.pop_back();
    if (done.fired) s.in_isr = false;
    if (ret && !done.ret_into.empty() && !s.stack.empty()) {
      Cell* c = find_cell(s, done.ret_into);
      if (!c) throw InternalError("oracle: unknown return target '" + done.ret_into + "'");
      uint64_t v = wrap(*ret, c->type);
      c->v[0] = v;
      if (st) {
        st->var = done.ret_into;
        st->value = v;
      }
    }
  }

  // Executes the instruction at the top frame's pc. Must not be called with
  // HAVOC or MMIO_READ. `st`, when given, receives the step record.
  BasicOut exec_basic(State& s, TraceStep* st) const {
    Frame& f = s.stack.back();
    const Instr& in = f.fn->body[f.pc];
    s.steps++;
    if (st) {
      st->fn = f.fn->name;
      st->idx = static_cast<int>(f.pc);
      st->var.clear();
      st->value = 0;
      st->line = in.line;
      st->isr_fire = false;
    }
    BasicOut out;
    switch (in.op) {
      case Op::Assign: {
        uint64_t v = eval(s, in.rhs);
        Cell* c = find_cell(s, in.lhs);
        if (!c) throw InternalError("oracle: unknown variable '" + in.lhs + "'");
        v = wrap(v, c->type);
        if (in.lhs_index) {
          uint64_t i = eval(s, in.lhs_index);
          // Out-of-range writes are dropped, matching the encoder.
          if (i < c->v.size()) c->v[i] = v;
          if (st) {
            st->var = in.lhs + "[" + std::to_string(i) + "]";
            st->value = v;
          }
        } else {
          c->v[0] = v;
          if (st) {
            st->var = in.lhs;
            st->value = v;
          }
        }
        f.pc++;
        break;
      }
      case Op::Assume:
        if (!eval(s, in.cond))
          out.pruned = true;
        else
          f.pc++;
        break;
      case Op::Assert:
        if (!eval(s, in.cond)) out.violated = &in.prop_id;
        f.pc++;
        break;
      case Op::Goto:
        f.pc = static_cast<size_t>(in.target);
        break;
      case Op::IfGoto:
        f.pc = eval(s, in.cond) ? static_cast<size_t>(in.target) : f.pc + 1;
        break;
      case Op::Call: {
        const Function* callee = prog_.find_function(in.callee);
        if (!callee) throw InternalError("oracle: unknown function '" + in.callee + "'");
        std::vector<uint64_t> args;
        args.reserve(in.args.size());
        for (const auto& a : in.args) args.push_back(eval(s, a));
        f.pc++;  // return site; f is invalid after the push below
        push_frame(s, callee, args, in.lhs, false);
        break;
      }
      case Op::Return: {
        std::optional<uint64_t> v;
        if (in.rhs) v = eval(s, in.rhs);
        pop_frame(s, v, st);
        break;
      }
      case Op::MmioWrite:
        (void)eval(s, in.rhs);
        f.pc++;
        break;
      case Op::Havoc:
      case Op::MmioRead:
        throw InternalError("oracle: nondet instruction reached exec_basic");
    }
    return out;
  }

  std::string render_globals(const State& s) const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, c] : s.globals) {
      if (!c.track) continue;
      if (!first) os << ' ';
      first = false;
      os << name << '=';
      if (c.is_array) {
        os << '[';
        for (size_t i = 0; i < c.v.size(); ++i) {
          if (i) os << ',';
          os << render_value(c.v[i], c.type);
        }
        os << ']';
      } else {
        os << render_value(c.v[0], c.type);
      }
    }
    return os.str();
  }

 private:
  static std::string render_value(uint64_t bits, Ty t) {
    if (is_signed(t)) return std::to_string(as_signed(bits, t));
    return std::to_string(bits);
  }

  const IrProgram& prog_;
};

// Variables any ISR (or code it calls) may write, excluding each function's
// own locals. Used to decide whether a narrowing ASSUME can be evaluated
// ahead of the interrupt boundary between it and its HAVOC.
std::set<std::string> isr_written_vars(const IrProgram& prog) {
  std::set<std::string> out;
  std::set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    if (!seen.insert(name).second) return;
    const Function* fn = prog.find_function(name);
    if (!fn) return;
    std::vector<std::string> w;
    for (const Instr& in : fn->body) {
      w.clear();
      instr_writes(in, w);
      for (auto& x : w)
        if (!fn->locals.count(x)) out.insert(x);
      if (in.op == Op::Call) visit(in.callee);
    }
  };
  for (const auto& isr : prog.isr_functions) visit(isr);
  return out;
}

// Constant range implied by a comparison tree over a single variable.
// Bounds are in the signed value space of `t` (every MiniC type fits int64).
struct ValueRange {
  int64_t lo;
  int64_t hi;
};

std::optional<ValueRange> intersect_range(std::optional<ValueRange> a,
                                          std::optional<ValueRange> b) {
  if (!a || !b) return std::nullopt;
  return ValueRange{std::max(a->lo, b->lo), std::min(a->hi, b->hi)};
}

std::optional<ValueRange> range_of(const ExprPtr& e, const std::string& x, Ty t) {
  auto full = [&]() -> ValueRange {
    if (is_signed(t)) return {as_signed(min_value(t), t), as_signed(max_value(t), t)};
    return {0, static_cast<int64_t>(max_value(t))};
  };
  if (e->kind != ExprKind::Binary) return std::nullopt;
  if (e->bin == BinOp::LogAnd)
    return intersect_range(range_of(e->a, x, t), range_of(e->b, x, t));
  const Expr* var = nullptr;
  const Expr* cst = nullptr;
  bool flipped = false;
  if (e->a->kind == ExprKind::Var && e->a->name == x && e->b->kind == ExprKind::Const) {
    var = e->a.get();
    cst = e->b.get();
  } else if (e->b->kind == ExprKind::Var && e->b->name == x && e->a->kind == ExprKind::Const) {
    var = e->b.get();
    cst = e->a.get();
    flipped = true;
  } else {
    return std::nullopt;
  }
  (void)var;
  int64_t c = is_signed(t) ? as_signed(cst->value, t) : static_cast<int64_t>(cst->value);
  ValueRange r = full();
  BinOp op = e->bin;
  if (flipped) {
    // c OP x  ==  x OP' c
    switch (op) {
      case BinOp::Lt: op = BinOp::Gt; break;
      case BinOp::Le: op = BinOp::Ge; break;
      case BinOp::Gt: op = BinOp::Lt; break;
      case BinOp::Ge: op = BinOp::Le; break;
      default: break;
    }
  }
  switch (op) {
    case BinOp::Eq: r.lo = r.hi = c; break;
    case BinOp::Lt: r.hi = std::min(r.hi, c - 1); break;
    case BinOp::Le: r.hi = std::min(r.hi, c); break;
    case BinOp::Gt: r.lo = std::max(r.lo, c + 1); break;
    case BinOp::Ge: r.lo = std::max(r.lo, c); break;
    default:
      return std::nullopt;
  }
  return r;
}

class Enumerator {
 public:
  Enumerator(const IrProgram& prog, const Options& opt)
      : m_(prog), opt_(opt), isr_written_(isr_written_vars(prog)) {}

  Outcome run() {
    const Function* entry = m_.prog().find_function(opt_.entry);
    if (!entry) {
      out_.errors.push_back("entry function '" + opt_.entry + "' not found");
      return std::move(out_);
    }
    if (!entry->params.empty()) {
      out_.errors.push_back("entry function '" + opt_.entry + "' must take no parameters");
      return std::move(out_);
    }
    State s = m_.initial_state();
    m_.push_frame(s, entry, {}, "", false);
    explore(std::move(s));
    return std::move(out_);
  }

 private:
  void complete(State& s) {
    out_.executions++;
    if (out_.final_states.size() < opt_.final_state_cap)
      out_.final_states.insert(m_.render_globals(s));
    if (out_.executions >= opt_.max_executions) {
      out_.truncated = true;
      stop_ = true;
    }
  }

  void record_violation(const std::string& id, const State& s) {
    out_.violated.insert(id);
    if (opt_.capture_witnesses && !out_.witnesses.count(id)) {
      Counterexample cex;
      cex.property = id;
      cex.entry = opt_.entry;
      cex.steps = s.trace;
      cex.nondets = s.tape;
      out_.witnesses.emplace(id, std::move(cex));
    }
  }

  void fail(const std::string& msg) {
    out_.errors.push_back(msg);
    stop_ = true;
  }

  // Enumerated values for the nondet at fn.body[pc]. A directly following
  // ASSUME that reads only the target variable (and that no ISR can write)
  // narrows the domain; the cap applies to the narrowed size. Results are
  // state-independent, so they are cached per site.
  const std::vector<uint64_t>* domain_for(const Function& fn, size_t pc, State& s) {
    auto key = std::make_pair(&fn, pc);
    auto hit = cache_.find(key);
    if (hit != cache_.end()) return hit->second ? &*hit->second : nullptr;

    const Instr& in = fn.body[pc];
    Cell* c = m_.find_cell(s, in.lhs);
    if (!c) {
      fail("oracle: unknown nondet target '" + in.lhs + "'");
      cache_.emplace(key, std::nullopt);
      return nullptr;
    }
    if (c->is_array) {
      fail("oracle: cannot enumerate nondet array '" + in.lhs + "'");
      cache_.emplace(key, std::nullopt);
      return nullptr;
    }
    Ty t = c->type;
    unsigned w = width(t);

    const ExprPtr* filter = nullptr;
    if (pc + 1 < fn.body.size() && fn.body[pc + 1].op == Op::Assume) {
      const ExprPtr& cond = fn.body[pc + 1].cond;
      std::vector<std::string> reads;
      collect_vars(cond, reads);
      bool only_target = !reads.empty();
      for (const auto& r : reads)
        if (r != in.lhs) only_target = false;
      if (only_target && !isr_written_.count(in.lhs)) filter = &cond;
    }

    std::vector<uint64_t> dom;
    uint64_t limit = uint64_t{1} << std::min(opt_.width_cap, 63u);
    if (w <= 8) {
      uint64_t saved = c->v[0];
      for (uint64_t bits = 0; bits < (uint64_t{1} << w); ++bits) {
        if (filter) {
          c->v[0] = bits;
          if (!m_.eval(s, *filter)) continue;
        }
        dom.push_back(bits);
      }
      c->v[0] = saved;
    } else {
      std::optional<ValueRange> r;
      if (filter) r = range_of(*filter, in.lhs, t);
      if (!r) {
        fail("oracle: nondet '" + in.lhs + "' in " + fn.name + " spans " + std::to_string(w) +
             " bits with no narrowing assumption; width cap is " +
             std::to_string(opt_.width_cap));
        cache_.emplace(key, std::nullopt);
        return nullptr;
      }
      if (r->lo <= r->hi && static_cast<uint64_t>(r->hi - r->lo) < limit) {
        for (int64_t v = r->lo; v <= r->hi; ++v)
          dom.push_back(wrap(static_cast<uint64_t>(v), t));
      } else if (r->lo <= r->hi) {
        fail("oracle: nondet '" + in.lhs + "' in " + fn.name + " has " +
             std::to_string(r->hi - r->lo + 1) + " feasible values; width cap is " +
             std::to_string(opt_.width_cap));
        cache_.emplace(key, std::nullopt);
        return nullptr;
      }
    }
    if (dom.size() > limit) {
      fail("oracle: nondet '" + in.lhs + "' in " + fn.name + " has " +
           std::to_string(dom.size()) + " feasible values; width cap is " +
           std::to_string(opt_.width_cap));
      cache_.emplace(key, std::nullopt);
      return nullptr;
    }
    auto ins = cache_.emplace(key, std::move(dom));
    return &*ins.first->second;
  }

  void explore(State s) {
    for (;;) {
      if (stop_) return;
      if (s.stack.empty()) {
        complete(s);
        return;
      }
      {
        Frame& f = s.stack.back();
        const auto& isrs = m_.prog().isr_functions;
        // Interrupt boundary: before each instruction of non-ISR code, each
        // ISR may fire atomically zero or one time, in declaration order.
        if (!s.in_isr && !f.fn->is_isr && f.pc < f.fn->body.size() &&
            s.isr_cursor < isrs.size()) {
          unsigned k = s.isr_cursor;
          {
            State skip = s;
            skip.isr_cursor = k + 1;
            explore(std::move(skip));
          }
          if (stop_) return;
          s.isr_cursor = k + 1;
          const Function* isr = m_.prog().find_function(isrs[k]);
          if (opt_.capture_witnesses)
            s.trace.push_back(TraceStep{isr->name, -1, "", 0, 0, true});
          m_.push_frame(s, isr, {}, "", true);
          continue;
        }
        if (f.pc >= f.fn->body.size()) {
          m_.pop_frame(s, std::nullopt, nullptr);
          continue;
        }
        if (s.steps >= opt_.step_bound) {
          out_.truncated = true;
          return;
        }
      }
      Frame& f = s.stack.back();
      const Instr& in = f.fn->body[f.pc];
      bool main_ctx = !s.in_isr && !f.fn->is_isr;
      if (in.op == Op::Havoc || in.op == Op::MmioRead) {
        const std::vector<uint64_t>* dom = domain_for(*f.fn, f.pc, s);
        if (!dom) return;
        size_t at = f.pc;
        int line = in.line;
        for (size_t i = 0; i < dom->size(); ++i) {
          uint64_t v = (*dom)[i];
          State t = (i + 1 == dom->size()) ? std::move(s) : s;
          Cell* tc = m_.find_cell(t, in.lhs);
          tc->v[0] = v;
          t.steps++;
          t.stack.back().pc = at + 1;
          if (main_ctx) t.isr_cursor = 0;
          if (opt_.capture_witnesses) {
            t.tape.push_back(v);
            t.trace.push_back(
                TraceStep{t.stack.back().fn->name, static_cast<int>(at), in.lhs, v, line, false});
          }
          explore(std::move(t));
          if (stop_) return;
        }
        return;
      }
      TraceStep st;
      BasicOut o = m_.exec_basic(s, opt_.capture_witnesses ? &st : nullptr);
      if (opt_.capture_witnesses && !o.pruned) s.trace.push_back(st);
      if (o.violated) record_violation(*o.violated, s);
      if (o.pruned) return;
      if (s.stack.empty()) {
        complete(s);
        return;
      }
      if (main_ctx) s.isr_cursor = 0;
    }
  }

  Machine m_;
  Options opt_;
  Outcome out_;
  bool stop_ = false;
  std::set<std::string> isr_written_;
  std::map<std::pair<const Function*, size_t>, std::optional<std::vector<uint64_t>>> cache_;
};

struct DetRun {
  SimResult sim;
  bool reached = false;
  bool mismatch = false;
  size_t diverged_at = 0;
  std::string message;
};

// Deterministic engine behind simulate() and replay(). Nondet values come
// from the tape; ISR firings only from `expected` interleaving markers.
DetRun run_det(const IrProgram& prog, const std::string& entry_name,
               const std::vector<uint64_t>& tape, uint64_t step_bound,
               const std::string& stop_at, const std::vector<TraceStep>* expected) {
  DetRun r;
  Machine m(prog);
  const Function* entry = prog.find_function(entry_name);
  if (!entry) {
    r.mismatch = true;
    r.message = "entry function '" + entry_name + "' not found";
    return r;
  }
  State s = m.initial_state();
  m.push_frame(s, entry, {}, "", false);
  size_t tape_pos = 0;
  size_t step_i = 0;

  auto emit = [&](const TraceStep& st) -> bool {
    r.sim.steps.push_back(st);
    if (expected) {
      if (step_i >= expected->size()) {
        r.mismatch = true;
        r.diverged_at = expected->size();
        r.message = "execution continued past the recorded trace";
        return false;
      }
      if (!((*expected)[step_i] == st)) {
        r.mismatch = true;
        r.diverged_at = step_i;
        r.message = "step mismatch at " + st.fn + "#" + std::to_string(st.idx);
        return false;
      }
    }
    step_i++;
    return true;
  };

  try {
    for (;;) {
      if (s.stack.empty()) {
        r.sim.completed = true;
        break;
      }
      if (s.steps >= step_bound) {
        r.sim.step_bound_hit = true;
        r.diverged_at = step_i;
        r.message = "step bound exhausted";
        break;
      }
      if (expected && step_i < expected->size() && (*expected)[step_i].isr_fire) {
        const TraceStep& mark = (*expected)[step_i];
        const Function* isr = prog.find_function(mark.fn);
        if (!isr || !isr->is_isr) {
          r.mismatch = true;
          r.diverged_at = step_i;
          r.message = "recorded firing of unknown ISR '" + mark.fn + "'";
          break;
        }
        r.sim.steps.push_back(mark);
        step_i++;
        m.push_frame(s, isr, {}, "", true);
        continue;
      }
      Frame& f = s.stack.back();
      if (f.pc >= f.fn->body.size()) {
        m.pop_frame(s, std::nullopt, nullptr);
        if (s.stack.empty()) r.sim.completed = true;
        if (s.stack.empty()) break;
        continue;
      }
      const Instr& in = f.fn->body[f.pc];
      if (in.op == Op::Havoc || in.op == Op::MmioRead) {
        Cell* c = m.find_cell(s, in.lhs);
        if (!c) throw InternalError("oracle: unknown nondet target '" + in.lhs + "'");
        size_t n = c->is_array ? c->v.size() : 1;
        if (tape_pos + n > tape.size()) {
          r.sim.tape_exhausted = true;
          r.diverged_at = step_i;
          r.message = "nondet tape exhausted";
          break;
        }
        bool ok = true;
        for (size_t k = 0; k < n && ok; ++k) {
          uint64_t v = wrap(tape[tape_pos++], c->type);
          c->v[c->is_array ? k : 0] = v;
          TraceStep st{f.fn->name, static_cast<int>(f.pc),
                       c->is_array ? in.lhs + "[" + std::to_string(k) + "]" : in.lhs, v, in.line,
                       false};
          ok = emit(st);
        }
        if (!ok) break;
        s.steps++;
        f.pc++;
        continue;
      }
      TraceStep st;
      BasicOut o = m.exec_basic(s, &st);
      if (o.pruned) {
        r.sim.assume_failed = true;
        r.diverged_at = step_i;
        r.message = "assumption failed during replay";
        break;
      }
      if (!emit(st)) break;
      if (o.violated) {
        r.sim.violations.push_back(*o.violated);
        if (!stop_at.empty() && *o.violated == stop_at) {
          r.reached = true;
          break;
        }
      }
      if (s.stack.empty()) {
        r.sim.completed = true;
        break;
      }
    }
  } catch (const InternalError& e) {
    r.mismatch = true;
    r.diverged_at = step_i;
    r.message = e.what();
  }
  if (!r.reached && r.message.empty()) {
    r.diverged_at = step_i;
    r.message = stop_at.empty() ? "" : "execution ended without violating " + stop_at;
  }
  return r;
}

}  // namespace

Outcome enumerate_executions(const IrProgram& prog, const Options& opt) {
  return Enumerator(prog, opt).run();
}

SimResult simulate(const IrProgram& prog, const std::string& entry,
                   const std::vector<uint64_t>& nondets, uint64_t step_bound,
                   const std::string& stop_at_property) {
  return run_det(prog, entry, nondets, step_bound, stop_at_property, nullptr).sim;
}

ReplayResult replay(const IrProgram& prog, const Counterexample& cex) {
  DetRun r = run_det(prog, cex.entry, cex.nondets, uint64_t{1} << 24, cex.property, &cex.steps);
  ReplayResult out;
  out.reached = r.reached;
  if (!out.reached) {
    out.diverged_at = r.diverged_at;
    out.message = r.message;
  }
  return out;
}

}  // namespace irbmc::oracle
