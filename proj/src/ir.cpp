#include "irbmc/ir.h"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

namespace irbmc {

const char* property_class_name(PropertyClass c) {
  switch (c) {
    case PropertyClass::User: return "user";
    case PropertyClass::Overflow: return "overflow";
    case PropertyClass::DivZero: return "div-zero";
    case PropertyClass::Bounds: return "bounds";
    case PropertyClass::Unwinding: return "unwinding";
    case PropertyClass::ModeExit: return "mode-exit-guarantee";
    case PropertyClass::AssumeProbe: return "assume-probe";
  }
  return "?";
}

Instr Instr::assign(std::string lhs, ExprPtr rhs, int line) {
  Instr in;
  in.op = Op::Assign;
  in.lhs = std::move(lhs);
  in.rhs = std::move(rhs);
  in.line = line;
  return in;
}

Instr Instr::assign_elem(std::string lhs, ExprPtr index, ExprPtr rhs, int line) {
  Instr in = assign(std::move(lhs), std::move(rhs), line);
  in.lhs_index = std::move(index);
  return in;
}

Instr Instr::havoc(std::string lhs, int line) {
  Instr in;
  in.op = Op::Havoc;
  in.lhs = std::move(lhs);
  in.line = line;
  return in;
}

Instr Instr::assume(ExprPtr cond, std::string id, int line) {
  Instr in;
  in.op = Op::Assume;
  in.cond = std::move(cond);
  in.prop_id = std::move(id);
  in.line = line;
  return in;
}

Instr Instr::assertion(ExprPtr cond, PropertyClass cls, std::string id, int line) {
  Instr in;
  in.op = Op::Assert;
  in.cond = std::move(cond);
  in.prop_class = cls;
  in.prop_id = std::move(id);
  in.line = line;
  return in;
}

Instr Instr::jump(int target) {
  Instr in;
  in.op = Op::Goto;
  in.target = target;
  return in;
}

Instr Instr::branch(ExprPtr cond, int target) {
  Instr in;
  in.op = Op::IfGoto;
  in.cond = std::move(cond);
  in.target = target;
  return in;
}

Instr Instr::call(std::string callee, std::vector<ExprPtr> args, std::string lhs, int line) {
  Instr in;
  in.op = Op::Call;
  in.callee = std::move(callee);
  in.args = std::move(args);
  in.lhs = std::move(lhs);
  in.line = line;
  return in;
}

Instr Instr::ret(ExprPtr value, int line) {
  Instr in;
  in.op = Op::Return;
  in.rhs = std::move(value);
  in.line = line;
  return in;
}

Instr Instr::mmio_read(std::string lhs, ExprPtr address, int line) {
  Instr in;
  in.op = Op::MmioRead;
  in.lhs = std::move(lhs);
  in.address = std::move(address);
  in.line = line;
  return in;
}

Instr Instr::mmio_write(ExprPtr address, ExprPtr value, int line) {
  Instr in;
  in.op = Op::MmioWrite;
  in.address = std::move(address);
  in.rhs = std::move(value);
  in.line = line;
  return in;
}

const Symbol* IrProgram::find_symbol(const Function& fn, const std::string& name) const {
  auto it = fn.locals.find(name);
  if (it != fn.locals.end()) return &it->second;
  auto git = globals.find(name);
  if (git != globals.end()) return &git->second;
  return nullptr;
}

const Function* IrProgram::find_function(const std::string& name) const {
  auto it = functions.find(name);
  return it == functions.end() ? nullptr : &it->second;
}

std::pair<const Function*, const LoopInfo*> IrProgram::find_loop(const std::string& id) const {
  for (const auto& [_, fn] : functions) {
    for (const auto& loop : fn.loops) {
      if (loop.id == id) return {&fn, &loop};
    }
  }
  return {nullptr, nullptr};
}

namespace {

// Jump targets inside an inserted block are relative to the block start;
// a relative target equal to the block size reaches the original instruction.
void relocate_inserted(std::vector<Instr>& instrs, int base) {
  for (Instr& in : instrs) {
    if ((in.op == Op::Goto || in.op == Op::IfGoto) && in.target >= 0) in.target += base;
  }
}

void shift_body(Function& fn, int p, int k, bool retarget_p) {
  for (Instr& in : fn.body) {
    if (in.op != Op::Goto && in.op != Op::IfGoto) continue;
    if (retarget_p ? in.target > p : in.target >= p) in.target += k;
  }
  for (LoopInfo& loop : fn.loops) {
    if (retarget_p ? loop.header > p : loop.header >= p) loop.header += k;
    if (loop.backedge >= p) loop.backedge += k;
  }
}

}  // namespace

void insert_before(Function& fn, int idx, std::vector<Instr> instrs) {
  assert(idx >= 0 && idx <= int(fn.body.size()));
  const int k = int(instrs.size());
  if (k == 0) return;
  shift_body(fn, idx, k, /*retarget_p=*/true);
  relocate_inserted(instrs, idx);
  fn.body.insert(fn.body.begin() + idx, std::make_move_iterator(instrs.begin()),
                 std::make_move_iterator(instrs.end()));
}

void insert_fallthrough_after(Function& fn, int idx, std::vector<Instr> instrs) {
  const int p = idx + 1;
  assert(p >= 0 && p <= int(fn.body.size()));
  const int k = int(instrs.size());
  if (k == 0) return;
  shift_body(fn, p, k, /*retarget_p=*/false);
  relocate_inserted(instrs, p);
  fn.body.insert(fn.body.begin() + p, std::make_move_iterator(instrs.begin()),
                 std::make_move_iterator(instrs.end()));
}

void instr_reads(const Instr& in, std::vector<std::string>& out) {
  switch (in.op) {
    case Op::Assign:
      collect_vars(in.rhs, out);
      if (in.lhs_index) {
        collect_vars(in.lhs_index, out);
        out.push_back(in.lhs);  // element write leaves the rest of the array observable
      }
      break;
    case Op::Havoc:
      break;
    case Op::Assume:
    case Op::Assert:
    case Op::IfGoto:
      collect_vars(in.cond, out);
      break;
    case Op::Goto:
      break;
    case Op::Call:
      for (const auto& a : in.args) collect_vars(a, out);
      break;
    case Op::Return:
      collect_vars(in.rhs, out);
      break;
    case Op::MmioRead:
      collect_vars(in.address, out);
      break;
    case Op::MmioWrite:
      collect_vars(in.address, out);
      collect_vars(in.rhs, out);
      break;
  }
}

void instr_writes(const Instr& in, std::vector<std::string>& out) {
  switch (in.op) {
    case Op::Assign:
    case Op::Havoc:
    case Op::MmioRead:
      out.push_back(in.lhs);
      break;
    case Op::Call:
      if (!in.lhs.empty()) out.push_back(in.lhs);
      break;
    default:
      break;
  }
}

namespace {

std::string instr_text(const Instr& in) {
  std::ostringstream os;
  switch (in.op) {
    case Op::Assign:
      os << in.lhs;
      if (in.lhs_index) os << '[' << to_string(in.lhs_index) << ']';
      os << " := " << to_string(in.rhs);
      break;
    case Op::Havoc:
      os << "havoc " << in.lhs;
      break;
    case Op::Assume:
      os << "assume " << to_string(in.cond);
      if (!in.prop_id.empty()) os << "  {" << in.prop_id << '}';
      break;
    case Op::Assert:
      os << "assert " << to_string(in.cond) << "  {" << property_class_name(in.prop_class);
      if (!in.prop_id.empty()) os << ' ' << in.prop_id;
      os << '}';
      break;
    case Op::Goto:
      os << "goto " << in.target;
      break;
    case Op::IfGoto:
      os << "if " << to_string(in.cond) << " goto " << in.target;
      break;
    case Op::Call:
      if (!in.lhs.empty()) os << in.lhs << " := ";
      os << "call " << in.callee << '(';
      for (size_t i = 0; i < in.args.size(); ++i) {
        if (i) os << ", ";
        os << to_string(in.args[i]);
      }
      os << ')';
      break;
    case Op::Return:
      os << "return";
      if (in.rhs) os << ' ' << to_string(in.rhs);
      break;
    case Op::MmioRead:
      os << in.lhs << " := [" << to_string(in.address) << ']';
      break;
    case Op::MmioWrite:
      os << '[' << to_string(in.address) << "] := " << to_string(in.rhs);
      break;
  }
  return os.str();
}

std::string symbol_text(const Symbol& s) {
  std::ostringstream os;
  switch (s.kind) {
    case VarKind::Plain: break;
    case VarKind::Shared: os << "@shared "; break;
    case VarKind::Persistent: os << "@persistent "; break;
    case VarKind::MmioInput:
      os << "@input(0x" << std::hex << (s.address ? *s.address : 0) << std::dec << ") ";
      break;
  }
  if (s.is_const) os << "const ";
  os << ty_name(s.type) << ' ' << s.name;
  if (s.array_len) os << '[' << *s.array_len << ']';
  if (s.init) {
    if (is_signed(s.type)) {
      os << " = " << as_signed(*s.init, s.type);
    } else {
      os << " = " << *s.init;
    }
  }
  if (!s.array_init.empty()) {
    os << " = {";
    for (size_t i = 0; i < s.array_init.size(); ++i) {
      if (i) os << ", ";
      os << s.array_init[i];
    }
    os << '}';
  }
  return os.str();
}

}  // namespace

std::string dump(const Function& fn) {
  std::ostringstream os;
  os << "fn " << fn.name << '(';
  for (size_t i = 0; i < fn.params.size(); ++i) {
    if (i) os << ", ";
    auto it = fn.locals.find(fn.params[i]);
    os << (it != fn.locals.end() ? ty_name(it->second.type) : "?") << ' ' << fn.params[i];
  }
  os << ')';
  if (fn.ret) os << " -> " << ty_name(*fn.ret);
  if (fn.is_mode) os << "  [mode " << fn.mode_name << " order " << fn.mode_order << ']';
  if (fn.is_isr) os << "  [interrupt " << fn.isr_name << " mint " << fn.mint_cycles << ']';
  os << '\n';
  for (const auto& [name, sym] : fn.locals) {
    bool is_param = std::find(fn.params.begin(), fn.params.end(), name) != fn.params.end();
    if (!is_param) os << "  local " << symbol_text(sym) << '\n';
  }
  for (size_t i = 0; i < fn.body.size(); ++i) {
    os << std::setw(5) << i << ": " << instr_text(fn.body[i]) << '\n';
  }
  for (const auto& loop : fn.loops) {
    os << "  loop " << loop.id << " header " << loop.header << " backedge " << loop.backedge;
    if (loop.static_trip) os << " trip " << *loop.static_trip;
    os << '\n';
  }
  return os.str();
}

std::string dump(const IrProgram& prog) {
  std::ostringstream os;
  for (const auto& [_, sym] : prog.globals) os << "global " << symbol_text(sym) << '\n';
  for (const auto& [_, fn] : prog.functions) {
    os << '\n' << dump(fn);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// validation

namespace {

class Validator {
 public:
  explicit Validator(const IrProgram& prog) : prog_(prog) {}

  Diagnostics run() {
    check_globals();
    check_modes();
    for (const auto& [_, fn] : prog_.functions) check_function(fn);
    check_recursion();
    check_shared_discipline();
    return std::move(diags_);
  }

 private:
  void error(int line, const std::string& msg) {
    diags_.push_back({Severity::Error, line, 0, msg});
  }
  void warning(int line, const std::string& msg) {
    diags_.push_back({Severity::Warning, line, 0, msg});
  }

  void check_globals() {
    for (const auto& [name, sym] : prog_.globals) {
      if (sym.array_len && *sym.array_len == 0) error(sym.line, "array '" + name + "' has length 0");
      if (sym.array_len && sym.array_init.size() > *sym.array_len)
        error(sym.line, "too many initializers for '" + name + "'");
      if (sym.kind == VarKind::MmioInput) {
        if (!sym.address) error(sym.line, "@input variable '" + name + "' has no address");
        if (sym.init || !sym.array_init.empty())
          error(sym.line, "@input variable '" + name + "' cannot have an initializer");
        if (sym.array_len) error(sym.line, "@input variable '" + name + "' cannot be an array");
      } else if (sym.address) {
        error(sym.line, "variable '" + name + "' has an address but is not @input");
      }
      if (sym.is_const && !sym.init && sym.array_init.empty() && !sym.array_len)
        error(sym.line, "const variable '" + name + "' has no initializer");
    }
  }

  void check_modes() {
    std::map<int, std::string> orders;
    for (const auto& [name, fn] : prog_.functions) {
      if (!fn.is_mode) continue;
      if (fn.is_isr) error(fn.line, "function '" + name + "' is both a mode and an interrupt");
      if (!fn.params.empty() || fn.ret)
        error(fn.line, "mode entry '" + name + "' must take no parameters and return nothing");
      auto [it, fresh] = orders.emplace(fn.mode_order, name);
      if (!fresh)
        error(fn.line, "mode order " + std::to_string(fn.mode_order) + " used by both '" +
                           it->second + "' and '" + name + "'");
    }
    int expect = 0;
    for (const auto& [order, name] : orders) {
      if (order != expect)
        error(0, "mode orders must be contiguous from 0; missing order " + std::to_string(expect));
      ++expect;
    }
    for (const auto& name : prog_.isr_functions) {
      const Function* fn = prog_.find_function(name);
      if (!fn || !fn->is_isr) {
        error(0, "isr list names unknown interrupt function '" + name + "'");
        continue;
      }
      if (!fn->params.empty() || fn->ret)
        error(fn->line, "interrupt '" + name + "' must take no parameters and return nothing");
      if (fn->mint_cycles == 0)
        error(fn->line, "interrupt '" + name + "' needs a positive minimum inter-arrival time");
    }
  }

  const Symbol* resolve(const Function& fn, const std::string& name) {
    return prog_.find_symbol(fn, name);
  }

  void check_expr(const Function& fn, const ExprPtr& e, int line) {
    if (!e) return;
    switch (e->kind) {
      case ExprKind::Var: {
        const Symbol* s = resolve(fn, e->name);
        if (!s) {
          error(line, "unknown variable '" + e->name + "' in " + fn.name);
        } else if (s->array_len) {
          error(line, "array '" + e->name + "' used without subscript");
        } else if (s->type != e->type) {
          error(line, "variable '" + e->name + "' used at type " + ty_name(e->type) +
                          " but declared " + ty_name(s->type));
        }
        break;
      }
      case ExprKind::Index: {
        const Symbol* s = resolve(fn, e->name);
        if (!s) {
          error(line, "unknown array '" + e->name + "' in " + fn.name);
        } else if (!s->array_len) {
          error(line, "subscript on non-array '" + e->name + "'");
        } else if (s->type != e->type) {
          error(line, "array '" + e->name + "' element type mismatch");
        }
        break;
      }
      case ExprKind::Nondet:
        error(line, "nondet expression survived lowering");
        break;
      default:
        break;
    }
    check_expr(fn, e->a, line);
    check_expr(fn, e->b, line);
    check_expr(fn, e->c, line);
  }

  void check_write(const Function& fn, const std::string& name, const ExprPtr& index, int line) {
    const Symbol* s = resolve(fn, name);
    if (!s) {
      error(line, "write to unknown variable '" + name + "' in " + fn.name);
      return;
    }
    if (s->is_const) error(line, "write to const variable '" + name + "'");
    if (s->kind == VarKind::MmioInput) error(line, "write to @input variable '" + name + "'");
    if (s->array_len && !index) error(line, "array '" + name + "' assigned without subscript");
    if (!s->array_len && index) error(line, "subscript write to non-array '" + name + "'");
  }

  void check_function(const Function& fn) {
    const int n = int(fn.body.size());
    for (int i = 0; i < n; ++i) {
      const Instr& in = fn.body[i];
      const int line = in.line;
      switch (in.op) {
        case Op::Assign:
          check_write(fn, in.lhs, in.lhs_index, line);
          check_expr(fn, in.lhs_index, line);
          check_expr(fn, in.rhs, line);
          if (in.rhs) {
            const Symbol* s = resolve(fn, in.lhs);
            if (s && !s->array_len && s->type != in.rhs->type)
              error(line, "assignment to '" + in.lhs + "' of type " + ty_name(in.rhs->type) +
                              " but variable is " + ty_name(s->type));
            if (s && s->array_len && s->type != in.rhs->type)
              error(line, "element assignment to '" + in.lhs + "' type mismatch");
          }
          break;
        case Op::Havoc: {
          const Symbol* s = resolve(fn, in.lhs);
          if (!s) {
            error(line, "havoc of unknown variable '" + in.lhs + "'");
          } else if (s->is_const || s->kind == VarKind::MmioInput) {
            error(line, "havoc of non-writable variable '" + in.lhs + "'");
          }
          break;
        }
        case Op::Assume:
        case Op::Assert:
          check_expr(fn, in.cond, line);
          if (in.cond && in.cond->type != Ty::Bool)
            error(line, "condition must be bool");
          break;
        case Op::Goto:
        case Op::IfGoto:
          if (in.target < 0 || in.target > n)
            error(line, "jump target " + std::to_string(in.target) + " out of range in " + fn.name);
          if (in.op == Op::IfGoto) {
            check_expr(fn, in.cond, line);
            if (in.cond && in.cond->type != Ty::Bool) error(line, "branch condition must be bool");
          }
          break;
        case Op::Call: {
          const Function* callee = prog_.find_function(in.callee);
          if (!callee) {
            error(line, "call to unknown function '" + in.callee + "'");
            break;
          }
          // Synthesized drivers ("__" prefix) sequence the modes; user code
          // cannot, it reaches them only through the mode order.
          if (callee->is_mode && fn.name.rfind("__", 0) != 0)
            error(line, "mode entry '" + in.callee + "' cannot be called");
          if (in.args.size() != callee->params.size()) {
            error(line, "call to '" + in.callee + "' with " + std::to_string(in.args.size()) +
                            " args, expected " + std::to_string(callee->params.size()));
          } else {
            for (size_t k = 0; k < in.args.size(); ++k) {
              check_expr(fn, in.args[k], line);
              auto pit = callee->locals.find(callee->params[k]);
              if (pit != callee->locals.end() && in.args[k] &&
                  in.args[k]->type != pit->second.type)
                error(line, "argument " + std::to_string(k + 1) + " of call to '" + in.callee +
                                "' has type " + ty_name(in.args[k]->type) + ", expected " +
                                ty_name(pit->second.type));
            }
          }
          if (!in.lhs.empty()) {
            check_write(fn, in.lhs, nullptr, line);
            if (!callee->ret) {
              error(line, "call result bound but '" + in.callee + "' returns nothing");
            } else {
              const Symbol* s = resolve(fn, in.lhs);
              if (s && s->type != *callee->ret)
                error(line, "call result type mismatch for '" + in.lhs + "'");
            }
          }
          break;
        }
        case Op::Return:
          check_expr(fn, in.rhs, line);
          if (fn.ret && !in.rhs) error(line, "return without value in '" + fn.name + "'");
          if (!fn.ret && in.rhs) error(line, "return with value in void function '" + fn.name + "'");
          if (fn.ret && in.rhs && in.rhs->type != *fn.ret)
            error(line, "return type mismatch in '" + fn.name + "'");
          break;
        case Op::MmioRead: {
          check_write(fn, in.lhs, nullptr, line);
          check_expr(fn, in.address, line);
          if (in.address && !is_integer(in.address->type)) error(line, "mmio address must be an integer");
          break;
        }
        case Op::MmioWrite:
          check_expr(fn, in.address, line);
          check_expr(fn, in.rhs, line);
          if (in.address && !is_integer(in.address->type)) error(line, "mmio address must be an integer");
          break;
      }
    }
    // A value-returning function must not fall off the end.
    if (fn.ret) {
      bool falls = n == 0;
      if (n > 0) {
        const Instr& last = fn.body[n - 1];
        falls = last.op != Op::Return && last.op != Op::Goto;
      }
      for (const Instr& in : fn.body) {
        if ((in.op == Op::Goto || in.op == Op::IfGoto) && in.target == n) falls = true;
      }
      if (falls) error(fn.line, "function '" + fn.name + "' can exit without returning a value");
    }
    for (const auto& loop : fn.loops) {
      if (loop.header < 0 || loop.header >= n || loop.backedge < 0 || loop.backedge >= n)
        error(fn.line, "loop " + loop.id + " has out-of-range markers");
    }
  }

  void check_recursion() {
    // 0 = unvisited, 1 = on stack, 2 = done
    std::map<std::string, int> state;
    for (const auto& [name, _] : prog_.functions) state[name] = 0;
    std::vector<std::string> stack;
    for (const auto& [name, _] : prog_.functions) {
      if (state[name] == 0 && dfs_cycle(name, state)) break;
    }
  }

  bool dfs_cycle(const std::string& name, std::map<std::string, int>& state) {
    state[name] = 1;
    const Function* fn = prog_.find_function(name);
    if (fn) {
      for (const Instr& in : fn->body) {
        if (in.op != Op::Call) continue;
        auto it = state.find(in.callee);
        if (it == state.end()) continue;
        if (it->second == 1) {
          error(in.line, "recursive call cycle through '" + in.callee + "'");
          state[name] = 2;
          return true;
        }
        if (it->second == 0 && dfs_cycle(in.callee, state)) return true;
      }
    }
    state[name] = 2;
    return false;
  }

  void check_shared_discipline() {
    std::map<std::string, std::set<std::string>> isr_writes, isr_reads, main_reads, main_writes;
    for (const auto& [fname, fn] : prog_.functions) {
      for (const Instr& in : fn.body) {
        std::vector<std::string> rs, ws;
        instr_reads(in, rs);
        instr_writes(in, ws);
        for (const auto& v : rs) (fn.is_isr ? isr_reads[v] : main_reads[v]).insert(fname);
        for (const auto& v : ws) (fn.is_isr ? isr_writes[v] : main_writes[v]).insert(fname);
      }
    }
    for (const auto& [name, sym] : prog_.globals) {
      if (sym.kind == VarKind::Shared) {
        if (isr_writes[name].empty())
          warning(sym.line, "@shared variable '" + name + "' is never written in an interrupt");
        if (main_reads[name].empty() && main_writes[name].empty())
          warning(sym.line, "@shared variable '" + name + "' is never used outside interrupts");
      } else if (sym.kind == VarKind::Persistent) {
        if (isr_reads[name].empty() && isr_writes[name].empty())
          warning(sym.line, "@persistent variable '" + name + "' is not used by any interrupt");
        std::set<std::string> owners = isr_writes[name];
        owners.insert(isr_reads[name].begin(), isr_reads[name].end());
        if (owners.size() > 1)
          warning(sym.line, "@persistent variable '" + name + "' is used by multiple interrupts");
        if (!main_reads[name].empty() || !main_writes[name].empty())
          warning(sym.line, "@persistent variable '" + name + "' is touched outside interrupts");
      } else if (sym.kind == VarKind::Plain) {
        if (!isr_writes[name].empty() && !main_reads[name].empty())
          warning(sym.line,
                  "variable '" + name + "' is written in an interrupt and read elsewhere; mark it @shared");
      }
    }
  }

  const IrProgram& prog_;
  Diagnostics diags_;
};

}  // namespace

Diagnostics validate(const IrProgram& prog) { return Validator(prog).run(); }

}  // namespace irbmc
