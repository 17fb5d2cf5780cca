#include <map>
#include <optional>
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

Ty unsigned_same_width(Ty t) {
  switch (width(t)) {
    case 8: return Ty::U8;
    case 16: return Ty::U16;
    case 32: return Ty::U32;
    case 64: return Ty::U64;
    default: bug("subscript of non-integer type");
  }
}

// Symbolic state at one program point. Every declared variable is always
// present; merges therefore line up key for key.
struct Env {
  ExprPtr guard;
  std::map<std::string, ExprPtr> scalars;
  std::map<std::string, std::vector<ExprPtr>> arrays;
};

// Effective index as the evaluator computes it: the subscript's bit pattern
// reinterpreted as unsigned, widened so no cell index wraps back in range.
ExprPtr effective_index(const ExprPtr& subscript) {
  return fb::cast(fb::cast(subscript, unsigned_same_width(subscript->type)), Ty::U64);
}

class Symex {
 public:
  Symex(const IrProgram& prog, const Function& fn) : prog_(prog), fn_(fn) {}

  SsaProgram run() {
    std::vector<std::optional<Env>> incoming(fn_.body.size() + 1);
    incoming[0] = initial_env();

    for (size_t i = 0; i < fn_.body.size(); ++i) {
      if (!incoming[i]) continue;  // no feasible path reaches this point
      Env cur = std::move(*incoming[i]);
      incoming[i].reset();
      const Instr& in = fn_.body[i];
      switch (in.op) {
        case Op::Assign:
          if (in.lhs_index) {
            write_element(cur, in);
          } else {
            cur.scalars[in.lhs] = ev(in.rhs, cur);
          }
          merge_into(incoming[i + 1], std::move(cur));
          break;
        case Op::Havoc: {
          const Symbol* sym = symbol(in.lhs);
          int ver = version_[in.lhs]++;
          if (sym->array_len) {
            // The interpreter draws one nondet value per cell, in cell
            // order; the site list mirrors that so tapes line up.
            std::vector<ExprPtr>& cells = cur.arrays.at(in.lhs);
            for (size_t k = 0; k < cells.size(); ++k) {
              std::string fresh =
                  in.lhs + "!" + std::to_string(ver) + "[" + std::to_string(k) + "]";
              cells[k] = eb::var(fresh, sym->type);
              out_.nondets.push_back({fresh, in.lhs, sym->type, int(i), cur.guard});
            }
          } else {
            std::string fresh = in.lhs + "!" + std::to_string(ver);
            cur.scalars[in.lhs] = eb::var(fresh, sym->type);
            out_.nondets.push_back({fresh, in.lhs, sym->type, int(i), cur.guard});
          }
          merge_into(incoming[i + 1], std::move(cur));
          break;
        }
        case Op::Assume:
          cur.guard = fb::land(cur.guard, ev(in.cond, cur));
          merge_into(incoming[i + 1], std::move(cur));
          break;
        case Op::Assert:
          out_.vccs.push_back(
              {in.prop_id, in.prop_class, cur.guard, ev(in.cond, cur), int(i), in.line});
          merge_into(incoming[i + 1], std::move(cur));
          break;
        case Op::Goto:
          merge_into(incoming[in.target], std::move(cur));
          break;
        case Op::IfGoto: {
          ExprPtr c = ev(in.cond, cur);
          Env taken = cur;
          taken.guard = fb::land(cur.guard, c);
          cur.guard = fb::land(cur.guard, fb::lnot(c));
          merge_into(incoming[in.target], std::move(taken));
          merge_into(incoming[i + 1], std::move(cur));
          break;
        }
        case Op::Return:
          if (in.rhs) cur.scalars["__ret"] = ev(in.rhs, cur);
          merge_into(exit_, std::move(cur));
          break;
        case Op::MmioWrite:
          // The store leaves tracked state untouched; operands are pure.
          merge_into(incoming[i + 1], std::move(cur));
          break;
        case Op::MmioRead:
          bug("MMIO read survived input havocking");
        case Op::Call:
          bug("call survived inlining");
      }
    }
    if (incoming[fn_.body.size()]) merge_into(exit_, std::move(*incoming[fn_.body.size()]));

    if (exit_) {
      out_.exit_guard = exit_->guard;
      out_.exit_values = std::move(exit_->scalars);
      for (auto& [name, cells] : exit_->arrays)
        for (size_t k = 0; k < cells.size(); ++k)
          out_.exit_values.emplace(name + "[" + std::to_string(k) + "]", std::move(cells[k]));
    } else {
      out_.exit_guard = eb::fls();
    }
    return std::move(out_);
  }

 private:
  const Symbol* symbol(const std::string& name) const {
    const Symbol* s = prog_.find_symbol(fn_, name);
    if (!s) bug("reference to undeclared variable '" + name + "'");
    return s;
  }

  Env initial_env() {
    Env env;
    env.guard = eb::tru();
    auto seed = [&](const Symbol& sym) {
      if (sym.array_len) {
        std::vector<ExprPtr> cells;
        cells.reserve(*sym.array_len);
        for (uint32_t k = 0; k < *sym.array_len; ++k) {
          uint64_t v = k < sym.array_init.size() ? sym.array_init[k] : 0;
          cells.push_back(eb::cnst(wrap(v, sym.type), sym.type));
        }
        env.arrays.emplace(sym.name, std::move(cells));
      } else {
        env.scalars.emplace(sym.name, eb::cnst(wrap(sym.init.value_or(0), sym.type), sym.type));
      }
    };
    for (const auto& [name, sym] : prog_.globals) seed(sym);
    for (const auto& [name, sym] : fn_.locals) seed(sym);
    return env;
  }

  ExprPtr ev(const ExprPtr& e, const Env& env) {
    if (!e) bug("missing operand");
    switch (e->kind) {
      case ExprKind::Const:
        return e;
      case ExprKind::Var: {
        auto it = env.scalars.find(e->name);
        if (it == env.scalars.end()) bug("read of undeclared variable '" + e->name + "'");
        return it->second;
      }
      case ExprKind::Index: {
        auto it = env.arrays.find(e->name);
        if (it == env.arrays.end()) bug("subscript of non-array '" + e->name + "'");
        const std::vector<ExprPtr>& cells = it->second;
        ExprPtr idx = effective_index(ev(e->a, env));
        // Out-of-range reads land on the last cell, as in the evaluator.
        ExprPtr value = cells.back();
        for (size_t k = cells.size() - 1; k-- > 0;)
          value = fb::select(fb::eq(idx, eb::cnst(k, Ty::U64)), cells[k], value);
        return value;
      }
      case ExprKind::Unary:
        return fb::unary(e->un, ev(e->a, env));
      case ExprKind::Binary:
        return fb::binary(e->bin, ev(e->a, env), ev(e->b, env));
      case ExprKind::Select:
        return fb::select(ev(e->a, env), ev(e->b, env), ev(e->c, env));
      case ExprKind::Cast:
        return fb::cast(ev(e->a, env), e->type);
      case ExprKind::Nondet:
        bug("free-floating nondet expression");
    }
    bug("unhandled expression kind");
  }

  void write_element(Env& env, const Instr& in) {
    auto it = env.arrays.find(in.lhs);
    if (it == env.arrays.end()) bug("element write to non-array '" + in.lhs + "'");
    ExprPtr idx = effective_index(ev(in.lhs_index, env));
    ExprPtr value = ev(in.rhs, env);
    std::vector<ExprPtr>& cells = it->second;
    // Out-of-range writes match no cell and are dropped, as in the evaluator.
    for (size_t k = 0; k < cells.size(); ++k)
      cells[k] = fb::select(fb::eq(idx, eb::cnst(k, Ty::U64)), value, cells[k]);
  }

  void merge_into(std::optional<Env>& slot, Env&& e) {
    if (is_const_false(e.guard)) return;
    if (!slot) {
      slot = std::move(e);
      return;
    }
    // "__ret" exists only on paths through a value return; a side that lacks
    // it contributes no binding, so the other side's value stands.
    for (auto& [name, value] : slot->scalars) {
      auto it = e.scalars.find(name);
      if (it != e.scalars.end() && it->second != value)
        value = fb::select(e.guard, it->second, value);
    }
    for (const auto& [name, value] : e.scalars) slot->scalars.emplace(name, value);
    for (auto& [name, cells] : slot->arrays) {
      const std::vector<ExprPtr>& theirs = e.arrays.at(name);
      for (size_t k = 0; k < cells.size(); ++k)
        if (theirs[k] != cells[k]) cells[k] = fb::select(e.guard, theirs[k], cells[k]);
    }
    slot->guard = fb::lor(slot->guard, e.guard);
  }

  const IrProgram& prog_;
  const Function& fn_;
  std::optional<Env> exit_;
  std::map<std::string, int> version_;
  SsaProgram out_;
};

}  // namespace

SsaProgram to_ssa(const IrProgram& prog, const std::string& entry) {
  const Function* fn = prog.find_function(entry);
  if (!fn) bug("unknown entry '" + entry + "'");
  for (const Instr& in : fn->body)
    if ((in.op == Op::Goto || in.op == Op::IfGoto) &&
        (in.target < 0 || in.target > int(fn->body.size())))
      bug("dangling jump in '" + entry + "'");
  if (!fn->loops.empty()) bug("'" + entry + "' still has loops");
  return Symex(prog, *fn).run();
}

}  // namespace irbmc::bmc
