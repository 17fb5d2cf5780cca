#include <algorithm>
#include <deque>

#include "irbmc/analysis.h"
#include "irbmc/expr.h"

namespace irbmc::analysis {

namespace {

using NameSet = std::set<std::string>;

void add_all(NameSet& dst, const std::vector<std::string>& src) {
  dst.insert(src.begin(), src.end());
}

// Call-graph postorder: callees before callers. Recursion is rejected by
// validate(), so every call edge points at an already-finished function.
std::vector<const Function*> postorder(const IrProgram& prog) {
  std::vector<const Function*> order;
  NameSet done;
  std::vector<std::pair<const Function*, size_t>> stack;
  for (const auto& [name, fn] : prog.functions) {
    if (done.count(name)) continue;
    stack.push_back({&fn, 0});
    while (!stack.empty()) {
      auto& [cur, next] = stack.back();
      bool descended = false;
      while (next < cur->body.size()) {
        const Instr& in = cur->body[next++];
        if (in.op != Op::Call) continue;
        const Function* callee = prog.find_function(in.callee);
        if (!callee || done.count(callee->name)) continue;
        stack.push_back({callee, 0});
        descended = true;
        break;
      }
      if (descended) continue;
      if (!done.count(cur->name)) {
        done.insert(cur->name);
        order.push_back(cur);
      }
      stack.pop_back();
    }
  }
  return order;
}

struct Summary {
  NameSet may_read;    // globals possibly read before overwrite
  NameSet must_write;  // globals overwritten on every path to return
  NameSet may_write;   // globals possibly written
};

// Whole-program backward may-liveness. Names are unqualified: MiniC rejects
// shadowing, so a name is unambiguous within any one function's scope.
class Liveness {
 public:
  explicit Liveness(const IrProgram& prog) : prog_(prog) {
    for (const auto& [name, sym] : prog_.globals) global_names_.insert(name);
    for (const Function* fn : postorder(prog_)) summarize(*fn);
    solve();
    collect_isr_vars();
  }

  // Liveness immediately before instruction idx (or at exit for idx == size).
  NameSet at(const std::string& fn_name, size_t idx) const {
    auto it = live_.find(fn_name);
    const Function* fn = prog_.find_function(fn_name);
    if (it == live_.end() || !fn || idx > fn->body.size())
      throw InternalError("live_variables: invalid program point " + fn_name + "#" +
                          std::to_string(idx));
    NameSet out = it->second[idx];
    out.insert(isr_vars_.begin(), isr_vars_.end());
    return out;
  }

  const NameSet& isr_vars() const { return isr_vars_; }
  const Summary& summary(const std::string& fn) const { return summaries_.at(fn); }

 private:
  void gen_kill(const Function& fn, const Instr& in, NameSet& gen, NameSet& kill) const {
    std::vector<std::string> names;
    instr_reads(in, names);
    add_all(gen, names);
    switch (in.op) {
      case Op::Assign:
        if (!in.lhs_index) kill.insert(in.lhs);  // element writes keep the array live
        break;
      case Op::Havoc:
      case Op::MmioRead:
        kill.insert(in.lhs);
        break;
      case Op::Call: {
        auto it = summaries_.find(in.callee);
        if (it != summaries_.end()) {
          gen.insert(it->second.may_read.begin(), it->second.may_read.end());
          kill.insert(it->second.must_write.begin(), it->second.must_write.end());
        }
        if (!in.lhs.empty()) kill.insert(in.lhs);
        break;
      }
      default:
        break;
    }
    (void)fn;
  }

  static void successors(const Function& fn, size_t i, std::vector<size_t>& out) {
    out.clear();
    const Instr& in = fn.body[i];
    size_t n = fn.body.size();
    switch (in.op) {
      case Op::Goto:
        out.push_back(size_t(in.target));
        break;
      case Op::IfGoto:
        out.push_back(size_t(in.target));
        out.push_back(i + 1);
        break;
      case Op::Return:
        out.push_back(n);
        break;
      default:
        out.push_back(i + 1);
        break;
    }
  }

  // Recomputes fn's live vector under the current exit set; true on change.
  bool relax(const Function& fn) {
    auto& live = live_[fn.name];
    size_t n = fn.body.size();
    if (live.size() != n + 1) live.assign(n + 1, {});
    live[n] = exit_live_[fn.name];
    bool changed_any = false;
    std::vector<size_t> succ;
    for (bool changed = true; changed;) {
      changed = false;
      for (size_t k = n; k-- > 0;) {
        NameSet out;
        successors(fn, k, succ);
        for (size_t s : succ) out.insert(live[s].begin(), live[s].end());
        NameSet gen, kill;
        gen_kill(fn, fn.body[k], gen, kill);
        for (const std::string& v : kill) out.erase(v);
        out.insert(gen.begin(), gen.end());
        if (out != live[k]) {
          live[k] = std::move(out);
          changed = true;
          changed_any = true;
        }
      }
    }
    return changed_any;
  }

  void solve() {
    for (const auto& [name, fn] : prog_.functions) exit_live_[name] = {};
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [name, fn] : prog_.functions) relax(fn);
      for (const auto& [name, fn] : prog_.functions) {
        const auto& live = live_[name];
        for (size_t i = 0; i < fn.body.size(); ++i) {
          const Instr& in = fn.body[i];
          if (in.op != Op::Call) continue;
          const Function* callee = prog_.find_function(in.callee);
          if (!callee) continue;
          NameSet cont;
          for (const std::string& v : live[i + 1])
            if (global_names_.count(v) && !(in.lhs == v)) cont.insert(v);
          NameSet& ex = exit_live_[callee->name];
          size_t before = ex.size();
          ex.insert(cont.begin(), cont.end());
          if (ex.size() != before) changed = true;
        }
      }
    }
  }

  void summarize(const Function& fn) {
    // may_read: in-function liveness with an empty exit set.
    exit_live_[fn.name] = {};
    relax(fn);
    Summary sum;
    for (const std::string& v : live_[fn.name][0])
      if (global_names_.count(v)) sum.may_read.insert(v);

    // must_write: forward intersection over paths; may_write: plain union.
    size_t n = fn.body.size();
    const NameSet all = global_names_;
    std::vector<NameSet> written(n + 1, all);
    std::vector<char> reached(n + 1, 0);
    written[0] = {};
    reached[0] = 1;
    NameSet exit_written = all;
    bool exit_reached = false;
    std::vector<size_t> succ;
    for (bool changed = true; changed;) {
      changed = false;
      for (size_t i = 0; i < n; ++i) {
        if (!reached[i]) continue;
        NameSet w = written[i];
        const Instr& in = fn.body[i];
        std::vector<std::string> outs;
        instr_writes(in, outs);
        for (const std::string& v : outs)
          if (global_names_.count(v) && !in.lhs_index) w.insert(v);
        if (in.op == Op::Call) {
          auto it = summaries_.find(in.callee);
          if (it != summaries_.end())
            w.insert(it->second.must_write.begin(), it->second.must_write.end());
        }
        auto meet = [&changed](NameSet& dst, bool& dst_reached, const NameSet& w) {
          if (!dst_reached) {
            dst = w;
            dst_reached = true;
            changed = true;
            return;
          }
          NameSet inter;
          std::set_intersection(dst.begin(), dst.end(), w.begin(), w.end(),
                                std::inserter(inter, inter.begin()));
          if (inter != dst) {
            dst = std::move(inter);
            changed = true;
          }
        };
        successors(fn, i, succ);
        for (size_t s : succ) {
          if (s >= n) {
            meet(exit_written, exit_reached, w);
          } else {
            bool r = reached[s];
            meet(written[s], r, w);
            reached[s] = char(r);
          }
        }
      }
    }
    sum.must_write = exit_reached ? exit_written : NameSet{};

    for (const Instr& in : fn.body) {
      std::vector<std::string> outs;
      instr_writes(in, outs);
      for (const std::string& v : outs)
        if (global_names_.count(v)) sum.may_write.insert(v);
      if (in.op == Op::Call) {
        auto it = summaries_.find(in.callee);
        if (it != summaries_.end())
          sum.may_write.insert(it->second.may_write.begin(), it->second.may_write.end());
      }
    }
    summaries_[fn.name] = std::move(sum);
  }

  void collect_isr_vars() {
    NameSet reach;
    std::deque<std::string> work(prog_.isr_functions.begin(), prog_.isr_functions.end());
    while (!work.empty()) {
      std::string f = work.front();
      work.pop_front();
      if (!reach.insert(f).second) continue;
      const Function* fn = prog_.find_function(f);
      if (!fn) continue;
      for (const Instr& in : fn->body)
        if (in.op == Op::Call) work.push_back(in.callee);
    }
    for (const std::string& f : reach) {
      const Function* fn = prog_.find_function(f);
      if (!fn) continue;
      for (const Instr& in : fn->body) {
        std::vector<std::string> names;
        instr_reads(in, names);
        instr_writes(in, names);
        for (const std::string& v : names) {
          auto it = prog_.globals.find(v);
          if (it != prog_.globals.end() && !it->second.is_const) isr_vars_.insert(v);
        }
      }
    }
  }

  const IrProgram& prog_;
  NameSet global_names_;
  std::map<std::string, Summary> summaries_;
  std::map<std::string, std::vector<NameSet>> live_;
  std::map<std::string, NameSet> exit_live_;
  NameSet isr_vars_;
};

}  // namespace

std::set<std::string> live_variables(const IrProgram& prog, const ProgramPoint& point) {
  return Liveness(prog).at(point.function, point.index);
}

std::string add_whole_driver(IrProgram& prog) {
  if (prog.mode_functions.empty()) return "main";
  if (prog.functions.count("__whole")) return "__whole";
  Function fn;
  fn.name = "__whole";
  for (const std::string& m : prog.mode_functions) fn.body.push_back(Instr::call(m));
  fn.body.push_back(Instr::ret());
  prog.functions.emplace(fn.name, std::move(fn));
  return "__whole";
}

std::vector<ModeInterface> mode_interfaces(const IrProgram& prog,
                                           const std::map<BoundaryKey, VarRanges>& ranges,
                                           Diagnostics& diags) {
  if (prog.mode_functions.size() < 2) return {};

  IrProgram whole = prog;
  std::string entry = add_whole_driver(whole);
  Liveness lv(whole);

  std::vector<ModeInterface> out;
  for (size_t k = 0; k + 1 < prog.mode_functions.size(); ++k) {
    ModeInterface mi;
    const Function* pred = prog.find_function(prog.mode_functions[k]);
    const Function* succ = prog.find_function(prog.mode_functions[k + 1]);
    mi.predecessor = pred->mode_name;
    mi.successor = succ->mode_name;
    for (const std::string& v : lv.at(entry, k + 1)) {
      auto it = prog.globals.find(v);
      if (it != prog.globals.end() && !it->second.is_const) mi.live.insert(v);
    }
    auto rit = ranges.find({mi.predecessor, mi.successor});
    if (rit != ranges.end()) {
      for (const auto& [var, bounds] : rit->second) {
        if (!prog.globals.count(var)) {
          diags.push_back({Severity::Error, 0, 0,
                           "range at boundary " + mi.predecessor + "->" + mi.successor +
                               " names unknown variable '" + var + "'"});
          continue;
        }
        if (!mi.live.count(var)) {
          diags.push_back({Severity::Warning, 0, 0,
                           "range for '" + var + "' at boundary " + mi.predecessor + "->" +
                               mi.successor + " is not live there; kept"});
          mi.live.insert(var);
        }
        mi.ranges[var] = bounds;
      }
    }
    out.push_back(std::move(mi));
  }
  return out;
}

DeadCode dead_code(const IrProgram& prog, const std::string& entry) {
  std::set<std::string> reached;
  std::deque<std::string> work;
  work.push_back(entry);
  for (const std::string& isr : prog.isr_functions) work.push_back(isr);
  while (!work.empty()) {
    std::string f = work.front();
    work.pop_front();
    if (!reached.insert(f).second) continue;
    const Function* fn = prog.find_function(f);
    if (!fn) continue;
    for (const Instr& in : fn->body)
      if (in.op == Op::Call) work.push_back(in.callee);
  }

  DeadCode dc;
  std::set<std::string> referenced;
  for (const std::string& f : reached) {
    const Function* fn = prog.find_function(f);
    if (!fn) continue;
    for (const Instr& in : fn->body) {
      std::vector<std::string> names;
      instr_reads(in, names);
      instr_writes(in, names);
      referenced.insert(names.begin(), names.end());
    }
  }
  for (const auto& [name, fn] : prog.functions)
    if (!reached.count(name)) dc.functions.insert(name);
  for (const auto& [name, sym] : prog.globals)
    if (!referenced.count(name)) dc.globals.insert(name);
  return dc;
}

namespace {

// A variable defined by exactly one constant assignment and nothing else.
std::optional<uint64_t> chain_constant(const IrProgram& prog, const Function& fn,
                                       const std::string& name) {
  std::optional<uint64_t> found;
  for (const auto& [fname, f] : prog.functions) {
    bool is_home = fname == fn.name;
    if (!is_home && !prog.globals.count(name)) continue;
    for (const Instr& in : f.body) {
      std::vector<std::string> outs;
      instr_writes(in, outs);
      if (std::find(outs.begin(), outs.end(), name) == outs.end()) continue;
      if (in.op != Op::Assign || in.lhs_index) return std::nullopt;
      ExprPtr v = fold(in.rhs);
      if (v->kind != ExprKind::Const || found) return std::nullopt;
      found = v->value;
    }
  }
  return found;
}

}  // namespace

std::vector<MmioSite> mmio_sites(const IrProgram& prog, Diagnostics& diags) {
  std::vector<MmioSite> out;
  for (const auto& [fname, fn] : prog.functions) {
    for (size_t i = 0; i < fn.body.size(); ++i) {
      const Instr& in = fn.body[i];
      if (in.op != Op::MmioRead && in.op != Op::MmioWrite) continue;
      MmioSite site;
      site.function = fname;
      site.index = i;
      site.is_write = in.op == Op::MmioWrite;
      ExprPtr addr = fold(in.address);
      if (addr->kind == ExprKind::Const) {
        site.address = addr->value;
      } else if (addr->kind == ExprKind::Var) {
        const Symbol* sym = prog.find_symbol(fn, addr->name);
        if (sym && sym->is_const && sym->init)
          site.address = *sym->init;
        else
          site.address = chain_constant(prog, fn, addr->name);
      }
      if (!site.address) {
        diags.push_back({Severity::Warning, in.line, 0,
                         "mmio address in '" + fname + "' at #" + std::to_string(i) +
                             " is not statically resolvable; review required"});
      }
      out.push_back(std::move(site));
    }
  }
  return out;
}

}  // namespace irbmc::analysis
