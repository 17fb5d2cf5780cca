#include <algorithm>

#include "irbmc/analysis.h"
#include "irbmc/expr.h"

namespace irbmc::analysis {

const char* guard_verdict_name(GuardVerdict v) {
  switch (v) {
    case GuardVerdict::Removable: return "removable";
    case GuardVerdict::NotRemovable: return "not-removable";
    case GuardVerdict::BoundRequired: return "bound-required";
  }
  return "?";
}

namespace {

using NameSet = std::set<std::string>;

// Locals of functions other than `home` are qualified as "fn.var"; globals
// and home locals keep their plain name.
std::string qual(const IrProgram& prog, const std::string& owner, const std::string& home,
                 const std::string& var) {
  if (prog.globals.count(var) || owner == home) return var;
  return owner + "." + var;
}

NameSet transitive_global_writes(const IrProgram& prog, const std::string& callee) {
  NameSet out;
  std::vector<std::string> work{callee};
  NameSet seen;
  while (!work.empty()) {
    std::string f = work.back();
    work.pop_back();
    if (!seen.insert(f).second) continue;
    const Function* fn = prog.find_function(f);
    if (!fn) continue;
    for (const Instr& in : fn->body) {
      if (in.op == Op::Call) work.push_back(in.callee);
      std::vector<std::string> ws;
      instr_writes(in, ws);
      for (const std::string& w : ws)
        if (prog.globals.count(w)) out.insert(w);
    }
  }
  return out;
}

}  // namespace

GuardAnalysis guard_removability(const IrProgram& prog, const std::string& loop_id,
                                 bool eventually_true) {
  auto [fn, loop] = prog.find_loop(loop_id);
  if (!fn || !loop)
    throw InternalError("guard_removability: unknown loop '" + loop_id + "'");

  GuardAnalysis ga;
  ga.loop_id = loop_id;
  const Instr& header = fn->body[size_t(loop->header)];
  ga.guard = fb::lnot(header.cond);  // the header branch exits; re-entry is its negation

  const std::string home = fn->name;

  // Step 1: impact. Seeds are the guard's variables; every write in the body
  // is control-dependent on the guard; then close forward over data flow.
  {
    std::vector<std::string> seed;
    collect_vars(ga.guard, seed);
    for (const std::string& v : seed) ga.impact.insert(qual(prog, home, home, v));

    for (int i = loop->header + 1; i <= loop->backedge; ++i) {
      const Instr& in = fn->body[size_t(i)];
      std::vector<std::string> ws;
      instr_writes(in, ws);
      for (const std::string& w : ws) ga.impact.insert(qual(prog, home, home, w));
      if (in.op == Op::Call) {
        NameSet callee_writes = transitive_global_writes(prog, in.callee);
        ga.impact.insert(callee_writes.begin(), callee_writes.end());
      }
    }

    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [fname, f] : prog.functions) {
        for (const Instr& in : f.body) {
          bool hit = false;
          std::vector<std::string> rs;
          instr_reads(in, rs);
          for (const std::string& r : rs)
            if (ga.impact.count(qual(prog, fname, home, r))) hit = true;

          if (in.op == Op::Call) {
            const Function* callee = prog.find_function(in.callee);
            if (callee) {
              for (size_t j = 0; j < in.args.size() && j < callee->params.size(); ++j) {
                std::vector<std::string> avs;
                collect_vars(in.args[j], avs);
                bool arg_hit = false;
                for (const std::string& a : avs)
                  if (ga.impact.count(qual(prog, fname, home, a))) arg_hit = true;
                if (arg_hit &&
                    ga.impact.insert(qual(prog, callee->name, home, callee->params[j]))
                        .second)
                  changed = true;
              }
              if (!in.lhs.empty() && ga.impact.count(in.callee + ".__ret") &&
                  ga.impact.insert(qual(prog, fname, home, in.lhs)).second)
                changed = true;
            }
            continue;
          }
          if (in.op == Op::Return && in.rhs) {
            std::vector<std::string> rvs;
            collect_vars(in.rhs, rvs);
            bool rhit = false;
            for (const std::string& r : rvs)
              if (ga.impact.count(qual(prog, fname, home, r))) rhit = true;
            if (rhit && ga.impact.insert(fname + ".__ret").second) changed = true;
            continue;
          }
          if (!hit) continue;
          std::vector<std::string> ws;
          instr_writes(in, ws);
          if (in.op == Op::Havoc) continue;  // a fresh nondet value is uninfluenced
          for (const std::string& w : ws)
            if (ga.impact.insert(qual(prog, fname, home, w)).second) changed = true;
        }
      }
    }
    for (auto it = ga.impact.begin(); it != ga.impact.end();) {
      if (it->size() > 6 && it->substr(it->size() - 6) == ".__ret")
        it = ga.impact.erase(it);
      else
        ++it;
    }
  }

  // Step 2: variant, the variables a re-iteration can change.
  for (int i = loop->header + 1; i <= loop->backedge; ++i) {
    const Instr& in = fn->body[size_t(i)];
    std::vector<std::string> ws;
    instr_writes(in, ws);
    for (const std::string& w : ws) ga.variant.insert(qual(prog, home, home, w));
    if (in.op == Op::Call) {
      NameSet callee_writes = transitive_global_writes(prog, in.callee);
      ga.variant.insert(callee_writes.begin(), callee_writes.end());
    }
  }

  // Step 3: liveness at the loop exit point.
  ga.live_after = live_variables(prog, {home, size_t(loop->backedge) + 1});

  if (!eventually_true) {
    ga.verdict = GuardVerdict::BoundRequired;
    return ga;
  }
  bool empty = true;
  for (const std::string& v : ga.variant)
    if (ga.impact.count(v) && ga.live_after.count(v)) empty = false;
  ga.verdict = empty ? GuardVerdict::Removable : GuardVerdict::NotRemovable;
  return ga;
}

void remove_guard(IrProgram& prog, const std::string& loop_id) {
  for (auto& [name, fn] : prog.functions) {
    for (size_t k = 0; k < fn.loops.size(); ++k) {
      if (fn.loops[k].id != loop_id) continue;
      const LoopInfo loop = fn.loops[k];
      fn.body[size_t(loop.header)].target = loop.header + 1;
      fn.body[size_t(loop.backedge)].target = loop.backedge + 1;
      fn.loops.erase(fn.loops.begin() + long(k));
      return;
    }
  }
  throw InternalError("remove_guard: unknown loop '" + loop_id + "'");
}

void add_retry_bound(IrProgram& prog, const std::string& loop_id, uint64_t bound) {
  for (auto& [name, fn] : prog.functions) {
    for (LoopInfo& loop : fn.loops) {
      if (loop.id != loop_id) continue;
      std::string ctr = "__retry_" + loop_id;
      Symbol sym;
      sym.name = ctr;
      sym.type = Ty::U32;
      fn.locals.emplace(ctr, sym);

      insert_fallthrough_after(fn, -1, {Instr::assign(ctr, eb::cnst(0, Ty::U32))});
      insert_before(fn, loop.backedge,
                    {Instr::assign(ctr, eb::add(eb::var(ctr, Ty::U32),
                                                eb::cnst(1, Ty::U32)))});
      Instr& hdr = fn.body[size_t(loop.header)];
      hdr.cond = fb::lor(hdr.cond, eb::ge(eb::var(ctr, Ty::U32),
                                          eb::cnst(bound, Ty::U32)));
      loop.static_trip = bound;
      return;
    }
  }
  throw InternalError("add_retry_bound: unknown loop '" + loop_id + "'");
}

}  // namespace irbmc::analysis
