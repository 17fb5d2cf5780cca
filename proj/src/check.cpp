#include <algorithm>
#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "irbmc/bitblast.h"
#include "irbmc/bmc.h"
#include "irbmc/oracle.h"

namespace irbmc::bmc {

namespace {

[[noreturn]] void bug(const std::string& msg) {
  throw std::logic_error("bmc: " + msg);
}

// Concrete value of an SSA formula under an assignment to the input symbols.
uint64_t eval_ssa(const ExprPtr& e, const std::map<std::string, uint64_t>& inputs) {
  switch (e->kind) {
    case ExprKind::Const:
      return e->value;
    case ExprKind::Var: {
      auto it = inputs.find(e->name);
      if (it == inputs.end()) bug("model is missing input '" + e->name + "'");
      return it->second;
    }
    case ExprKind::Unary:
      return eval_unop(e->un, e->a->type, eval_ssa(e->a, inputs));
    case ExprKind::Binary:
      return eval_binop(e->bin, e->a->type, eval_ssa(e->a, inputs), eval_ssa(e->b, inputs));
    case ExprKind::Select:
      return eval_ssa(e->a, inputs) ? eval_ssa(e->b, inputs) : eval_ssa(e->c, inputs);
    case ExprKind::Cast:
      return eval_cast(eval_ssa(e->a, inputs), e->a->type, e->type);
    case ExprKind::Index:
    case ExprKind::Nondet:
      break;
  }
  bug("non-SSA expression in a formula");
}

struct Budget {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double cap_seconds = 0;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  bool exhausted() const { return cap_seconds > 0 && elapsed() >= cap_seconds; }
  sat::SolveLimits clamp(sat::SolveLimits per) const {
    if (cap_seconds > 0) {
      double remaining = std::max(0.001, cap_seconds - elapsed());
      per.max_seconds = per.max_seconds > 0 ? std::min(per.max_seconds, remaining) : remaining;
    }
    return per;
  }
};

// Rebuilds the concrete execution chosen by the model: reads each nondet
// site's value, keeps the ones on the executed path, and replays the tape
// through the deterministic interpreter. Source-level properties replay
// against the pre-unwind program; unwinding assertions exist only after
// unrolling, so they replay against the unwound one. Either way the replay
// is the ground truth for the trace; if it misses the property, the encoding
// and the interpreter disagree and the run must stop.
Counterexample build_counterexample(const IrProgram& orig, const std::string& entry,
                                    const SsaProgram& ssa, const sat::Encoder& enc,
                                    const std::vector<bool>& model, const Vcc& target) {
  std::map<std::string, uint64_t> inputs;
  for (const NondetSite& site : ssa.nondets)
    inputs[site.symbol] =
        enc.has_var(site.symbol) ? enc.value_of(site.symbol, site.type, model) : 0;

  std::vector<uint64_t> tape;
  for (const NondetSite& site : ssa.nondets)
    if (eval_ssa(site.guard, inputs)) tape.push_back(inputs[site.symbol]);

  oracle::SimResult sim =
      oracle::simulate(orig, entry, tape, uint64_t{1} << 22, target.property);
  bool reached = false;
  for (const std::string& v : sim.violations) reached = reached || v == target.property;
  if (!reached)
    bug("trace for '" + target.property + "' diverged from the solver model; encoding bug");

  Counterexample cex;
  cex.property = target.property;
  cex.entry = entry;
  cex.steps = std::move(sim.steps);
  cex.nondets = std::move(tape);

  oracle::ReplayResult rr = oracle::replay(orig, cex);
  if (!rr.reached)
    bug("replay of the trace for '" + target.property + "' diverged: " + rr.message);
  return cex;
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "VERIFIED";
    case Verdict::Refuted: return "REFUTED";
    case Verdict::Unreachable: return "UNREACHABLE";
    case Verdict::Unknown: return "UNKNOWN";
  }
  return "?";
}

bool VerificationReport::all_verified() const {
  for (const auto& [id, r] : properties)
    if (r.verdict != Verdict::Verified) return false;
  return true;
}

bool VerificationReport::any_refuted() const {
  for (const auto& [id, r] : properties)
    if (r.verdict == Verdict::Refuted) return true;
  return false;
}

VerificationReport check(const IrProgram& prog, const std::string& entry,
                         const UnwindConfig& ucfg, const CheckOptions& opts) {
  IrProgram flat = unwind(prog, entry, ucfg);
  SsaProgram ssa = to_ssa(flat, entry);

  VerificationReport report;
  report.vcc_count = ssa.vccs.size();

  // One property may occur several times in the unwound body (replicas,
  // inlined instances). It is refuted if any occurrence is.
  std::map<std::string, std::vector<const Vcc*>> groups;
  for (const Vcc& v : ssa.vccs) groups[v.property].push_back(&v);

  Budget budget;
  budget.cap_seconds = opts.global_budget_seconds;

  auto run_solver = [&](sat::CnfFormula& cnf) -> sat::SolveResult {
    auto t0 = std::chrono::steady_clock::now();
    sat::SolveResult r = sat::solve(cnf, budget.clamp(opts.per_property));
    report.solver_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.solver_vars += uint64_t(cnf.num_vars);
    report.solver_clauses += cnf.clauses.size();
    return r;
  };

  for (const auto& [id, occurrences] : groups) {
    PropertyResult res;
    res.prop_class = occurrences.front()->prop_class;
    res.line = occurrences.front()->line;

    if (budget.exhausted()) {
      res.verdict = Verdict::Unknown;
      res.message = "global time budget exhausted before this property was solved";
      report.complete = false;
      report.properties.emplace(id, std::move(res));
      continue;
    }

    bool unknown = false;
    std::string unknown_message;
    for (const Vcc* v : occurrences) {
      sat::CnfFormula cnf;
      sat::Encoder enc(cnf);
      enc.assert_true(v->path);
      enc.assert_true(fb::lnot(v->obligation));
      sat::SolveResult r = run_solver(cnf);
      if (r.status == sat::SolveStatus::Sat) {
        res.verdict = Verdict::Refuted;
        const IrProgram& replay_target =
            v->prop_class == PropertyClass::Unwinding ? flat : prog;
        res.cex = build_counterexample(replay_target, entry, ssa, enc, r.model, *v);
        break;
      }
      if (r.status == sat::SolveStatus::Unknown) {
        unknown = true;
        unknown_message = r.limit_message;
      }
    }

    if (res.verdict != Verdict::Refuted && unknown) {
      res.verdict = Verdict::Unknown;
      res.message =
          unknown_message.empty() ? "solver resource limit reached" : unknown_message;
      report.complete = false;
    } else if (res.verdict != Verdict::Refuted && opts.reachability) {
      // A property nobody can reach is vacuous, not verified; solve each
      // occurrence's path constraint on its own to tell the two apart.
      bool reachable = false;
      for (const Vcc* v : occurrences) {
        sat::CnfFormula cnf;
        sat::Encoder enc(cnf);
        enc.assert_true(v->path);
        sat::SolveResult r = run_solver(cnf);
        // An inconclusive probe counts as reachable; UNREACHABLE is only
        // reported when every path is proved infeasible.
        if (r.status != sat::SolveStatus::Unsat) {
          reachable = true;
          break;
        }
      }
      if (!reachable) res.verdict = Verdict::Unreachable;
    }
    report.properties.emplace(id, std::move(res));
  }

  // Assertions in code no feasible path reaches produce no VCC at all; they
  // still belong in the report, under the same vacuity rule.
  for (const Instr& in : flat.functions.at(entry).body) {
    if (in.op != Op::Assert || report.properties.count(in.prop_id)) continue;
    PropertyResult res;
    res.prop_class = in.prop_class;
    res.line = in.line;
    res.verdict = opts.reachability ? Verdict::Unreachable : Verdict::Verified;
    if (res.verdict == Verdict::Unreachable)
      res.message = "no path reaches this assertion";
    report.properties.emplace(in.prop_id, std::move(res));
  }

  return report;
}

}  // namespace irbmc::bmc
