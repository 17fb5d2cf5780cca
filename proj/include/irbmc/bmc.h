#ifndef IRBMC_BMC_H
#define IRBMC_BMC_H

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irbmc/expr.h"
#include "irbmc/ir.h"
#include "irbmc/solver.h"
#include "irbmc/trace.h"

namespace irbmc::bmc {

struct UnwindConfig {
  // Applied to loops without a static trip count or explicit override.
  uint64_t default_bound = 8;
  // Per-loop overrides, keyed by loop id; these beat static trip counts.
  std::map<std::string, uint64_t> loop_bounds;
  // Emit an ASSERT(loop exited) of class unwinding after the last replica.
  bool unwinding_assertions = true;

  uint64_t bound_for(const LoopInfo& loop) const;
};

// Flattens `entry` into one acyclic function: calls are inlined bottom-up
// (the call graph is a DAG, so expansion terminates) and every loop is
// replaced by `bound` copies of its iteration region followed by an optional
// unwinding assertion and an ASSUME that cuts deeper executions. Inlined
// locals get a "__i<n>_<callee>_" prefix; origin_fn/origin_idx point back at
// the pre-unwind instruction throughout. The result keeps the globals and
// contains exactly one function, named after the entry.
IrProgram unwind(const IrProgram& prog, const std::string& entry, const UnwindConfig& cfg);

// One proof obligation: `obligation` must hold whenever `path` is
// satisfiable. Both formulas range over nondet input symbols only.
struct Vcc {
  std::string property;
  PropertyClass prop_class = PropertyClass::User;
  ExprPtr path;
  ExprPtr obligation;
  int body_index = -1;  // position of the assertion in the unwound body
  int line = 0;
};

// A HAVOC in the unwound body together with the fresh symbol it introduced
// and the condition under which execution reaches it.
struct NondetSite {
  std::string symbol;
  std::string source_var;
  Ty type = Ty::U8;
  int body_index = -1;
  ExprPtr guard;
};

struct SsaProgram {
  std::vector<Vcc> vccs;                       // body order
  std::vector<NondetSite> nondets;             // body order
  std::map<std::string, ExprPtr> exit_values;  // "v" or "a[k]" at normal exit
  ExprPtr exit_guard;                          // some path reaches a RETURN
};

// Forward symbolic execution of a loop-free, call-free single-function
// program. Joins merge variable values with selects over branch guards;
// HAVOC binds a fresh input symbol "<var>!<n>". Array cells are tracked
// individually, with subscript semantics matching the concrete evaluator
// (reads past the end hit the last cell, writes past the end are dropped).
SsaProgram to_ssa(const IrProgram& prog, const std::string& entry);

enum class Verdict { Verified, Refuted, Unreachable, Unknown };
const char* verdict_name(Verdict v);

struct PropertyResult {
  Verdict verdict = Verdict::Verified;
  PropertyClass prop_class = PropertyClass::User;
  std::optional<Counterexample> cex;  // present iff Refuted
  std::string message;                // limit explanation for Unknown
  int line = 0;

  friend bool operator==(const PropertyResult&, const PropertyResult&) = default;
};

struct VerificationReport {
  std::map<std::string, PropertyResult> properties;
  uint64_t vcc_count = 0;
  uint64_t solver_vars = 0;
  uint64_t solver_clauses = 0;
  double solver_seconds = 0.0;
  bool complete = true;  // false when a resource limit left Unknown verdicts

  bool all_verified() const;
  bool any_refuted() const;

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

struct CheckOptions {
  // Distinguish never-reachable properties from genuinely verified ones by
  // solving each path constraint on its own.
  bool reachability = false;
  sat::SolveLimits per_property;    // each solver call
  double global_budget_seconds = 0; // shared across all calls, 0 = unlimited
};

// Unwinds, converts to SSA, and solves path AND NOT obligation per property.
// A model refutes the property and is turned into a trace that is replayed
// through the oracle interpreter against the pre-unwind program; divergence
// throws, since it means the encoding and the interpreter disagree. Verdicts
// do not depend on the order properties are solved in.
VerificationReport check(const IrProgram& prog, const std::string& entry,
                         const UnwindConfig& ucfg, const CheckOptions& opts = {});

}  // namespace irbmc::bmc

#endif
