#ifndef IRBMC_ORACLE_H
#define IRBMC_ORACLE_H

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irbmc/ir.h"
#include "irbmc/trace.h"

namespace irbmc::oracle {

// Exhaustive bounded interpreter. Deliberately naive: every nondet value and
// every interrupt interleaving is enumerated by depth-first search. Interrupt
// semantics are instruction-granular: before each instruction of non-ISR
// code, each ISR may fire atomically zero or one time, in declaration order.

struct Options {
  std::string entry = "main";
  // Instructions per execution, ISR bodies included.
  uint64_t step_bound = 4000;
  // A nondet choice may span at most this many bits. A HAVOC immediately
  // followed by an ASSUME that reads only the havocked variable narrows the
  // enumerated domain, and the cap applies to the narrowed size.
  unsigned width_cap = 4;
  // Global valve on completed executions; exceeding it sets `truncated`.
  uint64_t max_executions = 4'000'000;
  size_t final_state_cap = 1024;
  // Capture one witness trace per violated property (costs one trace copy
  // per fork; leave off for large enumerations).
  bool capture_witnesses = false;
};

struct Outcome {
  std::set<std::string> violated;
  std::map<std::string, Counterexample> witnesses;
  // Completed executions. Paths pruned by a failed ASSUME do not count.
  uint64_t executions = 0;
  // Step bound hit on some path, or the execution valve closed.
  bool truncated = false;
  // Rendered global valuations at normal termination, capped.
  std::set<std::string> final_states;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

Outcome enumerate_executions(const IrProgram& prog, const Options& opt = {});

// Deterministic run that feeds `nondets` to HAVOC and MMIO_READ in execution
// order and never fires ISRs on its own. Used to build counterexamples from
// solver models and as the replay engine.
struct SimResult {
  std::vector<TraceStep> steps;
  std::vector<std::string> violations;  // property ids, in violation order
  bool tape_exhausted = false;
  bool assume_failed = false;
  bool step_bound_hit = false;
  bool completed = false;
};

SimResult simulate(const IrProgram& prog, const std::string& entry,
                   const std::vector<uint64_t>& nondets,
                   uint64_t step_bound = 1u << 20,
                   const std::string& stop_at_property = {});

struct ReplayResult {
  bool reached = false;
  size_t diverged_at = 0;  // index of the first mismatching step when !reached
  std::string message;
};

// Re-executes a counterexample: nondet values come from the recorded tape,
// ISR firings from the recorded interleaving markers. Reached iff the trace
// matches step for step and the violated property's condition evaluates
// false at its recorded location.
ReplayResult replay(const IrProgram& prog, const Counterexample& cex);

}  // namespace irbmc::oracle

#endif
