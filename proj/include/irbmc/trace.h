#ifndef IRBMC_TRACE_H
#define IRBMC_TRACE_H

#include <cstdint>
#include <string>
#include <vector>

namespace irbmc {

// One executed instruction in a counterexample. `var` is empty for pure
// control steps; element writes render as "name[i]". Steps with `isr_fire`
// set are interleaving markers (an ISR fired before the next instruction)
// and carry no variable.
struct TraceStep {
  std::string fn;
  int idx = 0;
  std::string var;
  uint64_t value = 0;
  int line = 0;
  bool isr_fire = false;
};

inline bool operator==(const TraceStep& a, const TraceStep& b) {
  return a.fn == b.fn && a.idx == b.idx && a.var == b.var && a.value == b.value &&
         a.isr_fire == b.isr_fire;
}

// Trace for one refuted property: the executed prefix ending at the failing
// assertion, plus every nondeterministic value in consumption order. Replaying
// the steps must reach `property` with its condition false.
struct Counterexample {
  std::string property;
  std::string entry = "main";
  std::vector<TraceStep> steps;
  std::vector<uint64_t> nondets;
};

inline bool operator==(const Counterexample& a, const Counterexample& b) {
  return a.property == b.property && a.entry == b.entry && a.steps == b.steps &&
         a.nondets == b.nondets;
}

}  // namespace irbmc

#endif
