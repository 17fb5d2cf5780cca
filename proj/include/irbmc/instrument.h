#ifndef IRBMC_INSTRUMENT_H
#define IRBMC_INSTRUMENT_H

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "irbmc/analysis.h"
#include "irbmc/diagnostics.h"
#include "irbmc/ir.h"

namespace irbmc::instrument {

// Inserts one ASSERT per arithmetic, division and array-access site, right
// before the instruction that contains the site. Overflow checks recompute
// the operation in the widened type, so the check itself cannot wrap.
// Property ids are "<class>:<function>#<instruction>" with a ".<n>" suffix
// when one instruction holds several sites of the same class; indices refer
// to the body before insertion. User assertions are left untouched.
// Returns the number of properties added.
std::size_t instrument_safety(IrProgram& prog);

struct WeaveReport {
  // Instructions of non-ISR code that read a shared variable and received an
  // insertion, at their post-weave indices.
  std::vector<analysis::ProgramPoint> observation_points;
  // Persistent variables havocked at every observation point: the union of
  // the persistent state of all interrupt handlers.
  std::set<std::string> havocked_persistent;
  // Guarded calls inserted per handler.
  std::map<std::string, std::size_t> calls_per_isr;
};

// Models interrupt interleaving: before every instruction of non-ISR code
// that reads a shared variable, havocs the handlers' persistent state and
// inserts one nondeterministically guarded call per handler that writes one
// of the variables read. A program without shared variables or without
// handlers is returned unchanged. A handler that writes no shared and no
// persistent variable draws a warning: it has no modeled effect.
WeaveReport weave_isrs(IrProgram& prog, Diagnostics& diags);

struct MmioConfig {
  // Device address -> inclusive value bounds for the read result.
  std::map<uint64_t, std::pair<int64_t, int64_t>> domains;
  // Sites ("<function>#<instruction>") the user vouched for despite an
  // address that does not resolve statically.
  std::set<std::string> confirmed_unknown;
};

// Replaces every MMIO read with HAVOC of the destination plus, when the
// address has a configured domain, an ASSUME bounding the value. Refuses to
// transform (returns false, program untouched) when a site with an
// unresolved address has not been confirmed; the error names the site.
bool havoc_inputs(IrProgram& prog, const MmioConfig& cfg, Diagnostics& diags);

struct ModeSlice {
  IrProgram program;
  // Synthesized driver: havocs the live-at-entry set, assumes the entry
  // ranges, calls the mode, asserts the exit ranges. Empty on failure.
  std::string entry;
};

// Builds the verification program for one mode: every other mode is removed,
// dead code is swept, and the boundary contracts become driver code. Entry
// and exit ranges are strict bounds. `target` names the mode function or the
// mode itself.
ModeSlice partition_modes(const IrProgram& prog,
                          const std::vector<analysis::ModeInterface>& interfaces,
                          const std::string& target, Diagnostics& diags);

// Plants an ASSERT(false) probe on the fall-through edge of every ASSUME.
// A probe that can be refuted proves the assumption satisfiable; a probe
// that verifies means no execution survives the assumption. Probe ids are
// "probe:" + the assumption's id. Returns the number of probes added.
std::size_t probe_assumptions(IrProgram& prog);

}  // namespace irbmc::instrument

#endif
