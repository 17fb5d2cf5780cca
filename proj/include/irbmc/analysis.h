#ifndef IRBMC_ANALYSIS_H
#define IRBMC_ANALYSIS_H

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "irbmc/diagnostics.h"
#include "irbmc/ir.h"

namespace irbmc::analysis {

// A position in a function body; index == body.size() addresses the point
// after the last instruction.
struct ProgramPoint {
  std::string function;
  size_t index = 0;
};

// Backward may-liveness at the given point, interprocedural via per-function
// summaries and call-site continuations. Variables referenced by any ISR are
// reported live at every point: a woven call can read or clobber them between
// any two instructions. Throws InternalError for an invalid point.
std::set<std::string> live_variables(const IrProgram& prog, const ProgramPoint& point);

using VarRanges = std::map<std::string, std::pair<int64_t, int64_t>>;
// Boundary key: (predecessor mode name, successor mode name).
using BoundaryKey = std::pair<std::string, std::string>;

// The handoff between two consecutive modes: global variables live across the
// boundary, plus user-supplied exclusive value bounds for some of them.
struct ModeInterface {
  std::string predecessor;
  std::string successor;
  std::set<std::string> live;
  VarRanges ranges;
};

// Materializes the strictly sequential composition of the modes: a driver
// function "__whole" whose body calls each mode entry in mode order. Returns
// the driver's name, or "main" unchanged for a program without modes. The
// "__" prefix is reserved by the frontend, so the name cannot collide.
std::string add_whole_driver(IrProgram& prog);

// One interface per consecutive mode pair, in mode order. The boundary point
// sits between the two mode invocations of the sequential composition. A
// range on a non-live variable draws a warning and is kept, with the variable
// added to the live set so the havoc/assume pair still materializes. Fewer
// than two modes yields an empty list.
std::vector<ModeInterface> mode_interfaces(const IrProgram& prog,
                                           const std::map<BoundaryKey, VarRanges>& ranges,
                                           Diagnostics& diags);

struct DeadCode {
  std::set<std::string> functions;
  std::set<std::string> globals;
};

// Functions unreachable in the call graph from entry and from the ISR entries
// (which fire implicitly), plus globals no reachable function references.
DeadCode dead_code(const IrProgram& prog, const std::string& entry);

struct MmioSite {
  std::string function;
  size_t index = 0;
  bool is_write = false;
  std::optional<uint64_t> address;  // nullopt = not statically resolvable
};

// Every MMIO instruction, with addresses resolved for literals, const
// symbols, and locals defined by a single constant assignment. Unresolvable
// addresses are flagged with a warning and listed with address unknown.
std::vector<MmioSite> mmio_sites(const IrProgram& prog, Diagnostics& diags);

enum class GuardVerdict { Removable, NotRemovable, BoundRequired };

const char* guard_verdict_name(GuardVerdict v);

struct GuardAnalysis {
  std::string loop_id;
  ExprPtr guard;                  // the condition governing re-entry
  std::set<std::string> impact;   // influenced by the guard (data + control deps)
  std::set<std::string> variant;  // possibly written on a path through the body
  std::set<std::string> live_after;
  GuardVerdict verdict = GuardVerdict::NotRemovable;
};

// The three-step removability test for a retry-loop guard. eventually_true
// reflects a per-loop config annotation and is never inferred; without it the
// verdict is bound-required (the loop needs an explicit retry bound instead).
// Locals of functions other than the loop's own are reported as "fn.var".
GuardAnalysis guard_removability(const IrProgram& prog, const std::string& loop_id,
                                 bool eventually_true);

// Neutralizes a removable guard: the header test and the backedge become
// fall-throughs, so the body runs exactly once, and the loop is dropped from
// the loop table. Only valid for verdict=removable under eventually-true.
void remove_guard(IrProgram& prog, const std::string& loop_id);

// Extends the guard with an upper retry bound: a fresh counter starts at 0,
// increments each iteration, and forces exit once it reaches bound. The loop
// then has a static trip count and unwinds like any bounded loop.
void add_retry_bound(IrProgram& prog, const std::string& loop_id, uint64_t bound);

}  // namespace irbmc::analysis

#endif
