#ifndef IRBMC_SOLVER_H
#define IRBMC_SOLVER_H

#include <cstdint>
#include <string>
#include <vector>

#include "irbmc/cnf.h"

namespace irbmc::sat {

enum class SolveStatus { Sat, Unsat, Unknown };

struct SolveLimits {
  uint64_t max_conflicts = 0;  // 0 = unlimited
  double max_seconds = 0;      // 0 = unlimited
};

struct SolveResult {
  SolveStatus status = SolveStatus::Unknown;
  // 1-indexed by variable; index 0 unused. Total assignment on SAT, verified
  // against every clause before being returned.
  std::vector<bool> model;
  std::string limit_message;
  uint64_t decisions = 0;
  uint64_t conflicts = 0;
  uint64_t propagations = 0;
};

// Conflict-driven solver: two-watched literals, first-UIP learning, Luby
// restarts, activity-based branching. Deterministic for identical input.
SolveResult solve(const CnfFormula& cnf, const SolveLimits& limits = {});

}  // namespace irbmc::sat

#endif
