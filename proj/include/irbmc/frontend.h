#ifndef IRBMC_FRONTEND_H
#define IRBMC_FRONTEND_H

#include <optional>
#include <string>

#include "irbmc/diagnostics.h"
#include "irbmc/ir.h"

namespace irbmc::minic {

struct LowerResult {
  std::optional<IrProgram> program;  // absent when diagnostics carry an error
  Diagnostics diagnostics;
};

// Parses and lowers a source unit to the flat IR in one pass:
//   - structured control flow becomes IFGOTO/GOTO over instruction indices
//   - nondet_<ty>() calls are hoisted into HAVOC of fresh temporaries
//   - reads of [0xNN] and of @input globals become MMIO_READ instructions
//     (they are only legal as the sole right-hand side of an assignment)
//   - while/for loops get program-wide-unique ids "<fn>.L<n>" in syntactic
//     order; counted for-loops record their static trip count
//   - user asserts/assumes get stable ids "user:<fn>#<idx>" / "assume:<fn>#<idx>"
//
// Recursion, unknown annotations and type errors are rejected here.
LowerResult lower(const std::string& source);

}  // namespace irbmc::minic

#endif
