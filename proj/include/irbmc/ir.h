#ifndef IRBMC_IR_H
#define IRBMC_IR_H

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irbmc/diagnostics.h"
#include "irbmc/expr.h"

namespace irbmc {

enum class VarKind : uint8_t { Plain, Shared, Persistent, MmioInput };

struct Symbol {
  std::string name;
  Ty type = Ty::U8;                    // element type for arrays
  std::optional<uint32_t> array_len;
  VarKind kind = VarKind::Plain;
  std::optional<uint32_t> address;     // MmioInput binding
  bool is_const = false;
  std::optional<uint64_t> init;        // scalar initializer (bit pattern)
  std::vector<uint64_t> array_init;    // element initializers, empty = zero
  int line = 0;
};

enum class Op : uint8_t {
  Assign, Havoc, Assume, Assert, Goto, IfGoto, Call, Return, MmioRead, MmioWrite,
};

enum class PropertyClass : uint8_t {
  User, Overflow, DivZero, Bounds, Unwinding, ModeExit, AssumeProbe,
};

const char* property_class_name(PropertyClass c);

// One flat instruction. Jump targets are instruction indices; an index equal
// to the body size means "function exit". Labels exist only in the printer.
struct Instr {
  Op op = Op::Assign;
  std::string lhs;            // Assign/Havoc/Call result/MmioRead destination
  ExprPtr lhs_index;          // Assign to array element
  ExprPtr rhs;                // Assign/Return/MmioWrite value
  ExprPtr cond;               // Assume/Assert/IfGoto (jump taken when true)
  ExprPtr address;            // MmioRead/MmioWrite
  int target = -1;            // Goto/IfGoto
  std::string callee;
  std::vector<ExprPtr> args;
  PropertyClass prop_class = PropertyClass::User;
  std::string prop_id;        // Assert: property id; Assume: assumption id
  int line = 0;               // source line, 0 for synthesized code
  std::string origin_fn;      // provenance through inlining/unwinding
  int origin_idx = -1;

  static Instr assign(std::string lhs, ExprPtr rhs, int line = 0);
  static Instr assign_elem(std::string lhs, ExprPtr index, ExprPtr rhs, int line = 0);
  static Instr havoc(std::string lhs, int line = 0);
  static Instr assume(ExprPtr cond, std::string id, int line = 0);
  static Instr assertion(ExprPtr cond, PropertyClass cls, std::string id, int line = 0);
  static Instr jump(int target);
  static Instr branch(ExprPtr cond, int target);
  static Instr call(std::string callee, std::vector<ExprPtr> args = {}, std::string lhs = {},
                    int line = 0);
  static Instr ret(ExprPtr value = nullptr, int line = 0);
  static Instr mmio_read(std::string lhs, ExprPtr address, int line = 0);
  static Instr mmio_write(ExprPtr address, ExprPtr value, int line = 0);
};

// Loop ids are program-wide unique and stable across instrumentation:
// "<function>.L<n>" in syntactic order. header is the index of the guard
// branch, backedge the index of the jump back to it. The loop body is the
// half-open region (header, backedge].
struct LoopInfo {
  std::string id;
  int header = -1;
  int backedge = -1;
  std::optional<uint64_t> static_trip;  // counted for-loops
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  std::optional<Ty> ret;
  std::map<std::string, Symbol> locals;  // includes params
  std::vector<Instr> body;
  std::vector<LoopInfo> loops;
  bool is_isr = false;
  std::string isr_name;
  uint64_t mint_cycles = 0;  // minimum inter-arrival time, ISRs only
  bool is_mode = false;
  std::string mode_name;
  int mode_order = -1;
  int line = 0;
  int end_line = 0;
};

struct IrProgram {
  std::map<std::string, Symbol> globals;
  std::map<std::string, Function> functions;
  std::vector<std::string> mode_functions;  // sorted by mode order
  std::vector<std::string> isr_functions;   // declaration order

  const Symbol* find_symbol(const Function& fn, const std::string& name) const;
  const Function* find_function(const std::string& name) const;
  // (function, loop) for a program-wide loop id, or nullptrs.
  std::pair<const Function*, const LoopInfo*> find_loop(const std::string& id) const;
};

// Inserts instrs before idx. Jumps that targeted idx now run the inserted
// code first ("executes whenever the original instruction executes").
void insert_before(Function& fn, int idx, std::vector<Instr> instrs);

// Inserts instrs between idx and its fallthrough successor. Jumps that
// targeted idx+1 still skip the inserted code.
void insert_fallthrough_after(Function& fn, int idx, std::vector<Instr> instrs);

// Structural well-formedness: dangling targets, unknown or ill-typed symbol
// references, call signature mismatches, recursion, annotation discipline.
// Shared/persistent usage violations come back as warnings.
Diagnostics validate(const IrProgram& prog);

std::string dump(const IrProgram& prog);
std::string dump(const Function& fn);

// Variables read (including subscripts) and written by one instruction.
// Call effects are not expanded here; callers consult summaries.
void instr_reads(const Instr& in, std::vector<std::string>& out);
void instr_writes(const Instr& in, std::vector<std::string>& out);

}  // namespace irbmc

#endif
