#ifndef IRBMC_EXPR_H
#define IRBMC_EXPR_H

#include <memory>
#include <string>
#include <vector>

#include "irbmc/types.h"

namespace irbmc {

enum class ExprKind : uint8_t { Const, Var, Index, Unary, Binary, Select, Cast, Nondet };

enum class UnOp : uint8_t { Neg, LogNot, BitNot };

enum class BinOp : uint8_t {
  Add, Sub, Mul, Div, Rem,
  BitAnd, BitOr, BitXor, Shl, Shr,
  LogAnd, LogOr,
  Eq, Ne, Lt, Le, Gt, Ge,
};

bool is_comparison(BinOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression node. Sharing is significant for formula size; passes
// must never mutate a node in place.
struct Expr {
  ExprKind kind;
  Ty type;
  uint64_t value = 0;    // Const: bit pattern, wrapped to type
  std::string name;      // Var: symbol; Index: array symbol
  UnOp un{};
  BinOp bin{};
  ExprPtr a, b, c;       // Unary/Cast: a; Binary: a,b; Index: a (subscript); Select: a,b,c = cond,then,else
};

// Node constructors. Arguments are type-checked with assertions; the frontend
// is responsible for producing only well-typed trees.
namespace eb {
ExprPtr cnst(uint64_t bits, Ty t);
ExprPtr tru();
ExprPtr fls();
ExprPtr var(const std::string& name, Ty t);
ExprPtr index(const std::string& array, Ty elem, ExprPtr subscript);
ExprPtr unary(UnOp op, ExprPtr a);
ExprPtr neg(ExprPtr a);
ExprPtr lnot(ExprPtr a);
ExprPtr bnot(ExprPtr a);
ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr rem(ExprPtr a, ExprPtr b);
ExprPtr land(ExprPtr a, ExprPtr b);
ExprPtr lor(ExprPtr a, ExprPtr b);
ExprPtr eq(ExprPtr a, ExprPtr b);
ExprPtr ne(ExprPtr a, ExprPtr b);
ExprPtr lt(ExprPtr a, ExprPtr b);
ExprPtr le(ExprPtr a, ExprPtr b);
ExprPtr gt(ExprPtr a, ExprPtr b);
ExprPtr ge(ExprPtr a, ExprPtr b);
ExprPtr select(ExprPtr cond, ExprPtr then_v, ExprPtr else_v);
ExprPtr cast(ExprPtr a, Ty to);
ExprPtr nondet(Ty t);
}  // namespace eb

// Concrete scalar semantics shared by constant folding, the reference
// interpreter and the encoder tests. All results are wrapped bit patterns.
//
//   division:  d == 0 yields q = 0, r = n; signed division truncates toward
//              zero and MIN/-1 wraps to MIN
//   shifts:    the amount is read as an unsigned bit pattern; amounts >= width
//              yield 0 (shl, unsigned shr) or the sign fill (signed shr)
uint64_t eval_binop(BinOp op, Ty operand_ty, uint64_t a, uint64_t b);
uint64_t eval_unop(UnOp op, Ty operand_ty, uint64_t a);
uint64_t eval_cast(uint64_t bits, Ty from, Ty to);

// Result type of a binary op over operands of type t.
Ty binop_result_type(BinOp op, Ty t);

// Structural constant folding plus cheap algebraic identities. Returns the
// node itself when nothing simplifies.
ExprPtr fold(const ExprPtr& e);

// Folding constructors used by the symbolic executor; equivalent to
// fold(eb::...) but avoid building nodes that fold away.
namespace fb {
ExprPtr unary(UnOp op, ExprPtr a);
ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b);
ExprPtr land(ExprPtr a, ExprPtr b);
ExprPtr lor(ExprPtr a, ExprPtr b);
ExprPtr lnot(ExprPtr a);
ExprPtr select(ExprPtr cond, ExprPtr then_v, ExprPtr else_v);
ExprPtr eq(ExprPtr a, ExprPtr b);
ExprPtr cast(ExprPtr a, Ty to);
}  // namespace fb

bool is_const_true(const ExprPtr& e);
bool is_const_false(const ExprPtr& e);

std::string to_string(const ExprPtr& e);

// Collects the names of variables (Var and Index bases) read by e.
void collect_vars(const ExprPtr& e, std::vector<std::string>& out);

}  // namespace irbmc

#endif
