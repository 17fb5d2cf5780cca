#include "irbmc/expr.h"

#include <sstream>

namespace irbmc {

bool is_comparison(BinOp op) {
  switch (op) {
    case BinOp::Eq: case BinOp::Ne:
    case BinOp::Lt: case BinOp::Le:
    case BinOp::Gt: case BinOp::Ge:
      return true;
    default:
      return false;
  }
}

Ty binop_result_type(BinOp op, Ty t) {
  if (is_comparison(op) || op == BinOp::LogAnd || op == BinOp::LogOr) return Ty::Bool;
  return t;
}

namespace eb {

ExprPtr cnst(uint64_t bits, Ty t) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Const;
  e->type = t;
  e->value = wrap(bits, t);
  return e;
}

ExprPtr tru() { return cnst(1, Ty::Bool); }
ExprPtr fls() { return cnst(0, Ty::Bool); }

ExprPtr var(const std::string& name, Ty t) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Var;
  e->type = t;
  e->name = name;
  return e;
}

ExprPtr index(const std::string& array, Ty elem, ExprPtr subscript) {
  assert(subscript && is_integer(subscript->type));
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Index;
  e->type = elem;
  e->name = array;
  e->a = std::move(subscript);
  return e;
}

ExprPtr unary(UnOp op, ExprPtr a) {
  assert(a);
  assert(op == UnOp::LogNot ? a->type == Ty::Bool : is_integer(a->type));
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Unary;
  e->type = a->type;
  e->un = op;
  e->a = std::move(a);
  return e;
}

ExprPtr neg(ExprPtr a) { return unary(UnOp::Neg, std::move(a)); }
ExprPtr lnot(ExprPtr a) { return unary(UnOp::LogNot, std::move(a)); }
ExprPtr bnot(ExprPtr a) { return unary(UnOp::BitNot, std::move(a)); }

ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b) {
  assert(a && b);
  assert(a->type == b->type);
  if (op == BinOp::LogAnd || op == BinOp::LogOr) {
    assert(a->type == Ty::Bool);
  } else if (op == BinOp::Eq || op == BinOp::Ne) {
    // any matching type
  } else {
    assert(is_integer(a->type));
  }
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Binary;
  e->type = binop_result_type(op, a->type);
  e->bin = op;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr add(ExprPtr a, ExprPtr b) { return binary(BinOp::Add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(BinOp::Sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(BinOp::Mul, std::move(a), std::move(b)); }
ExprPtr div(ExprPtr a, ExprPtr b) { return binary(BinOp::Div, std::move(a), std::move(b)); }
ExprPtr rem(ExprPtr a, ExprPtr b) { return binary(BinOp::Rem, std::move(a), std::move(b)); }
ExprPtr land(ExprPtr a, ExprPtr b) { return binary(BinOp::LogAnd, std::move(a), std::move(b)); }
ExprPtr lor(ExprPtr a, ExprPtr b) { return binary(BinOp::LogOr, std::move(a), std::move(b)); }
ExprPtr eq(ExprPtr a, ExprPtr b) { return binary(BinOp::Eq, std::move(a), std::move(b)); }
ExprPtr ne(ExprPtr a, ExprPtr b) { return binary(BinOp::Ne, std::move(a), std::move(b)); }
ExprPtr lt(ExprPtr a, ExprPtr b) { return binary(BinOp::Lt, std::move(a), std::move(b)); }
ExprPtr le(ExprPtr a, ExprPtr b) { return binary(BinOp::Le, std::move(a), std::move(b)); }
ExprPtr gt(ExprPtr a, ExprPtr b) { return binary(BinOp::Gt, std::move(a), std::move(b)); }
ExprPtr ge(ExprPtr a, ExprPtr b) { return binary(BinOp::Ge, std::move(a), std::move(b)); }

ExprPtr select(ExprPtr cond, ExprPtr then_v, ExprPtr else_v) {
  assert(cond && cond->type == Ty::Bool);
  assert(then_v && else_v && then_v->type == else_v->type);
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Select;
  e->type = then_v->type;
  e->a = std::move(cond);
  e->b = std::move(then_v);
  e->c = std::move(else_v);
  return e;
}

ExprPtr cast(ExprPtr a, Ty to) {
  assert(a && is_integer(a->type) && is_integer(to));
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Cast;
  e->type = to;
  e->a = std::move(a);
  return e;
}

ExprPtr nondet(Ty t) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Nondet;
  e->type = t;
  return e;
}

}  // namespace eb

uint64_t eval_cast(uint64_t bits, Ty from, Ty to) {
  int64_t v = is_signed(from) ? as_signed(bits, from) : int64_t(wrap(bits, from));
  return wrap(uint64_t(v), to);
}

uint64_t eval_unop(UnOp op, Ty t, uint64_t a) {
  switch (op) {
    case UnOp::Neg: return wrap(~wrap(a, t) + 1, t);
    case UnOp::LogNot: return wrap(a, Ty::Bool) ? 0 : 1;
    case UnOp::BitNot: return wrap(~a, t);
  }
  return 0;
}

uint64_t eval_binop(BinOp op, Ty t, uint64_t a, uint64_t b) {
  a = wrap(a, t);
  b = wrap(b, t);
  const bool sg = is_signed(t);
  const int64_t sa = as_signed(a, t);
  const int64_t sb = as_signed(b, t);
  switch (op) {
    case BinOp::Add: return wrap(a + b, t);
    case BinOp::Sub: return wrap(a - b, t);
    case BinOp::Mul: return wrap(a * b, t);  // low bits agree for signed and unsigned
    case BinOp::Div: {
      if (b == 0) return 0;
      if (!sg) return wrap(a / b, t);
      if (sa == as_signed(min_value(t), t) && sb == -1) return min_value(t);
      return wrap(uint64_t(sa / sb), t);
    }
    case BinOp::Rem: {
      if (b == 0) return a;
      if (!sg) return wrap(a % b, t);
      if (sa == as_signed(min_value(t), t) && sb == -1) return 0;
      return wrap(uint64_t(sa % sb), t);
    }
    case BinOp::BitAnd: return a & b;
    case BinOp::BitOr: return a | b;
    case BinOp::BitXor: return a ^ b;
    case BinOp::Shl: {
      if (b >= uint64_t(width(t))) return 0;
      return wrap(a << b, t);
    }
    case BinOp::Shr: {
      if (b >= uint64_t(width(t))) return sg && sa < 0 ? wrap(~uint64_t{0}, t) : 0;
      if (!sg) return a >> b;
      return wrap(uint64_t(sa >> b), t);
    }
    case BinOp::LogAnd: return (a != 0 && b != 0) ? 1 : 0;
    case BinOp::LogOr: return (a != 0 || b != 0) ? 1 : 0;
    case BinOp::Eq: return a == b ? 1 : 0;
    case BinOp::Ne: return a != b ? 1 : 0;
    case BinOp::Lt: return (sg ? sa < sb : a < b) ? 1 : 0;
    case BinOp::Le: return (sg ? sa <= sb : a <= b) ? 1 : 0;
    case BinOp::Gt: return (sg ? sa > sb : a > b) ? 1 : 0;
    case BinOp::Ge: return (sg ? sa >= sb : a >= b) ? 1 : 0;
  }
  return 0;
}

bool is_const_true(const ExprPtr& e) {
  return e && e->kind == ExprKind::Const && e->type == Ty::Bool && e->value == 1;
}

bool is_const_false(const ExprPtr& e) {
  return e && e->kind == ExprKind::Const && e->type == Ty::Bool && e->value == 0;
}

namespace fb {

ExprPtr unary(UnOp op, ExprPtr a) {
  if (a->kind == ExprKind::Const) return eb::cnst(eval_unop(op, a->type, a->value), a->type);
  if (op == UnOp::LogNot && a->kind == ExprKind::Unary && a->un == UnOp::LogNot) return a->a;
  return eb::unary(op, std::move(a));
}

ExprPtr lnot(ExprPtr a) { return unary(UnOp::LogNot, std::move(a)); }

ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b) {
  if (a->kind == ExprKind::Const && b->kind == ExprKind::Const) {
    return eb::cnst(eval_binop(op, a->type, a->value, b->value),
                    binop_result_type(op, a->type));
  }
  switch (op) {
    case BinOp::LogAnd:
      if (is_const_true(a)) return b;
      if (is_const_true(b)) return a;
      if (is_const_false(a) || is_const_false(b)) return eb::fls();
      break;
    case BinOp::LogOr:
      if (is_const_false(a)) return b;
      if (is_const_false(b)) return a;
      if (is_const_true(a) || is_const_true(b)) return eb::tru();
      break;
    case BinOp::Eq:
      if (a.get() == b.get()) return eb::tru();  // identical pure subterm
      break;
    case BinOp::Ne:
      if (a.get() == b.get()) return eb::fls();
      break;
    case BinOp::Add:
      if (b->kind == ExprKind::Const && b->value == 0) return a;
      if (a->kind == ExprKind::Const && a->value == 0) return b;
      break;
    case BinOp::Sub:
      if (b->kind == ExprKind::Const && b->value == 0) return a;
      break;
    case BinOp::Mul:
      if (b->kind == ExprKind::Const && b->value == 1) return a;
      if (a->kind == ExprKind::Const && a->value == 1) return b;
      if ((a->kind == ExprKind::Const && a->value == 0) ||
          (b->kind == ExprKind::Const && b->value == 0))
        return eb::cnst(0, a->type);
      break;
    default:
      break;
  }
  return eb::binary(op, std::move(a), std::move(b));
}

ExprPtr land(ExprPtr a, ExprPtr b) { return binary(BinOp::LogAnd, std::move(a), std::move(b)); }
ExprPtr lor(ExprPtr a, ExprPtr b) { return binary(BinOp::LogOr, std::move(a), std::move(b)); }
ExprPtr eq(ExprPtr a, ExprPtr b) { return binary(BinOp::Eq, std::move(a), std::move(b)); }

ExprPtr select(ExprPtr cond, ExprPtr then_v, ExprPtr else_v) {
  if (is_const_true(cond)) return then_v;
  if (is_const_false(cond)) return else_v;
  if (then_v.get() == else_v.get()) return then_v;
  if (then_v->kind == ExprKind::Const && else_v->kind == ExprKind::Const &&
      then_v->type == Ty::Bool) {
    if (then_v->value == 1 && else_v->value == 0) return cond;
    if (then_v->value == 0 && else_v->value == 1) return lnot(cond);
  }
  return eb::select(std::move(cond), std::move(then_v), std::move(else_v));
}

ExprPtr cast(ExprPtr a, Ty to) {
  if (a->type == to) return a;
  if (a->kind == ExprKind::Const) return eb::cnst(eval_cast(a->value, a->type, to), to);
  return eb::cast(std::move(a), to);
}

}  // namespace fb

ExprPtr fold(const ExprPtr& e) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::Var:
    case ExprKind::Nondet:
      return e;
    case ExprKind::Index: {
      ExprPtr i = fold(e->a);
      if (i == e->a) return e;
      return eb::index(e->name, e->type, std::move(i));
    }
    case ExprKind::Unary: {
      ExprPtr a = fold(e->a);
      return fb::unary(e->un, std::move(a));
    }
    case ExprKind::Binary: {
      ExprPtr a = fold(e->a);
      ExprPtr b = fold(e->b);
      return fb::binary(e->bin, std::move(a), std::move(b));
    }
    case ExprKind::Select: {
      ExprPtr c = fold(e->a);
      ExprPtr t = fold(e->b);
      ExprPtr f = fold(e->c);
      return fb::select(std::move(c), std::move(t), std::move(f));
    }
    case ExprKind::Cast: {
      ExprPtr a = fold(e->a);
      return fb::cast(std::move(a), e->type);
    }
  }
  return e;
}

namespace {

const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Rem: return "%";
    case BinOp::BitAnd: return "&";
    case BinOp::BitOr: return "|";
    case BinOp::BitXor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    case BinOp::LogAnd: return "&&";
    case BinOp::LogOr: return "||";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

void print(std::ostream& os, const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Const:
      if (e->type == Ty::Bool) {
        os << (e->value ? "true" : "false");
      } else if (is_signed(e->type)) {
        os << as_signed(e->value, e->type);
      } else {
        os << e->value;
      }
      break;
    case ExprKind::Var:
      os << e->name;
      break;
    case ExprKind::Index:
      os << e->name << '[';
      print(os, e->a);
      os << ']';
      break;
    case ExprKind::Unary:
      os << (e->un == UnOp::Neg ? "-" : e->un == UnOp::LogNot ? "!" : "~");
      os << '(';
      print(os, e->a);
      os << ')';
      break;
    case ExprKind::Binary:
      os << '(';
      print(os, e->a);
      os << ' ' << binop_text(e->bin) << ' ';
      print(os, e->b);
      os << ')';
      break;
    case ExprKind::Select:
      os << "sel(";
      print(os, e->a);
      os << ", ";
      print(os, e->b);
      os << ", ";
      print(os, e->c);
      os << ')';
      break;
    case ExprKind::Cast:
      os << ty_name(e->type) << '(';
      print(os, e->a);
      os << ')';
      break;
    case ExprKind::Nondet:
      os << "nondet_" << ty_name(e->type) << "()";
      break;
  }
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  if (!e) return "<null>";
  std::ostringstream os;
  print(os, e);
  return os.str();
}

void collect_vars(const ExprPtr& e, std::vector<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Var || e->kind == ExprKind::Index) out.push_back(e->name);
  collect_vars(e->a, out);
  collect_vars(e->b, out);
  collect_vars(e->c, out);
}

}  // namespace irbmc
