#include "irbmc/bitblast.h"

#include <cassert>

#include "irbmc/diagnostics.h"

namespace irbmc::sat {

namespace {

unsigned log2_floor(unsigned w) {
  unsigned k = 0;
  while ((1u << (k + 1)) <= w) ++k;
  return k;
}

}  // namespace

Lit Encoder::lit_true() {
  if (!true_lit_) {
    true_lit_ = cnf_.new_var();
    cnf_.add_clause({true_lit_});
  }
  return true_lit_;
}

const std::vector<Lit>& Encoder::var_bits(const std::string& name, Ty t) {
  auto it = vars_.find(name);
  if (it != vars_.end()) return it->second;
  std::vector<Lit> bits(width(t));
  for (unsigned i = 0; i < bits.size(); ++i) {
    bits[i] = cnf_.new_var();
    cnf_.annotate(bits[i], name, i);
  }
  return vars_.emplace(name, std::move(bits)).first->second;
}

uint64_t Encoder::value_of(const std::string& name, Ty t, const std::vector<bool>& model) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) return 0;
  uint64_t v = 0;
  for (unsigned i = 0; i < it->second.size() && i < 64; ++i) {
    Lit l = it->second[i];
    bool b = l > 0 ? model[size_t(l)] : !model[size_t(-l)];
    if (b) v |= uint64_t{1} << i;
  }
  return wrap(v, t);
}

Lit Encoder::gate_and(Lit a, Lit b) {
  Lit T = lit_true();
  if (a == -T || b == -T || a == -b) return -T;
  if (a == T) return b;
  if (b == T) return a;
  if (a == b) return a;
  Lit o = cnf_.new_var();
  cnf_.add_clause({-a, -b, o});
  cnf_.add_clause({a, -o});
  cnf_.add_clause({b, -o});
  return o;
}

Lit Encoder::gate_or(Lit a, Lit b) { return -gate_and(-a, -b); }

Lit Encoder::gate_xor(Lit a, Lit b) {
  Lit T = lit_true();
  if (a == T) return -b;
  if (a == -T) return b;
  if (b == T) return -a;
  if (b == -T) return a;
  if (a == b) return -T;
  if (a == -b) return T;
  Lit o = cnf_.new_var();
  cnf_.add_clause({-a, -b, -o});
  cnf_.add_clause({a, b, -o});
  cnf_.add_clause({a, -b, o});
  cnf_.add_clause({-a, b, o});
  return o;
}

Lit Encoder::gate_eq(Lit a, Lit b) { return -gate_xor(a, b); }

Lit Encoder::gate_mux(Lit c, Lit t, Lit f) {
  Lit T = lit_true();
  if (c == T) return t;
  if (c == -T) return f;
  if (t == f) return t;
  if (t == T && f == -T) return c;
  if (t == -T && f == T) return -c;
  Lit o = cnf_.new_var();
  cnf_.add_clause({-c, -t, o});
  cnf_.add_clause({-c, t, -o});
  cnf_.add_clause({c, -f, o});
  cnf_.add_clause({c, f, -o});
  return o;
}

std::vector<Lit> Encoder::const_vec(uint64_t bits, unsigned w) {
  Lit T = lit_true();
  std::vector<Lit> out(w);
  for (unsigned i = 0; i < w; ++i) out[i] = (bits >> i) & 1 ? T : -T;
  return out;
}

std::vector<Lit> Encoder::add_vec(const std::vector<Lit>& a, const std::vector<Lit>& b,
                                  Lit carry_in) {
  assert(a.size() == b.size());
  std::vector<Lit> out(a.size());
  Lit carry = carry_in;
  for (size_t i = 0; i < a.size(); ++i) {
    Lit x = gate_xor(a[i], b[i]);
    out[i] = gate_xor(x, carry);
    carry = gate_or(gate_and(a[i], b[i]), gate_and(carry, x));
  }
  return out;
}

std::vector<Lit> Encoder::negate_vec(const std::vector<Lit>& a) {
  std::vector<Lit> inv(a.size());
  for (size_t i = 0; i < a.size(); ++i) inv[i] = -a[i];
  return add_vec(inv, const_vec(0, unsigned(a.size())), lit_true());
}

std::vector<Lit> Encoder::mul_vec(const std::vector<Lit>& a, const std::vector<Lit>& b) {
  unsigned w = unsigned(a.size());
  std::vector<Lit> acc = const_vec(0, w);
  for (unsigned i = 0; i < w; ++i) {
    std::vector<Lit> part(w);
    for (unsigned j = 0; j < w; ++j)
      part[j] = j < i ? lit_false() : gate_and(b[i], a[j - i]);
    acc = add_vec(acc, part, lit_false());
  }
  return acc;
}

std::vector<Lit> Encoder::mux_vec(Lit c, const std::vector<Lit>& t, const std::vector<Lit>& f) {
  assert(t.size() == f.size());
  std::vector<Lit> out(t.size());
  for (size_t i = 0; i < t.size(); ++i) out[i] = gate_mux(c, t[i], f[i]);
  return out;
}

Lit Encoder::vec_eq(const std::vector<Lit>& a, const std::vector<Lit>& b) {
  assert(a.size() == b.size());
  Lit acc = lit_true();
  for (size_t i = 0; i < a.size(); ++i) acc = gate_and(acc, gate_eq(a[i], b[i]));
  return acc;
}

Lit Encoder::vec_ult(const std::vector<Lit>& a, const std::vector<Lit>& b) {
  assert(a.size() == b.size());
  Lit lt = lit_false();
  for (size_t i = 0; i < a.size(); ++i)  // LSB first; the MSB decides last
    lt = gate_mux(gate_xor(a[i], b[i]), b[i], lt);
  return lt;
}

Lit Encoder::vec_slt(const std::vector<Lit>& a, const std::vector<Lit>& b) {
  std::vector<Lit> av = a;
  std::vector<Lit> bv = b;
  av.back() = -av.back();
  bv.back() = -bv.back();
  return vec_ult(av, bv);
}

Lit Encoder::any_bit(const std::vector<Lit>& a) {
  Lit acc = lit_false();
  for (Lit l : a) acc = gate_or(acc, l);
  return acc;
}

std::vector<Lit> Encoder::shift_vec(const std::vector<Lit>& a, const std::vector<Lit>& amount,
                                    BinOp op, bool arithmetic) {
  unsigned w = unsigned(a.size());
  bool left = op == BinOp::Shl;
  Lit fill = arithmetic ? a.back() : lit_false();
  unsigned stages = log2_floor(w);  // widths are powers of two
  std::vector<Lit> res = a;
  for (unsigned k = 0; k < stages && k < amount.size(); ++k) {
    unsigned by = 1u << k;
    std::vector<Lit> shifted(w);
    for (unsigned i = 0; i < w; ++i) {
      if (left)
        shifted[i] = i >= by ? res[i - by] : lit_false();
      else
        shifted[i] = i + by < w ? res[i + by] : fill;
    }
    res = mux_vec(amount[k], shifted, res);
  }
  // amount >= width saturates to the fill
  std::vector<Lit> high(amount.begin() + std::min<size_t>(stages, amount.size()), amount.end());
  Lit oversize = any_bit(high);
  std::vector<Lit> sat(w, left ? lit_false() : fill);
  return mux_vec(oversize, sat, res);
}

void Encoder::divide(const std::vector<Lit>& n, const std::vector<Lit>& d, bool is_signed,
                     std::vector<Lit>& q, std::vector<Lit>& r) {
  unsigned w = unsigned(n.size());
  Lit dnz = any_bit(d);

  std::vector<Lit> nu = n;
  std::vector<Lit> du = d;
  Lit sn = lit_false();
  Lit sd = lit_false();
  if (is_signed) {
    sn = n.back();
    sd = d.back();
    nu = mux_vec(sn, negate_vec(n), n);
    du = mux_vec(sd, negate_vec(d), d);
  }

  // Free quotient/remainder, pinned by q*d + r = n and r < d whenever d != 0.
  // The equation is stated over zero-extended double width so the product
  // cannot wrap into a spurious solution.
  std::vector<Lit> qm(w);
  std::vector<Lit> rm(w);
  for (unsigned i = 0; i < w; ++i) {
    qm[i] = cnf_.new_var();
    rm[i] = cnf_.new_var();
  }
  auto zext = [&](const std::vector<Lit>& v) {
    std::vector<Lit> out = v;
    out.resize(2 * w, lit_false());
    return out;
  };
  std::vector<Lit> prod = mul_vec(zext(qm), zext(du));
  std::vector<Lit> sum = add_vec(prod, zext(rm), lit_false());
  cnf_.add_clause({-dnz, vec_eq(sum, zext(nu))});
  cnf_.add_clause({-dnz, vec_ult(rm, du)});

  std::vector<Lit> qs = qm;
  std::vector<Lit> rs = rm;
  if (is_signed) {
    qs = mux_vec(gate_xor(sn, sd), negate_vec(qm), qm);
    rs = mux_vec(sn, negate_vec(rm), rm);
  }
  q = mux_vec(dnz, qs, const_vec(0, w));
  r = mux_vec(dnz, rs, n);
}

const std::vector<Lit>& Encoder::bits(const ExprPtr& e) {
  auto it = memo_.find(e);
  if (it != memo_.end()) return it->second;
  std::vector<Lit> out = encode(e);
  return memo_.emplace(e, std::move(out)).first->second;
}

Lit Encoder::bit(const ExprPtr& e) {
  const std::vector<Lit>& b = bits(e);
  if (b.size() != 1) throw InternalError("encoder: expected a bool expression");
  return b[0];
}

void Encoder::assert_true(const ExprPtr& e) { cnf_.add_clause({bit(e)}); }

std::vector<Lit> Encoder::encode(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Const:
      return const_vec(e->value, width(e->type));
    case ExprKind::Var:
      return var_bits(e->name, e->type);
    case ExprKind::Index:
      throw InternalError("encoder: array index must be lowered before encoding");
    case ExprKind::Nondet:
      throw InternalError("encoder: nondet must be lowered before encoding");
    case ExprKind::Unary: {
      const std::vector<Lit>& a = bits(e->a);
      switch (e->un) {
        case UnOp::Neg:
          return negate_vec(a);
        case UnOp::LogNot:
          return {-a[0]};
        case UnOp::BitNot: {
          std::vector<Lit> out(a.size());
          for (size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
          return out;
        }
      }
      break;
    }
    case ExprKind::Select:
      return mux_vec(bit(e->a), bits(e->b), bits(e->c));
    case ExprKind::Cast: {
      const std::vector<Lit>& a = bits(e->a);
      unsigned to_w = width(e->type);
      std::vector<Lit> out(a.begin(), a.begin() + std::min<size_t>(a.size(), to_w));
      Lit pad = is_signed(e->a->type) ? a.back() : lit_false();
      out.resize(to_w, pad);
      return out;
    }
    case ExprKind::Binary: {
      bool sgn = is_signed(e->a->type);
      switch (e->bin) {
        case BinOp::Add:
          return add_vec(bits(e->a), bits(e->b), lit_false());
        case BinOp::Sub: {
          std::vector<Lit> nb(bits(e->b));
          for (auto& l : nb) l = -l;
          return add_vec(bits(e->a), nb, lit_true());
        }
        case BinOp::Mul:
          return mul_vec(bits(e->a), bits(e->b));
        case BinOp::Div: {
          std::vector<Lit> q, r;
          divide(bits(e->a), bits(e->b), sgn, q, r);
          return q;
        }
        case BinOp::Rem: {
          std::vector<Lit> q, r;
          divide(bits(e->a), bits(e->b), sgn, q, r);
          return r;
        }
        case BinOp::BitAnd:
        case BinOp::BitOr:
        case BinOp::BitXor: {
          const std::vector<Lit>& a = bits(e->a);
          const std::vector<Lit>& b = bits(e->b);
          std::vector<Lit> out(a.size());
          for (size_t i = 0; i < a.size(); ++i)
            out[i] = e->bin == BinOp::BitAnd   ? gate_and(a[i], b[i])
                     : e->bin == BinOp::BitOr ? gate_or(a[i], b[i])
                                              : gate_xor(a[i], b[i]);
          return out;
        }
        case BinOp::Shl:
          return shift_vec(bits(e->a), bits(e->b), BinOp::Shl, false);
        case BinOp::Shr:
          return shift_vec(bits(e->a), bits(e->b), BinOp::Shr, sgn);
        case BinOp::LogAnd:
          return {gate_and(bit(e->a), bit(e->b))};
        case BinOp::LogOr:
          return {gate_or(bit(e->a), bit(e->b))};
        case BinOp::Eq:
          return {vec_eq(bits(e->a), bits(e->b))};
        case BinOp::Ne:
          return {-vec_eq(bits(e->a), bits(e->b))};
        case BinOp::Lt:
          return {sgn ? vec_slt(bits(e->a), bits(e->b)) : vec_ult(bits(e->a), bits(e->b))};
        case BinOp::Gt:
          return {sgn ? vec_slt(bits(e->b), bits(e->a)) : vec_ult(bits(e->b), bits(e->a))};
        case BinOp::Le:
          return {sgn ? -vec_slt(bits(e->b), bits(e->a)) : -vec_ult(bits(e->b), bits(e->a))};
        case BinOp::Ge:
          return {sgn ? -vec_slt(bits(e->a), bits(e->b)) : -vec_ult(bits(e->a), bits(e->b))};
      }
      break;
    }
  }
  throw InternalError("encoder: unsupported expression");
}

}  // namespace irbmc::sat
