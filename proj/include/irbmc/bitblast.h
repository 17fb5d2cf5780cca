#ifndef IRBMC_BITBLAST_H
#define IRBMC_BITBLAST_H

#include <map>
#include <string>
#include <vector>

#include "irbmc/cnf.h"
#include "irbmc/expr.h"

namespace irbmc::sat {

// Tseitin bit-blaster. Arithmetic uses ripple-carry adders and a shift-add
// multiplier; division is encoded exactly over zero-extended double-width
// operands as q*d + r = n and r < d when d != 0, with q = 0, r = n otherwise,
// matching the concrete evaluator. Variables are created on first use and
// annotated with (name, bit index). Encoding is memoized per expression node.
class Encoder {
 public:
  explicit Encoder(CnfFormula& cnf) : cnf_(cnf) {}

  // Bits of e, least significant first.
  const std::vector<Lit>& bits(const ExprPtr& e);
  // Single literal for a bool expression.
  Lit bit(const ExprPtr& e);
  // Adds a unit clause requiring the bool expression to hold.
  void assert_true(const ExprPtr& e);

  const std::vector<Lit>& var_bits(const std::string& name, Ty t);
  bool has_var(const std::string& name) const { return vars_.count(name) != 0; }

  Lit lit_true();
  Lit lit_false() { return -lit_true(); }

  // Value of a declared variable under a model from solve().
  uint64_t value_of(const std::string& name, Ty t, const std::vector<bool>& model) const;

 private:
  std::vector<Lit> encode(const ExprPtr& e);

  Lit gate_and(Lit a, Lit b);
  Lit gate_or(Lit a, Lit b);
  Lit gate_xor(Lit a, Lit b);
  Lit gate_mux(Lit c, Lit t, Lit f);  // c ? t : f
  Lit gate_eq(Lit a, Lit b);

  std::vector<Lit> add_vec(const std::vector<Lit>& a, const std::vector<Lit>& b, Lit carry_in);
  std::vector<Lit> negate_vec(const std::vector<Lit>& a);
  std::vector<Lit> mul_vec(const std::vector<Lit>& a, const std::vector<Lit>& b);
  std::vector<Lit> mux_vec(Lit c, const std::vector<Lit>& t, const std::vector<Lit>& f);
  Lit vec_eq(const std::vector<Lit>& a, const std::vector<Lit>& b);
  Lit vec_ult(const std::vector<Lit>& a, const std::vector<Lit>& b);
  Lit vec_slt(const std::vector<Lit>& a, const std::vector<Lit>& b);
  Lit any_bit(const std::vector<Lit>& a);
  std::vector<Lit> shift_vec(const std::vector<Lit>& a, const std::vector<Lit>& amount,
                             BinOp op, bool arithmetic);
  void divide(const std::vector<Lit>& n, const std::vector<Lit>& d, bool is_signed,
              std::vector<Lit>& q, std::vector<Lit>& r);
  std::vector<Lit> const_vec(uint64_t bits, unsigned w);

  CnfFormula& cnf_;
  Lit true_lit_ = 0;
  // Keyed by node identity; holding the pointer keeps the node alive so a
  // recycled allocation can never alias a previous entry.
  std::map<ExprPtr, std::vector<Lit>> memo_;
  std::map<std::string, std::vector<Lit>> vars_;
};

}  // namespace irbmc::sat

#endif
