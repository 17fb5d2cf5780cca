#ifndef IRBMC_CNF_H
#define IRBMC_CNF_H

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace irbmc::sat {

// DIMACS-style literal: +v / -v for variable v >= 1.
using Lit = int32_t;

inline int32_t var_of(Lit l) { return l < 0 ? -l : l; }

struct CnfFormula {
  int32_t num_vars = 0;
  std::vector<std::vector<Lit>> clauses;
  // solver variable -> (program-level name, bit index)
  std::map<int32_t, std::pair<std::string, unsigned>> annotations;

  int32_t new_var() { return ++num_vars; }

  void add_clause(std::vector<Lit> c) { clauses.push_back(std::move(c)); }

  void annotate(int32_t var, const std::string& name, unsigned bit) {
    annotations.emplace(var, std::make_pair(name, bit));
  }
};

// Header, one 0-terminated clause per line; annotations as leading comments.
std::string export_dimacs(const CnfFormula& cnf);

}  // namespace irbmc::sat

#endif
