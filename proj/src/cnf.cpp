#include "irbmc/cnf.h"

#include <sstream>

namespace irbmc::sat {

std::string export_dimacs(const CnfFormula& cnf) {
  std::ostringstream os;
  for (const auto& [var, what] : cnf.annotations)
    os << "c " << var << ' ' << what.first << '[' << what.second << "]\n";
  os << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  for (const auto& c : cnf.clauses) {
    for (Lit l : c) os << l << ' ';
    os << "0\n";
  }
  return os.str();
}

}  // namespace irbmc::sat
