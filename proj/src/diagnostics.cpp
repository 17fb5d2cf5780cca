#include "irbmc/diagnostics.h"

#include <ostream>
#include <sstream>

namespace irbmc {

bool has_errors(const Diagnostics& ds) {
  for (const auto& d : ds) {
    if (d.severity == Severity::Error) return true;
  }
  return false;
}

std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  switch (d.severity) {
    case Severity::Error: os << "error"; break;
    case Severity::Warning: os << "warning"; break;
    case Severity::Note: os << "note"; break;
  }
  if (d.line > 0) {
    os << " (line " << d.line;
    if (d.col > 0) os << ':' << d.col;
    os << ')';
  }
  os << ": " << d.message;
  return os.str();
}

void print_all(std::ostream& os, const Diagnostics& ds) {
  for (const auto& d : ds) os << to_string(d) << '\n';
}

}  // namespace irbmc
