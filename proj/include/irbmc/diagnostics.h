#ifndef IRBMC_DIAGNOSTICS_H
#define IRBMC_DIAGNOSTICS_H

#include <iosfwd>
#include <string>
#include <vector>

namespace irbmc {

enum class Severity : uint8_t { Error, Warning, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  int line = 0;  // 0 when not tied to a source location
  int col = 0;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

using Diagnostics = std::vector<Diagnostic>;

bool has_errors(const Diagnostics& ds);
std::string to_string(const Diagnostic& d);
void print_all(std::ostream& os, const Diagnostics& ds);

// Thrown on violated internal invariants (not user input errors).
struct InternalError : std::exception {
  explicit InternalError(std::string m) : msg(std::move(m)) {}
  const char* what() const noexcept override { return msg.c_str(); }
  std::string msg;
};

}  // namespace irbmc

#endif
