#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace otfair {

// Two failure classes surface to callers: bad inputs (exit code 2 from the
// CLI) and numerical failures inside a solver or trainer (exit code 3).
// Both carry the name of the module that raised them.

class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Compact %g-style rendering for error messages.
inline std::string num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace otfair
