#ifndef QSWARM_ERRORS_HPP_
#define QSWARM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace qswarm {

// Bad argument to an operation (alpha out of range, T <= 0, zoom < 1, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation undefined on its input (empty tile, zero-step run).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  // line == 0 means the error is semantic rather than tied to a line.
  ConfigError(const std::string& message, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          message
                                    : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace qswarm

#endif  // QSWARM_ERRORS_HPP_
