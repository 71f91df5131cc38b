#ifndef ERPF_ERRORS_HPP_
#define ERPF_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace erpf {

/// Violated parameter invariant or malformed input.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Cost or gradient left the finite range; carries the offending iterate index.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& msg, int iteration)
      : std::runtime_error(msg + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace erpf

#endif  // ERPF_ERRORS_HPP_
