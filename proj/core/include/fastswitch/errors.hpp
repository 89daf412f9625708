#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fastswitch {

/// Raised when a simulation produces a non-finite value or exceeds its event
/// budget. Carries the point of failure.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double x, std::size_t regime,
                 double t)
      : std::runtime_error(what), x_(x), regime_(regime), t_(t) {}

  double x() const { return x_; }
  std::size_t regime() const { return regime_; }
  double time() const { return t_; }

 private:
  double x_;
  std::size_t regime_;
  double t_;
};

}  // namespace fastswitch
