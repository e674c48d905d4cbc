#pragma once

#include <stdexcept>
#include <string>

namespace mcup {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input: inconsistent grids, unresolvable periods, malformed config.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A linear or eigen solve did not reach its tolerance.
class SolverError : public Error {
public:
  SolverError(const std::string& what, double residual = -1.0)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

}  // namespace mcup
