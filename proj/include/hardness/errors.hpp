#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hardness {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

/// A formula referenced a coordinate the assignment does not bind.
class EvalError : public Error {
public:
  using Error::Error;
};

/// The requested object does not fit the dense-table caps (n <= 24, matrix entry caps).
class DomainTooLarge : public Error {
public:
  using Error::Error;
};

/// Parameters at the scale of the original hardness construction; never attempted.
class InfeasibleScale : public Error {
public:
  using Error::Error;
};

class BijectionError : public Error {
public:
  using Error::Error;
};

/// A probe or query violates the sup-norm bound ||phi||_inf <= 1.
class NormError : public Error {
public:
  using Error::Error;
};

class ParamError : public Error {
public:
  using Error::Error;
};

/// The loss lacks a property the operation relies on (convexity, l(0,y) = l0, l'(0,y) = -y).
class LossContractError : public Error {
public:
  using Error::Error;
};

/// A model or hypothesis violates a bound it was certified to satisfy.
class ContractError : public Error {
public:
  using Error::Error;
};

/// No survivor of the adversarial oracle has small correlation with the hypothesis.
class BudgetExceeded : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Power iteration hit its cap; carries the last iterate.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double estimate, std::vector<double> iterate)
      : Error(what), estimate_(estimate), iterate_(std::move(iterate)) {}

  double estimate() const noexcept { return estimate_; }
  const std::vector<double>& iterate() const noexcept { return iterate_; }

private:
  double estimate_;
  std::vector<double> iterate_;
};

} // namespace hardness
