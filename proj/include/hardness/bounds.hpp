#pragma once

// Closed-form lower bounds driven by Var(A). Every evaluator returns the raw value; a value
// <= 0 carries no information and is flagged vacuous instead of being clamped.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "hardness/errors.hpp"

namespace hardness {

enum class LossId { Hinge, HalfSquare, Square, ZeroOne };

/// sign with sign(0) = +1, so that 1{sign(h) != y} = 1/2 - y sign(h) / 2 exactly.
inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

struct LossSpec {
  LossId id = LossId::Hinge;
  std::string name;
  std::optional<double> ell0;   // l(0, y) when it does not depend on y
  std::optional<double> slope0; // l'(0, y) = -slope0 * y when of that form
  double csq_a = 0.0;           // correlation-query floor a - b tau
  double csq_b = 0.0;
  bool convex = false;
  bool lipschitz1 = false;

  static LossSpec hinge() { return {LossId::Hinge, "hinge", 1.0, 1.0, 1.0, 1.0, true, true}; }
  /// (y - yhat)^2 / 2; the variant that satisfies l'(0, y) = -y.
  static LossSpec half_square() {
    return {LossId::HalfSquare, "half_square", 0.5, 1.0, 0.5, 1.0, true, false};
  }
  /// (y - yhat)^2; slope 2 at zero, so only its correlation-query constants are used.
  static LossSpec square() { return {LossId::Square, "square", 1.0, 2.0, 1.0, 2.0, true, false}; }
  static LossSpec zero_one() {
    return {LossId::ZeroOne, "zero_one", std::nullopt, std::nullopt, 0.5, 0.5, false, false};
  }

  static LossSpec by_name(std::string_view name) {
    if (name == "hinge")
      return hinge();
    if (name == "half_square")
      return half_square();
    if (name == "square")
      return square();
    if (name == "zero_one")
      return zero_one();
    throw ParamError("unknown loss '" + std::string(name) + "'");
  }

  /// Convex with l(0, y) = l0 and l'(0, y) = -y.
  bool slope_contract() const { return convex && ell0.has_value() && slope0 == 1.0; }

  double value(double yhat, double y) const {
    switch (id) {
    case LossId::Hinge:
      return std::max(0.0, 1.0 - yhat * y);
    case LossId::HalfSquare:
      return 0.5 * (y - yhat) * (y - yhat);
    case LossId::Square:
      return (y - yhat) * (y - yhat);
    case LossId::ZeroOne:
      return sign_of(yhat) != y ? 1.0 : 0.0;
    }
    return 0.0;
  }

  /// d/dyhat l(yhat, y); for hinge the subgradient -y is used whenever yhat y <= 1.
  double derivative(double yhat, double y) const {
    switch (id) {
    case LossId::Hinge:
      return yhat * y <= 1.0 ? -y : 0.0;
    case LossId::HalfSquare:
      return yhat - y;
    case LossId::Square:
      return 2.0 * (yhat - y);
    case LossId::ZeroOne:
      return 0.0;
    }
    return 0.0;
  }
};

struct BoundValue {
  double value = 0.0;
  bool vacuous = false;
};

inline BoundValue bound_value(double v) { return {v, v <= 0.0}; }

namespace detail {

inline void require_slope_contract(const LossSpec& loss) {
  if (!loss.slope_contract())
    throw LossContractError("loss '" + loss.name +
                            "' is not convex with l(0,y) = l0 and l'(0,y) = -y");
}

inline void require_var(double var) {
  if (!(var >= 0.0 && var <= 1.0))
    throw ParamError("variance must lie in [0, 1]");
}

inline void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ParamError(std::string(name) + " must be finite and non-negative");
}

} // namespace detail

/// Linear predictors over an embedding into [-1,1]^N with ||w|| <= B: l0 - B sqrt(N) sqrt(var).
inline BoundValue linear_approx_bound(const LossSpec& loss, double B, double N, double var) {
  detail::require_slope_contract(loss);
  detail::require_nonneg(B, "B");
  detail::require_nonneg(N, "N");
  detail::require_var(var);
  return bound_value(*loss.ell0 - B * std::sqrt(N) * std::sqrt(var));
}

struct ShallowNetBound {
  BoundValue theorem_form; // constant 6
  BoundValue proof_form;   // constant 2^{4/3} 3^{2/3}
};

inline double shallow_net_proof_constant() { return std::cbrt(16.0) * std::cbrt(9.0); }

/// Depth-two networks with k units and weight norms <= R on the induced problem.
inline ShallowNetBound shallow_net_bound(const LossSpec& loss, double k, double R, double n,
                                         double var) {
  detail::require_slope_contract(loss);
  if (!loss.lipschitz1)
    throw LossContractError("loss '" + loss.name + "' is not 1-Lipschitz");
  detail::require_nonneg(k, "k");
  detail::require_nonneg(R, "R");
  detail::require_nonneg(n, "n");
  detail::require_var(var);
  const double scale = std::sqrt(k) * R * R * std::pow(n, 5.0 / 6.0) * std::cbrt(var);
  return {bound_value(*loss.ell0 - 6.0 * scale),
          bound_value(*loss.ell0 - shallow_net_proof_constant() * scale)};
}

/// Depth-two networks whose z-weights lie on the grid Delta Z.
inline BoundValue discrete_net_bound(const LossSpec& loss, double k, double R, double n,
                                     double var, double delta) {
  detail::require_slope_contract(loss);
  if (!(delta > 0.0))
    throw ParamError("Delta must be positive");
  detail::require_nonneg(k, "k");
  detail::require_nonneg(R, "R");
  detail::require_nonneg(n, "n");
  detail::require_var(var);
  return bound_value(*loss.ell0 - 3.0 * std::sqrt(2.0 * k) * std::pow(R, 2.5) *
                                      std::pow(n, 0.75) * std::sqrt(var / delta));
}

/// Correlation queries of tolerance tau needed before the loss can drop below a - b tau.
inline double csq_query_bound(double tau, double var) {
  if (!(tau > 0.0))
    throw ParamError("tau must be positive");
  if (!(var > 0.0 && var <= 1.0))
    throw ParamError("variance must lie in (0, 1]");
  return tau * tau / var - 1.0;
}

/// The loss floor a - b tau guaranteed by the adversarial oracle.
inline double csq_loss_floor(const LossSpec& loss, double tau) {
  return loss.csq_a - loss.csq_b * tau;
}

struct GdThresholds {
  double min_delta = 0.0;             // 4 sqrt(2 B^2 N var)
  std::optional<double> max_steps;    // Delta^2 / (32 B^2 N var), needs Delta
  double loss_floor = 0.0;            // 3/4 (1 - sqrt(8 var))
  std::optional<double> max_eta;      // 1 / (2 sigma B T), needs sigma and T
  std::optional<double> markov_floor; // 1 - 4 B^2 N var / Delta^2, needs Delta
};

inline GdThresholds gd_thresholds(double B, double N, double var,
                                  std::optional<double> delta = std::nullopt,
                                  std::optional<double> sigma = std::nullopt,
                                  std::optional<double> steps = std::nullopt) {
  if (!(B > 0.0) || !(N > 0.0))
    throw ParamError("B and N must be positive");
  if (!(var > 0.0 && var <= 1.0))
    throw ParamError("variance must lie in (0, 1]");
  GdThresholds t;
  const double energy = B * B * N * var;
  t.min_delta = 4.0 * std::sqrt(2.0 * energy);
  t.loss_floor = 0.75 * (1.0 - std::sqrt(8.0 * var));
  if (delta) {
    if (!(*delta > 0.0))
      throw ParamError("Delta must be positive");
    t.max_steps = (*delta) * (*delta) / (32.0 * energy);
    t.markov_floor = 1.0 - 4.0 * energy / ((*delta) * (*delta));
  }
  if (sigma && steps) {
    if (!(*sigma > 0.0) || !(*steps > 0.0))
      throw ParamError("sigma and T must be positive");
    t.max_eta = 1.0 / (2.0 * (*sigma) * B * (*steps));
  }
  return t;
}

/// Variance bound 17^{-2m} for the AND-OR-AND family at N = 17^6 n. It rests on an external
/// pattern-matrix norm bound and is reported as cited, never computed.
inline double cited_and_or_variance(int m) {
  if (m < 1)
    throw ParamError("m must be at least 1");
  return std::pow(17.0, -2.0 * m);
}

} // namespace hardness
