#pragma once

// Linear predictors x -> <Psi(x), w> with ||w||_2 <= B, trained by projected subgradient
// descent on the exact population loss of a single family member.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hardness/bounds.hpp"
#include "hardness/family.hpp"
#include "hardness/linalg.hpp"
#include "hardness/parallel.hpp"

namespace hardness {

/// Support-indexed feature map Psi : X -> [-1,1]^N; row j is Psi(support[j]).
class Embedding {
public:
  explicit Embedding(DenseMatrix features) : features_(std::move(features)) {
    if (features_.cols() < 1 || features_.rows() < 1)
      throw ParamError("embedding needs at least one row and one feature");
    for (std::size_t r = 0; r < features_.rows(); ++r)
      for (double v : features_.row(r))
        if (!(std::abs(v) <= 1.0))
          throw NormError("embedding entries must lie in [-1, 1]");
  }

  static Embedding random_sign(std::size_t rows, std::size_t features, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    DenseMatrix m(rows, features);
    for (std::size_t r = 0; r < rows; ++r)
      for (double& v : m.row(r))
        v = coin(rng) ? 1.0 : -1.0;
    return Embedding(std::move(m));
  }

  static Embedding random_uniform(std::size_t rows, std::size_t features, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix m(rows, features);
    for (std::size_t r = 0; r < rows; ++r)
      for (double& v : m.row(r))
        v = u(rng);
    return Embedding(std::move(m));
  }

  /// Psi(x) = (x_1, ..., x_n), optionally followed by a constant +1 feature.
  static Embedding coordinate(std::span<const Point> support, bool with_bias = false) {
    const int n = support.front().n;
    DenseMatrix m(support.size(), static_cast<std::size_t>(n) + (with_bias ? 1 : 0));
    for (std::size_t r = 0; r < support.size(); ++r) {
      for (int i = 0; i < n; ++i)
        m(r, static_cast<std::size_t>(i)) = support[r][i];
      if (with_bias)
        m(r, static_cast<std::size_t>(n)) = 1.0;
    }
    return Embedding(std::move(m));
  }

  std::size_t rows() const { return features_.rows(); }
  std::size_t dimension() const { return features_.cols(); }
  std::span<const double> operator[](std::size_t row) const { return features_.row(row); }
  const DenseMatrix& matrix() const { return features_; }

  /// max_x ||Psi(x)||_2, the gradient bound of the linear model.
  double max_row_norm() const {
    double best = 0.0;
    for (std::size_t r = 0; r < rows(); ++r)
      best = std::max(best, norm2(features_.row(r)));
    return best;
  }

private:
  DenseMatrix features_;
};

struct TrainConfig {
  double step_size = 0.05;
  int steps = 400;
  double radius = 1.0; // B
};

struct TrainResult {
  std::vector<double> w; // best iterate
  double loss_achieved = 0.0;
  int best_step = 0;
};

namespace detail {

inline void check_embedding(const Member& m, const Embedding& psi) {
  if (psi.rows() != m.f.size())
    throw DimensionError("embedding rows do not match the family support");
}

} // namespace detail

inline double linear_population_loss(const Member& m, const Embedding& psi, const LossSpec& loss,
                                     std::span<const double> w) {
  detail::check_embedding(m, psi);
  double acc = 0.0;
  for (std::size_t x = 0; x < m.f.size(); ++x)
    acc += m.D[x] * loss.value(dot(psi[x], w), m.f[x]);
  return acc;
}

/// sum_x D(x) l'(<Psi(x), w>, f(x)) Psi(x).
inline std::vector<double> linear_population_gradient(const Member& m, const Embedding& psi,
                                                      const LossSpec& loss,
                                                      std::span<const double> w) {
  detail::check_embedding(m, psi);
  std::vector<double> g(psi.dimension(), 0.0);
  for (std::size_t x = 0; x < m.f.size(); ++x) {
    const auto row = psi[x];
    const double s = m.D[x] * loss.derivative(dot(row, w), m.f[x]);
    if (s == 0.0)
      continue;
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] += s * row[k];
  }
  return g;
}

inline void project_to_ball(std::vector<double>& w, double radius) {
  const double nw = norm2(w);
  if (nw > radius) {
    const double scale = radius > 0.0 ? radius / nw : 0.0;
    for (double& v : w)
      v *= scale;
  }
}

/// Loss and gradient at w in a single pass over the support.
inline double linear_loss_and_gradient(const Member& m, const Embedding& psi,
                                       const LossSpec& loss, std::span<const double> w,
                                       std::vector<double>& grad) {
  grad.assign(psi.dimension(), 0.0);
  double value = 0.0;
  for (std::size_t x = 0; x < m.f.size(); ++x) {
    const auto row = psi[x];
    const double yhat = dot(row, w);
    value += m.D[x] * loss.value(yhat, m.f[x]);
    const double s = m.D[x] * loss.derivative(yhat, m.f[x]);
    if (s == 0.0)
      continue;
    for (std::size_t k = 0; k < grad.size(); ++k)
      grad[k] += s * row[k];
  }
  return value;
}

/// Projected subgradient descent from w = 0 with a fixed step; reports the best iterate.
inline TrainResult train_linear(const Member& m, const Embedding& psi, const LossSpec& loss,
                                const TrainConfig& cfg) {
  if (!loss.convex)
    throw LossContractError("projected subgradient training needs a convex loss, got '" +
                            loss.name + "'");
  if (!(cfg.step_size > 0.0))
    throw ParamError("step size must be positive");
  if (!(cfg.radius >= 0.0))
    throw ParamError("radius B must be non-negative");
  if (cfg.steps < 0)
    throw ParamError("step count must be non-negative");
  detail::check_embedding(m, psi);

  std::vector<double> w(psi.dimension(), 0.0);
  std::vector<double> g;
  TrainResult best;
  for (int t = 0;; ++t) {
    const double value = linear_loss_and_gradient(m, psi, loss, w, g);
    if (t == 0 || value < best.loss_achieved)
      best = {w, value, t};
    if (t == cfg.steps)
      break;
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] -= cfg.step_size * g[k];
    project_to_ball(w, cfg.radius);
  }
  return best;
}

struct MemberProfile {
  double loss_achieved = 0.0;
  double grad0_norm = 0.0;
};

struct FamilyProfile {
  std::vector<MemberProfile> per_member;
  double mean = 0.0;
  double min = 0.0;
  double var = 0.0;
  BoundValue bound;          // linear_approx_bound(loss, B, N, var)
  double mean_grad0_sq = 0.0; // compare with N var
  double mean_grad0_norm = 0.0; // compare with sqrt(N var)
};

/// Trains every member; `var` is Var(A) or a certified upper bound on it.
inline FamilyProfile family_profile(const LabeledFamily& a, const Embedding& psi,
                                    const LossSpec& loss, const TrainConfig& cfg, double var) {
  const BoundValue bound = linear_approx_bound(loss, cfg.radius,
                                               static_cast<double>(psi.dimension()), var);
  FamilyProfile p;
  p.var = var;
  p.bound = bound;
  p.per_member.resize(a.size());
  const std::vector<double> zero(psi.dimension(), 0.0);
  parallel_for(a.size(), [&](std::size_t i) {
    const Member& m = a.member(i);
    p.per_member[i].loss_achieved = train_linear(m, psi, loss, cfg).loss_achieved;
    p.per_member[i].grad0_norm = norm2(linear_population_gradient(m, psi, loss, zero));
  });
  double sum = 0.0, sum_sq = 0.0, sum_norm = 0.0;
  p.min = p.per_member.front().loss_achieved;
  for (const auto& r : p.per_member) {
    sum += r.loss_achieved;
    sum_sq += r.grad0_norm * r.grad0_norm;
    sum_norm += r.grad0_norm;
    p.min = std::min(p.min, r.loss_achieved);
  }
  const double count = static_cast<double>(a.size());
  p.mean = sum / count;
  p.mean_grad0_sq = sum_sq / count;
  p.mean_grad0_norm = sum_norm / count;
  return p;
}

/// Largest per-coordinate discrepancy |a - b| / max(1, |a|, |b|) between the analytic gradient
/// and central differences with step h.
inline double grad_check(const Member& m, const Embedding& psi, const LossSpec& loss,
                         std::span<const double> w, double h) {
  if (!(h > 0.0))
    throw ParamError("finite-difference step must be positive");
  const std::vector<double> analytic = linear_population_gradient(m, psi, loss, w);
  std::vector<double> probe(w.begin(), w.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + h;
    const double up = linear_population_loss(m, psi, loss, probe);
    probe[k] = saved - h;
    const double down = linear_population_loss(m, psi, loss, probe);
    probe[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic[k])});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / scale);
  }
  return worst;
}

/// Smallest |1 - y <Psi(x), w>| over the support; hinge is smooth in a ball of this radius
/// (measured in margin units).
inline double hinge_kink_distance(const Member& m, const Embedding& psi,
                                  std::span<const double> w) {
  double best = INFINITY;
  for (std::size_t x = 0; x < m.f.size(); ++x)
    best = std::min(best, std::abs(1.0 - m.f[x] * dot(psi[x], w)));
  return best;
}

} // namespace hardness
