#pragma once

// Gradient descent on the exact hinge population loss of one family member, with gradients
// rounded to the grid Delta Z^N and optionally perturbed by on-grid noise of norm <= sigma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hardness/bounds.hpp"
#include "hardness/family.hpp"
#include "hardness/linalg.hpp"
#include "hardness/linear_train.hpp"
#include "hardness/parallel.hpp"

namespace hardness {

/// Parametric hypothesis h_w over the family support (points addressed by support position).
class HypothesisModel {
public:
  virtual ~HypothesisModel() = default;
  virtual std::size_t parameter_dimension() const = 0;
  virtual std::size_t support_size() const = 0;
  virtual double value(std::size_t x, std::span<const double> w) const = 0;
  /// Writes grad_w h_w(x) into `out` (length parameter_dimension()).
  virtual void gradient(std::size_t x, std::span<const double> w, std::span<double> out) const = 0;
  /// Certified bound B on ||grad_w h_w(x)||_2 for every w and x.
  virtual double gradient_bound() const = 0;
  virtual std::vector<double> initial() const = 0;
};

/// h_w(x) = <Psi(x), w>, initialized at w = 0.
class LinearModel : public HypothesisModel {
public:
  explicit LinearModel(Embedding psi) : psi_(std::move(psi)), bound_(psi_.max_row_norm()) {}

  std::size_t parameter_dimension() const override { return psi_.dimension(); }
  std::size_t support_size() const override { return psi_.rows(); }
  double value(std::size_t x, std::span<const double> w) const override { return dot(psi_[x], w); }
  void gradient(std::size_t x, std::span<const double>, std::span<double> out) const override {
    const auto row = psi_[x];
    std::copy(row.begin(), row.end(), out.begin());
  }
  double gradient_bound() const override { return bound_; }
  std::vector<double> initial() const override {
    return std::vector<double>(psi_.dimension(), 0.0);
  }
  const Embedding& embedding() const { return psi_; }

private:
  Embedding psi_;
  double bound_;
};

/// h_W(x) = sum_i a_i tanh(<W_i, Psi(x)>) with trainable W and fixed output weights a.
/// ||grad_W h|| <= ||a||_2 max ||Psi(x)||_2 and |h| <= ||a||_1.
class TanhNetModel : public HypothesisModel {
public:
  TanhNetModel(Embedding psi, std::vector<double> output, std::vector<double> init)
      : psi_(std::move(psi)), a_(std::move(output)), init_(std::move(init)) {
    if (a_.empty())
      throw ParamError("tanh model needs at least one unit");
    if (init_.size() != parameter_dimension())
      throw DimensionError("initial weights do not match k * N");
    bound_ = norm2(a_) * psi_.max_row_norm();
  }

  /// Output weights of l1-norm `output_l1`, initial W entries uniform in [-init_scale, init_scale].
  static TanhNetModel random(Embedding psi, std::size_t units, double output_l1,
                             double init_scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> a(units);
    double l1 = 0.0;
    for (double& v : a) {
      v = u(rng);
      l1 += std::abs(v);
    }
    for (double& v : a)
      v *= output_l1 / l1;
    std::vector<double> w(units * psi.dimension());
    for (double& v : w)
      v = init_scale * u(rng);
    return TanhNetModel(std::move(psi), std::move(a), std::move(w));
  }

  std::size_t parameter_dimension() const override { return a_.size() * psi_.dimension(); }
  std::size_t support_size() const override { return psi_.rows(); }
  double value(std::size_t x, std::span<const double> w) const override {
    const std::size_t d = psi_.dimension();
    double acc = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i)
      acc += a_[i] * std::tanh(dot(psi_[x], w.subspan(i * d, d)));
    return acc;
  }
  void gradient(std::size_t x, std::span<const double> w, std::span<double> out) const override {
    const std::size_t d = psi_.dimension();
    const auto row = psi_[x];
    for (std::size_t i = 0; i < a_.size(); ++i) {
      const double t = std::tanh(dot(row, w.subspan(i * d, d)));
      const double s = a_[i] * (1.0 - t * t);
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] = s * row[j];
    }
  }
  double gradient_bound() const override { return bound_; }
  std::vector<double> initial() const override { return init_; }

private:
  Embedding psi_;
  std::vector<double> a_;
  std::vector<double> init_;
  double bound_ = 0.0;
};

namespace detail {

inline void check_model(const Member& m, const HypothesisModel& model) {
  if (model.support_size() != m.f.size())
    throw DimensionError("model support does not match the family support");
}

} // namespace detail

inline double hinge_population_loss(const Member& m, const HypothesisModel& model,
                                    std::span<const double> w) {
  detail::check_model(m, model);
  double acc = 0.0;
  for (std::size_t x = 0; x < m.f.size(); ++x)
    acc += m.D[x] * std::max(0.0, 1.0 - model.value(x, w) * m.f[x]);
  return acc;
}

/// sum_x D(x) l'(h_w(x), f(x)) grad_w h_w(x) for the hinge loss, with l' = -y when h y <= 1.
inline std::vector<double> population_gradient(const Member& m, const HypothesisModel& model,
                                               std::span<const double> w) {
  detail::check_model(m, model);
  std::vector<double> g(model.parameter_dimension(), 0.0);
  std::vector<double> gh(model.parameter_dimension());
  for (std::size_t x = 0; x < m.f.size(); ++x) {
    const double y = m.f[x];
    if (model.value(x, w) * y > 1.0 || m.D[x] == 0.0)
      continue;
    model.gradient(x, w, gh);
    const double s = -m.D[x] * y;
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] += s * gh[k];
  }
  return g;
}

/// Nearest multiple of delta per coordinate, ties to the even multiple.
inline std::vector<double> round_to_grid(std::span<const double> v, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ParamError("grid spacing Delta must be positive and finite");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::nearbyint(v[i] / delta) * delta;
  return out;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// i.i.d. on-grid noise with ||xi||_2 <= sigma: uniform direction, radius uniform in [0, sigma],
/// rounded to the grid, redrawn if rounding pushed the norm above sigma.
class NoiseStream {
public:
  NoiseStream(std::size_t dimension, double delta, double sigma, std::uint64_t seed,
              std::uint64_t member_id)
      : dimension_(dimension), delta_(delta), sigma_(sigma), rng_(mix_seed(seed, member_id)) {
    if (!(sigma >= 0.0))
      throw ParamError("noise cap sigma must be non-negative");
  }

  std::vector<double> next() {
    if (sigma_ == 0.0)
      return std::vector<double>(dimension_, 0.0);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> dir(dimension_);
    for (;;) {
      for (double& v : dir)
        v = gauss(rng_);
      const double len = norm2(dir);
      if (len == 0.0)
        continue;
      const double radius = sigma_ * unit(rng_);
      for (double& v : dir)
        v *= radius / len;
      std::vector<double> xi = round_to_grid(dir, delta_);
      if (norm2(xi) <= sigma_)
        return xi;
    }
  }

private:
  std::size_t dimension_;
  double delta_;
  double sigma_;
  std::mt19937_64 rng_;
};

enum class GdMode { Exact, Approx, Noisy };

inline GdMode gd_mode_by_name(std::string_view name) {
  if (name == "exact")
    return GdMode::Exact;
  if (name == "approx")
    return GdMode::Approx;
  if (name == "noisy")
    return GdMode::Noisy;
  throw ParamError("unknown gradient-descent mode '" + std::string(name) + "'");
}

inline const char* gd_mode_name(GdMode m) {
  switch (m) {
  case GdMode::Exact:
    return "exact";
  case GdMode::Approx:
    return "approx";
  case GdMode::Noisy:
    return "noisy";
  }
  return "?";
}

struct GDRun {
  double eta = 0.1;
  int T = 1;
  double delta = 0.1;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  GdMode mode = GdMode::Approx;
};

struct GdResult {
  std::vector<std::vector<double>> trajectory; // w_0 .. w_T
  std::vector<std::vector<double>> steps;      // v_1 .. v_T
  std::vector<std::vector<double>> noise;      // xi_1 .. xi_T, noisy mode only
  double final_loss = 0.0;
  bool stuck_at_0 = false;
  std::optional<std::string> warning;
};

/// floor(max_steps) with a relative 1e-12 allowance for the rounding in Delta^2 / (32 B^2 N var),
/// and at least 1 so a run always takes a step.
inline int noisy_step_count(double max_steps) {
  if (!(max_steps >= 0.0) || !std::isfinite(max_steps))
    throw ParamError("step budget must be finite and non-negative");
  return std::max(1, static_cast<int>(std::floor(max_steps * (1.0 + 1e-12))));
}

/// Largest |h_w(x)| over the support.
inline double output_sup(const HypothesisModel& model, std::span<const double> w) {
  double best = 0.0;
  for (std::size_t x = 0; x < model.support_size(); ++x)
    best = std::max(best, std::abs(model.value(x, w)));
  return best;
}

/// Approx mode: w_t = w_{t-1} - eta round(grad L); noisy mode: w_t = w_{t-1} - eta round(grad L
/// + xi_t). Approx mode needs |h_{w0}| <= 1 and noisy mode |h_{w0}| <= 1/2.
inline GdResult run_gd(const Member& m, const HypothesisModel& model, const GDRun& run,
                       std::uint64_t member_id = 0) {
  detail::check_model(m, model);
  if (!(run.eta > 0.0))
    throw ParamError("step size eta must be positive");
  if (run.T < 0)
    throw ParamError("step count T must be non-negative");
  if (run.mode != GdMode::Exact && !(run.delta > 0.0))
    throw ParamError("Delta must be positive for approximate and noisy descent");
  if (!(run.sigma >= 0.0))
    throw ParamError("noise cap sigma must be non-negative");

  std::vector<double> w = model.initial();
  GdResult r;
  if (run.mode == GdMode::Approx && output_sup(model, w) > 1.0)
    throw ContractError("initial hypothesis exceeds |h| <= 1");
  if (run.mode == GdMode::Noisy) {
    if (output_sup(model, w) > 0.5)
      throw ContractError("initial hypothesis exceeds |h| <= 1/2");
    if (run.sigma > 0.0 && run.T > 0) {
      const double cap = 1.0 / (2.0 * run.sigma * model.gradient_bound() * run.T);
      if (run.eta > cap)
        r.warning = "eta exceeds 1/(2 sigma B T) = " + std::to_string(cap);
    }
  }

  std::optional<NoiseStream> noise;
  if (run.mode == GdMode::Noisy)
    noise.emplace(model.parameter_dimension(), run.delta, run.sigma, run.seed, member_id);

  r.trajectory.push_back(w);
  bool stuck = true;
  for (int t = 1; t <= run.T; ++t) {
    std::vector<double> g = population_gradient(m, model, w);
    std::vector<double> v;
    switch (run.mode) {
    case GdMode::Exact:
      v = g;
      if (t == 1)
        stuck = std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
      break;
    case GdMode::Approx:
      v = round_to_grid(g, run.delta);
      if (t == 1)
        stuck = std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
      break;
    case GdMode::Noisy: {
      std::vector<double> xi = noise->next();
      for (std::size_t k = 0; k < g.size(); ++k)
        g[k] += xi[k];
      v = round_to_grid(g, run.delta);
      stuck = stuck && v == xi;
      r.noise.push_back(std::move(xi));
      break;
    }
    }
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] -= run.eta * v[k];
    r.steps.push_back(std::move(v));
    r.trajectory.push_back(w);
  }
  if (run.T == 0 && run.mode != GdMode::Noisy) {
    const std::vector<double> g = population_gradient(m, model, w);
    const std::vector<double> v = run.mode == GdMode::Exact ? g : round_to_grid(g, run.delta);
    stuck = std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
  }
  r.stuck_at_0 = stuck;
  r.final_loss = hinge_population_loss(m, model, w);
  return r;
}

/// Noise-only trajectory w~_t = w~_{t-1} - eta xi_t, replayed in the arithmetic of run_gd.
inline std::vector<std::vector<double>> noise_only_trajectory(std::span<const double> w0,
                                                              double eta,
                                                              const std::vector<std::vector<double>>& noise) {
  std::vector<std::vector<double>> out;
  std::vector<double> w(w0.begin(), w0.end());
  out.push_back(w);
  for (const auto& xi : noise) {
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] -= eta * xi[k];
    out.push_back(w);
  }
  return out;
}

struct StuckFraction {
  double fraction = 0.0;
  std::size_t stuck = 0;
  double markov_floor = 0.0; // 1 - 4 B^2 N var / Delta^2
  double mean_grad_sq = 0.0;
  double energy_bound = 0.0; // B^2 N var
  bool fraction_ok = false;
  bool energy_ok = false;
  std::vector<double> grad_norms;
};

/// Fraction of members whose gradient at w0 has norm < Delta / 2.
inline StuckFraction family_stuck_fraction(const LabeledFamily& a, const HypothesisModel& model,
                                           double delta, double var) {
  if (!(delta > 0.0))
    throw ParamError("Delta must be positive");
  const std::vector<double> w0 = model.initial();
  if (output_sup(model, w0) > 1.0)
    throw ContractError("initial hypothesis exceeds |h| <= 1");
  StuckFraction s;
  s.grad_norms.resize(a.size());
  parallel_for(a.size(), [&](std::size_t i) {
    s.grad_norms[i] = norm2(population_gradient(a.member(i), model, w0));
  });
  double sum_sq = 0.0;
  for (double g : s.grad_norms) {
    sum_sq += g * g;
    if (g < delta / 2.0)
      ++s.stuck;
  }
  const double count = static_cast<double>(a.size());
  const double b = model.gradient_bound();
  const double n = static_cast<double>(model.parameter_dimension());
  s.fraction = static_cast<double>(s.stuck) / count;
  s.mean_grad_sq = sum_sq / count;
  s.energy_bound = b * b * n * var;
  s.markov_floor = 1.0 - 4.0 * s.energy_bound / (delta * delta);
  s.fraction_ok = s.fraction >= s.markov_floor - 1e-12;
  s.energy_ok = s.mean_grad_sq <= s.energy_bound + 1e-9;
  return s;
}

enum class Activation { Relu, Identity, Tanh };

inline Activation activation_by_name(std::string_view name) {
  if (name == "relu")
    return Activation::Relu;
  if (name == "identity")
    return Activation::Identity;
  if (name == "tanh")
    return Activation::Tanh;
  throw ParamError("unknown activation '" + std::string(name) + "'");
}

inline double activate(Activation a, double v) {
  switch (a) {
  case Activation::Relu:
    return v > 0.0 ? v : 0.0;
  case Activation::Identity:
    return v;
  case Activation::Tanh:
    return std::tanh(v);
  }
  return v;
}

/// g(x, z) = sum_i u_i act(<w_i, x> + <v_i, z> + b_i) with ||w_i||, ||v_i||, ||u||, ||b|| <= R.
struct TwoLayerNet {
  int x_dimension = 0;
  int z_dimension = 0;
  double radius = 0.0;
  Activation activation = Activation::Relu;
  DenseMatrix W; // k x n_x
  DenseMatrix V; // k x n_z
  std::vector<double> u;
  std::vector<double> b;

  TwoLayerNet(double R, Activation act, DenseMatrix w, DenseMatrix v, std::vector<double> out,
              std::vector<double> bias)
      : x_dimension(static_cast<int>(w.cols())), z_dimension(static_cast<int>(v.cols())),
        radius(R), activation(act), W(std::move(w)), V(std::move(v)), u(std::move(out)),
        b(std::move(bias)) {
    const std::size_t k = u.size();
    if (k == 0 || W.rows() != k || V.rows() != k || b.size() != k)
      throw DimensionError("network layers disagree on the unit count");
    const double cap = R * (1.0 + 1e-12);
    bool ok = norm2(u) <= cap && norm2(b) <= cap;
    for (std::size_t i = 0; i < k; ++i)
      ok = ok && norm2(W.row(i)) <= cap && norm2(V.row(i)) <= cap;
    if (!ok)
      throw NormError("network weight exceeds the norm cap R");
  }

  std::size_t units() const { return u.size(); }

  double evaluate(Point x, Point z) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < units(); ++i) {
      double pre = b[i];
      for (int j = 0; j < x_dimension; ++j)
        pre += W(i, static_cast<std::size_t>(j)) * x[j];
      for (int j = 0; j < z_dimension; ++j)
        pre += V(i, static_cast<std::size_t>(j)) * z[j];
      acc += u[i] * activate(activation, pre);
    }
    return acc;
  }

  /// Each weight vector gets a uniform direction and a norm uniform in [0, R].
  static TwoLayerNet random(std::size_t k, int nx, int nz, double R, Activation act,
                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](std::span<double> out) {
      double len = 0.0;
      while (len == 0.0) {
        for (double& v : out)
          v = gauss(rng);
        len = norm2(out);
      }
      const double scale = R * unit(rng) / len;
      for (double& v : out)
        v *= scale;
    };
    DenseMatrix w(k, static_cast<std::size_t>(nx));
    DenseMatrix v(k, static_cast<std::size_t>(nz));
    for (std::size_t i = 0; i < k; ++i) {
      draw(w.row(i));
      draw(v.row(i));
    }
    std::vector<double> out(k), bias(k);
    draw(out);
    draw(bias);
    return TwoLayerNet(R, act, std::move(w), std::move(v), std::move(out), std::move(bias));
  }
};

/// Largest multiple of delta that is <= v, exact for values already on the grid.
inline double floor_to_grid(double v, double delta) {
  double k = std::floor(v / delta);
  if (delta * (k + 1.0) <= v)
    k += 1.0;
  else if (delta * k > v)
    k -= 1.0;
  return delta * k;
}

/// Floors every v-weight to delta Z. Each v_i moves by at most delta sqrt(n_z), so the cap of the
/// result is relaxed by that amount.
inline TwoLayerNet discretize_net(const TwoLayerNet& net, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ParamError("Delta must lie in (0, 1)");
  DenseMatrix v = net.V;
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (double& c : v.row(i))
      c = floor_to_grid(c, delta);
  return TwoLayerNet(net.radius + delta * std::sqrt(static_cast<double>(net.z_dimension)),
                     net.activation, net.W, std::move(v), net.u, net.b);
}

struct DriftReport {
  double max_drift = 0.0;
  double bound = 0.0; // R sqrt(k) Delta n
  std::size_t violations = 0;
  std::size_t points = 0;
};

/// |g - g_hat| at seeded random points (x, z), against R sqrt(k) Delta n with n = n_z.
inline DriftReport drift_sweep(const TwoLayerNet& net, double delta, std::size_t points,
                               std::uint64_t seed) {
  const TwoLayerNet hat = discretize_net(net, delta);
  DriftReport r;
  r.points = points;
  r.bound = net.radius * std::sqrt(static_cast<double>(net.units())) * delta * net.z_dimension;
  std::mt19937_64 rng(seed);
  for (std::size_t p = 0; p < points; ++p) {
    const Point x{net.x_dimension,
                  static_cast<std::uint32_t>(rng() & (cube_size(net.x_dimension) - 1))};
    const Point z{net.z_dimension,
                  static_cast<std::uint32_t>(rng() & (cube_size(net.z_dimension) - 1))};
    const double d = std::abs(net.evaluate(x, z) - hat.evaluate(x, z));
    r.max_drift = std::max(r.max_drift, d);
    if (d > r.bound)
      ++r.violations;
  }
  return r;
}

} // namespace hardness
