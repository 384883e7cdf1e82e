#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hardness/errors.hpp"
#include "hardness/parallel.hpp"

namespace hardness {

/// Row-major dense matrix with a hard entry cap.
class DenseMatrix {
public:
  static constexpr std::size_t kMaxEntries = std::size_t{1} << 25;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows != 0 && cols > kMaxEntries / rows)
      throw DomainTooLarge("matrix of " + std::to_string(rows) + " x " + std::to_string(cols) +
                           " entries exceeds the dense cap");
    data_.assign(rows * cols, 0.0);
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  /// M v; each entry summed in column order.
  std::vector<double> multiply(std::span<const double> v) const {
    if (v.size() != cols_)
      throw DimensionError("matrix-vector size mismatch");
    std::vector<double> out(rows_, 0.0);
    parallel_for(rows_, [&](std::size_t r) {
      const double* m = data_.data() + r * cols_;
      double acc = 0.0;
      for (std::size_t c = 0; c < cols_; ++c)
        acc += m[c] * v[c];
      out[r] = acc;
    });
    return out;
  }

  /// M^T v; each entry summed in row order, computed in fixed column blocks.
  std::vector<double> multiply_transposed(std::span<const double> v) const {
    if (v.size() != rows_)
      throw DimensionError("matrix-vector size mismatch");
    constexpr std::size_t kBlock = 64;
    std::vector<double> out(cols_, 0.0);
    const std::size_t blocks = (cols_ + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
      const std::size_t c0 = b * kBlock;
      const std::size_t c1 = std::min(cols_, c0 + kBlock);
      for (std::size_t r = 0; r < rows_; ++r) {
        const double* m = data_.data() + r * cols_;
        const double vr = v[r];
        for (std::size_t c = c0; c < c1; ++c)
          out[c] += m[c] * vr;
      }
    });
    return out;
  }

  DenseMatrix hadamard(const DenseMatrix& other) const {
    if (other.rows_ != rows_ || other.cols_ != cols_)
      throw DimensionError("Hadamard product of differently shaped matrices");
    DenseMatrix out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data_[i] = data_[i] * other.data_[i];
    return out;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct PowerIterationOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 100000;
  std::uint64_t perturbation_seed = 0x5eedULL;
};

struct SpectralNorm {
  double norm = 0.0;         // largest singular value
  double norm_squared = 0.0; // largest eigenvalue of the Gram matrix
  int iterations = 0;
};

namespace detail {

struct PowerRun {
  double lambda = 0.0;
  int iterations = 0;
  bool degenerate = false; // the start vector was annihilated
};

template <class Gram>
PowerRun power_run(const Gram& gram, std::vector<double> v, const PowerIterationOptions& opt) {
  const double nv = norm2(v);
  for (double& x : v)
    x /= nv;
  double previous = -1.0;
  double lambda = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    std::vector<double> y = gram(v);
    lambda = dot(v, y);
    const double ny = norm2(y);
    if (ny == 0.0)
      return {0.0, it, true};
    double residual = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - lambda * v[i];
      residual += d * d;
    }
    residual = std::sqrt(residual);
    if (it > 1 && std::abs(lambda - previous) <= opt.relative_tolerance * lambda &&
        residual <= std::sqrt(opt.relative_tolerance) * lambda)
      return {lambda, it, false};
    for (std::size_t i = 0; i < y.size(); ++i)
      v[i] = y[i] / ny;
    previous = lambda;
  }
  throw ConvergenceError("power iteration did not converge within " +
                             std::to_string(opt.max_iterations) + " iterations",
                         lambda, std::move(v));
}

} // namespace detail

/// Largest singular value of M by power iteration on the smaller Gram matrix (M M^T or M^T M).
/// The all-ones start is followed by a confirmation pass from a seeded perturbed start, and the
/// larger Rayleigh quotient is kept, so a start orthogonal to the top eigenvector is not fatal.
inline SpectralNorm spectral_norm(const DenseMatrix& m, const PowerIterationOptions& opt = {}) {
  if (m.rows() == 0 || m.cols() == 0)
    return {};
  const bool row_space = m.rows() <= m.cols();
  const std::size_t dim = row_space ? m.rows() : m.cols();
  auto gram = [&](const std::vector<double>& v) {
    return row_space ? m.multiply(m.multiply_transposed(v))
                     : m.multiply_transposed(m.multiply(v));
  };

  std::vector<double> start(dim, 1.0);
  const detail::PowerRun first = detail::power_run(gram, start, opt);

  std::mt19937_64 rng(opt.perturbation_seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (double& x : start)
    x += jitter(rng);
  const detail::PowerRun second = detail::power_run(gram, start, opt);

  const double lambda = std::max({first.lambda, second.lambda, 0.0});
  return {std::sqrt(lambda), lambda, first.iterations + second.iterations};
}

} // namespace hardness
