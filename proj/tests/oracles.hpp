#pragma once

// Reference implementations used only by tests. They share no code paths with the library
// beyond the data containers: plain loops over coordinates, full enumeration, and Eigen's
// dense eigensolver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hardness/family.hpp"
#include "hardness/linalg.hpp"

namespace oracle {

/// prod_{i in subset} x_i by walking coordinates one at a time.
inline int parity(int n, std::uint32_t subset, std::uint32_t x) {
  int v = 1;
  for (int i = 0; i < n; ++i)
    if ((subset >> i) & 1u)
      v *= ((x >> i) & 1u) ? -1 : 1;
  return v;
}

inline double inner(const hardness::Member& m, const std::vector<double>& phi) {
  double acc = 0.0;
  for (std::size_t x = 0; x < phi.size(); ++x)
    acc += static_cast<double>(m.f[x]) * phi[x] * m.D[x];
  return acc;
}

inline double variance_at(const hardness::LabeledFamily& a, const std::vector<double>& phi) {
  double acc = 0.0;
  for (const auto& m : a.members()) {
    const double c = inner(m, phi);
    acc += c * c;
  }
  return acc / static_cast<double>(a.size());
}

/// Max over every sign vector, without symmetry reduction or incremental updates.
inline double brute_variance(const hardness::LabeledFamily& a) {
  const std::size_t nx = a.support_size();
  double best = 0.0;
  std::vector<double> phi(nx);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nx); ++mask) {
    for (std::size_t x = 0; x < nx; ++x)
      phi[x] = ((mask >> x) & 1u) ? -1.0 : 1.0;
    best = std::max(best, variance_at(a, phi));
  }
  return best;
}

inline Eigen::MatrixXd to_eigen(const hardness::DenseMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return out;
}

/// Largest singular value from the symmetric eigendecomposition of M M^T.
inline double eigen_spectral_norm(const hardness::DenseMatrix& m) {
  const Eigen::MatrixXd e = to_eigen(m);
  const Eigen::MatrixXd gram = e * e.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

/// Operator-matrix spectral bound (|X| / |A|) ||M||^2 from Eigen.
inline double spectral_variance_bound(const hardness::LabeledFamily& a) {
  hardness::DenseMatrix m(a.size(), a.support_size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t x = 0; x < a.support_size(); ++x)
      m(i, x) = a.member(i).f[x] * a.member(i).D[x];
  const double s = eigen_spectral_norm(m);
  return static_cast<double>(a.support_size()) / static_cast<double>(a.size()) * s * s;
}

/// Central difference of a scalar function along coordinate k.
template <class Fn>
double central_difference(Fn&& fn, std::vector<double> w, std::size_t k, double h) {
  const double saved = w[k];
  w[k] = saved + h;
  const double up = fn(w);
  w[k] = saved - h;
  const double down = fn(w);
  return (up - down) / (2.0 * h);
}

} // namespace oracle
