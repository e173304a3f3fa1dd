#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nlgpe/matrix_field.hpp"

namespace nlgpe {

/// Nodes where s(B(x)) ≥ η − ε (ties included).
inline std::vector<bool> omega_eps(const SpectralBoundField& sb, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("eps must be positive");
  }
  std::vector<bool> mask(sb.size());
  for (std::size_t m = 0; m < sb.size(); ++m) {
    mask[m] = sb.values[static_cast<Eigen::Index>(m)] >= sb.eta - eps;
  }
  return mask;
}

namespace detail {

inline void check_sizes(const MatrixField& field, const SpectralBoundField& sb) {
  if (field.size() != sb.size()) {
    throw std::invalid_argument("control: field and spectral-bound samples differ in size");
  }
}

}  // namespace detail

/// B(x) + (η − 2ε − s(B(x)))I on Ω_ε, B(x) − εI elsewhere.
inline MatrixField lower_control(const MatrixField& field, const SpectralBoundField& sb, double eps) {
  detail::check_sizes(field, sb);
  const std::vector<bool> mask = omega_eps(sb, eps);
  MatrixField out = field;
  for (std::size_t m = 0; m < out.size(); ++m) {
    const double s = sb.values[static_cast<Eigen::Index>(m)];
    out[m].diagonal().array() += mask[m] ? (sb.eta - 2.0 * eps - s) : -eps;
  }
  return out;
}

/// B(x) + (ε + η − s(B(x)))I on Ω_ε, B(x) + 2εI elsewhere.
inline MatrixField upper_control(const MatrixField& field, const SpectralBoundField& sb, double eps) {
  detail::check_sizes(field, sb);
  const std::vector<bool> mask = omega_eps(sb, eps);
  MatrixField out = field;
  for (std::size_t m = 0; m < out.size(); ++m) {
    const double s = sb.values[static_cast<Eigen::Index>(m)];
    out[m].diagonal().array() += mask[m] ? (eps + sb.eta - s) : 2.0 * eps;
  }
  return out;
}

struct ControlPair {
  double eps = 0.0;
  double eta = 0.0;
  std::vector<bool> omega_eps_mask;
  MatrixField lower_field;
  MatrixField upper_field;
};

inline ControlPair make_controls(const MatrixField& field, const SpectralBoundField& sb, double eps) {
  ControlPair pair;
  pair.eps = eps;
  pair.eta = sb.eta;
  pair.omega_eps_mask = omega_eps(sb, eps);
  pair.lower_field = lower_control(field, sb, eps);
  pair.upper_field = upper_control(field, sb, eps);
  return pair;
}

/// ε_k = eps0 · 2^{−k}, k = 0..K.
inline std::vector<double> default_schedule(double eps0 = 0.1, std::size_t K = 10) {
  if (!(eps0 > 0.0)) {
    throw std::invalid_argument("eps0 must be positive");
  }
  std::vector<double> schedule(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    schedule[k] = std::ldexp(eps0, -static_cast<int>(k));
  }
  return schedule;
}

}  // namespace nlgpe
