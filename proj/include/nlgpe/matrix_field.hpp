#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlgpe/error.hpp"
#include "nlgpe/grid.hpp"
#include "nlgpe/kernel.hpp"
#include "nlgpe/perron.hpp"

namespace nlgpe {

/// An n×n coefficient field sampled at the nodes of a grid.
struct MatrixField {
  std::size_t n = 0;
  std::vector<double> nodes;
  std::vector<Eigen::MatrixXd> samples;

  std::size_t size() const noexcept { return samples.size(); }
  const Eigen::MatrixXd& operator[](std::size_t m) const { return samples[m]; }
  Eigen::MatrixXd& operator[](std::size_t m) { return samples[m]; }

  template <class Fn>
  static MatrixField from_function(const SpatialGrid& grid, std::size_t n, Fn&& fn) {
    MatrixField field;
    field.n = n;
    field.nodes = grid.nodes;
    field.samples.reserve(grid.size());
    for (double x : grid.nodes) {
      Eigen::MatrixXd B = fn(x);
      if (static_cast<std::size_t>(B.rows()) != n || static_cast<std::size_t>(B.cols()) != n) {
        throw std::invalid_argument("field evaluator returned a matrix of the wrong size");
      }
      field.samples.push_back(std::move(B));
    }
    return field;
  }

  static MatrixField constant(const SpatialGrid& grid, const Eigen::MatrixXd& B) {
    if (B.rows() != B.cols()) {
      throw std::invalid_argument("field matrix must be square");
    }
    return from_function(grid, static_cast<std::size_t>(B.rows()), [&](double) { return B; });
  }

  /// Largest entrywise jump between adjacent nodes divided by the spacing.
  double lipschitz_estimate() const {
    double best = 0.0;
    for (std::size_t m = 1; m < samples.size(); ++m) {
      const double h = nodes[m] - nodes[m - 1];
      best = std::max(best, (samples[m] - samples[m - 1]).cwiseAbs().maxCoeff() / h);
    }
    return best;
  }

  MatrixField shifted(double t) const {
    MatrixField out = *this;
    for (auto& B : out.samples) {
      B.diagonal().array() += t;
    }
    return out;
  }
};

inline bool check_cooperative(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("check_cooperative: matrix must be square");
  }
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      if (i != k && A(i, k) < 0.0) {
        return false;
      }
    }
  }
  return true;
}

inline bool check_irreducible(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  if (n != A.cols()) {
    throw std::invalid_argument("check_irreducible: matrix must be square");
  }
  if (n <= 1) {
    return true;
  }
  auto reaches_all = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index k = 0; k < n; ++k) {
        const double entry = forward ? A(i, k) : A(k, i);
        if (k != i && !seen[static_cast<std::size_t>(k)] && std::abs(entry) >= 1e-14) {
          seen[static_cast<std::size_t>(k)] = 1;
          stack.push_back(k);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(true) && reaches_all(false);
}

/// Dense route fallback shared by the n×n and the operator-level solvers:
/// verify the dense value against the power bracket and return it.
inline double reconcile_dense(const PowerResult& power, const DenseEig& dense) {
  const double scale = std::max(1.0, std::abs(dense.value));
  if (std::isfinite(power.cw_lower) && std::isfinite(power.cw_upper)) {
    if (dense.value < power.cw_lower - 1e-8 * scale || dense.value > power.cw_upper + 1e-8 * scale) {
      throw NumericalError("power iteration did not converge and the dense eigenvalue " + std::to_string(dense.value) +
                           " lies outside the Collatz-Wielandt bracket [" + std::to_string(power.cw_lower) + ", " +
                           std::to_string(power.cw_upper) + "]");
    }
  }
  return dense.value;
}

/// s(B): largest real part of the eigenvalues of a cooperative matrix,
/// computed as ρ(B + cI) − c with c = 1 + max|b_ii|. When `vector` is given
/// it receives a nonnegative eigenvector with sup-norm 1.
inline double spectral_bound(const Eigen::MatrixXd& B, Eigen::VectorXd* vector = nullptr) {
  if (!check_cooperative(B)) {
    throw std::invalid_argument("spectral_bound: matrix is not cooperative");
  }
  const Eigen::Index n = B.rows();
  if (n == 0) {
    throw std::invalid_argument("spectral_bound: empty matrix");
  }
  if (n == 1) {
    if (vector) {
      *vector = Eigen::VectorXd::Ones(1);
    }
    return B(0, 0);
  }
  const double c = 1.0 + B.diagonal().cwiseAbs().maxCoeff();
  PowerResult power = power_iterate([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return B * v; },
                                    Eigen::VectorXd::Ones(n), c);
  if (power.converged) {
    if (vector) {
      *vector = power.vector;
    }
    return power.value;
  }
  DenseEig dense = dense_max_real_eig(B, vector != nullptr);
  const double value = reconcile_dense(power, dense);
  if (vector) {
    *vector = dense.vector;
  }
  return value;
}

/// s(B(x_m)) at every node together with η = max_m s(B(x_m)).
struct SpectralBoundField {
  Eigen::VectorXd values;
  double eta = 0.0;
  std::size_t argmax = 0;
  std::size_t irreducible_nodes = 0;
  std::string warning;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

inline SpectralBoundField sample_field(const MatrixField& field, const SpatialGrid& grid) {
  if (field.size() != grid.size()) {
    throw std::invalid_argument("sample_field: field and grid sizes differ");
  }
  SpectralBoundField sb;
  sb.values.resize(static_cast<Eigen::Index>(field.size()));
  for (std::size_t m = 0; m < field.size(); ++m) {
    if (!check_cooperative(field[m])) {
      throw std::invalid_argument("field is not cooperative at node " + std::to_string(m) + " (x = " +
                                  std::to_string(grid.nodes[m]) + ")");
    }
    if (check_irreducible(field[m])) {
      ++sb.irreducible_nodes;
    }
    sb.values[static_cast<Eigen::Index>(m)] = spectral_bound(field[m]);
  }
  Eigen::Index arg = 0;
  sb.eta = sb.values.maxCoeff(&arg);
  sb.argmax = static_cast<std::size_t>(arg);
  if (sb.irreducible_nodes == 0) {
    sb.warning = "no grid node carries an irreducible coefficient matrix";
  }
  return sb;
}

/// ∫_Ω min(1/(η − s(B(x)) + δ), cap) dx. A quantity that keeps growing under
/// refinement (with δ and cap tied to the mesh) hints that (η − s)^{-1} is
/// not integrable near the maximizer.
inline double l1_divergence_indicator(const SpectralBoundField& sb, const SpatialGrid& grid, double delta_reg, double cap) {
  if (sb.size() != grid.size()) {
    throw std::invalid_argument("l1_divergence_indicator: size mismatch");
  }
  Eigen::VectorXd integrand(sb.values.size());
  for (Eigen::Index m = 0; m < integrand.size(); ++m) {
    const double gap = std::max(0.0, sb.eta - sb.values[m]);
    integrand[m] = std::min(1.0 / (gap + delta_reg), cap);
  }
  return quad_integrate(grid, integrand);
}

inline double l1_divergence_indicator(const SpectralBoundField& sb, const SpatialGrid& grid) {
  const double h = grid.spacing();
  return l1_divergence_indicator(sb, grid, h, 1.0 / h);
}

struct DivergenceCurve {
  std::vector<std::size_t> resolutions;
  std::vector<double> values;
  bool growing = false;
};

/// Indicator over a sequence of refinements of [a, b]. `growing` is set when
/// every increment is at least 0.75 times the previous one.
template <class Fn>
DivergenceCurve l1_divergence_curve(double a, double b, std::size_t n, Fn&& fn, const std::vector<std::size_t>& resolutions) {
  DivergenceCurve curve;
  curve.resolutions = resolutions;
  for (std::size_t M : resolutions) {
    const SpatialGrid grid = build_grid(a, b, M);
    const MatrixField field = MatrixField::from_function(grid, n, fn);
    curve.values.push_back(l1_divergence_indicator(sample_field(field, grid), grid));
  }
  if (curve.values.size() >= 3) {
    curve.growing = true;
    double previous = curve.values[1] - curve.values[0];
    if (!(previous > 0.0)) {
      curve.growing = false;
    }
    for (std::size_t k = 2; k < curve.values.size() && curve.growing; ++k) {
      const double inc = curve.values[k] - curve.values[k - 1];
      if (!(inc > 0.0) || inc < 0.75 * previous) {
        curve.growing = false;
      }
      previous = inc;
    }
  }
  return curve;
}

/// B(x) = A(x) − diag(d*_i(x)): turns a reaction Jacobian field into the
/// coefficient field of the nonlocal operator.
inline MatrixField linearization_field(const MatrixField& reaction, const std::vector<DispersalBlock>& blocks) {
  if (blocks.size() != reaction.n) {
    throw std::invalid_argument("linearization_field: one dispersal block per component required");
  }
  MatrixField out = reaction;
  for (std::size_t m = 0; m < out.size(); ++m) {
    for (std::size_t i = 0; i < out.n; ++i) {
      out[m](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= blocks[i].boundary[static_cast<Eigen::Index>(m)];
    }
  }
  return out;
}

/// Reads a per-node field table with header `node_index,i,k,value`
/// (zero-based indices). Entries not listed are zero.
inline MatrixField load_field_table(std::istream& in, const SpatialGrid& grid, std::size_t n) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("field table: empty input");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "node_index,i,k,value") {
    throw std::invalid_argument("field table: expected header 'node_index,i,k,value'");
  }
  MatrixField field = MatrixField::constant(grid, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") {
      continue;
    }
    std::istringstream fields(line);
    long m = 0, i = 0, k = 0;
    double v = 0.0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(fields >> m >> c1 >> i >> c2 >> k >> c3 >> v) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw std::invalid_argument("field table: malformed line " + std::to_string(lineno));
    }
    if (m < 0 || static_cast<std::size_t>(m) >= grid.size() || i < 0 || k < 0 || static_cast<std::size_t>(i) >= n ||
        static_cast<std::size_t>(k) >= n) {
      throw std::invalid_argument("field table: index out of range on line " + std::to_string(lineno));
    }
    field[static_cast<std::size_t>(m)](i, k) = v;
  }
  return field;
}

}  // namespace nlgpe
