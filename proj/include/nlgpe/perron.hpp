#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace nlgpe {

struct PowerOptions {
  double tolerance = 1e-12;
  long max_iterations = 100000;
  /// Entries below `floor · sup-norm` are left out of the quotient bracket.
  double floor = 1e-14;
  /// Iterations between progress checks of the quotient spread.
  long progress_window = 5000;
};

/// Outcome of a shifted power iteration on a cooperative (essentially
/// nonnegative) linear map A.
struct PowerResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double cw_lower = -std::numeric_limits<double>::infinity();
  double cw_upper = std::numeric_limits<double>::infinity();
  long iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Min and max of (A v)_i / v_i over the entries of `v` that are not
/// negligible. For v ≫ 0 these bracket the Perron root of A.
inline std::pair<double, double> quotient_bracket(const Eigen::VectorXd& Av, const Eigen::VectorXd& v, double floor) {
  const double scale = v.cwiseAbs().maxCoeff();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] > floor * scale) {
      const double q = Av[i] / v[i];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
  }
  return {lo, hi};
}

/// Power iteration on A + shift·I, where `apply(v)` returns A v and the
/// shift makes A + shift·I entrywise nonnegative with a positive diagonal.
///
/// Stops once the Collatz–Wielandt quotient spread of the current iterate
/// falls below tolerance · max(1, |λ|); the bracket is reported either way.
template <class Apply>
PowerResult power_iterate(Apply&& apply, Eigen::VectorXd start, double shift, const PowerOptions& options = {}) {
  PowerResult result;
  Eigen::VectorXd v = std::move(start);
  v /= v.cwiseAbs().maxCoeff();
  Eigen::VectorXd Av = apply(v);
  double checkpoint_spread = std::numeric_limits<double>::infinity();
  for (long it = 0; it < options.max_iterations; ++it) {
    const auto [lo, hi] = quotient_bracket(Av, v, options.floor);
    result.cw_lower = lo;
    result.cw_upper = hi;
    result.iterations = it;
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= options.tolerance * std::max(1.0, std::abs(mid))) {
      result.converged = true;
      break;
    }
    if (it > 0 && it % options.progress_window == 0) {
      if (hi - lo > 0.999 * checkpoint_spread) {
        result.stalled = true;
        break;
      }
      checkpoint_spread = hi - lo;
    }
    Eigen::VectorXd next = Av + shift * v;
    const double norm = next.cwiseAbs().maxCoeff();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      break;
    }
    next /= norm;
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    Av = apply(v);
    if (change < 1e-15) {
      const auto [lo2, hi2] = quotient_bracket(Av, v, options.floor);
      result.cw_lower = lo2;
      result.cw_upper = hi2;
      result.iterations = it + 1;
      result.converged = hi2 - lo2 <= options.tolerance * std::max(1.0, std::abs(0.5 * (lo2 + hi2)));
      result.stalled = !result.converged;
      break;
    }
    result.iterations = it + 1;
  }
  result.value = 0.5 * (result.cw_lower + result.cw_upper);
  result.vector = std::move(v);
  return result;
}

/// Dense route: eigenvalue of maximal real part and a matching real
/// eigenvector with nonnegative orientation.
struct DenseEig {
  double value = 0.0;
  Eigen::VectorXd vector;
  Eigen::VectorXcd spectrum;
};

inline DenseEig dense_max_real_eig(const Eigen::MatrixXd& A, bool with_vector = true) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, with_vector);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("dense eigensolver failed");
  }
  DenseEig out;
  out.spectrum = solver.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < out.spectrum.size(); ++k) {
    if (out.spectrum[k].real() > out.spectrum[best].real()) {
      best = k;
    }
  }
  out.value = out.spectrum[best].real();
  if (with_vector) {
    Eigen::VectorXd v = solver.eigenvectors().col(best).real();
    if (v.sum() < 0.0) {
      v = -v;
    }
    v = v.cwiseMax(0.0);
    const double norm = v.maxCoeff();
    if (norm > 0.0) {
      v /= norm;
    }
    out.vector = std::move(v);
  }
  return out;
}

}  // namespace nlgpe
