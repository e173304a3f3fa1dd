#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "nlgpe/control.hpp"
#include "nlgpe/error.hpp"
#include "nlgpe/grid.hpp"
#include "nlgpe/kernel.hpp"
#include "nlgpe/matrix_field.hpp"
#include "nlgpe/perron.hpp"

namespace nlgpe {

/// Discretization of  φ ↦ d_i ∫ J_i(x,y) φ_i(y) dy + Σ_k b_ik(x) φ_k(x)
/// on the grid nodes. States are flattened component-major, index i·M + m,
/// which is the column-major layout of an M×n matrix.
///
/// The field already carries the boundary loss −d*_i on its diagonal, so
/// the kernel part is the bare d_i·K_i.
struct DiscreteOperator {
  std::size_t n = 0;
  std::size_t M = 0;
  std::vector<DispersalBlock> blocks;
  MatrixField field;
  std::vector<std::size_t> degenerate_set;
  double shift = 1.0;

  std::size_t dim() const noexcept { return n * M; }

  double diagonal_entry(std::size_t i, std::size_t m) const {
    const auto mi = static_cast<Eigen::Index>(m);
    const auto ii = static_cast<Eigen::Index>(i);
    const double kernel = blocks[i].degenerate() ? 0.0 : blocks[i].rate * (*blocks[i].weighted_kernel)(mi, mi);
    return kernel + field[m](ii, ii);
  }

  /// Kernel part only: v ↦ (d_i K_i v_i)_i.
  Eigen::VectorXd apply_kernel(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    const auto Mi = static_cast<Eigen::Index>(M);
    for (std::size_t i = 0; i < n; ++i) {
      if (!blocks[i].degenerate()) {
        const auto off = static_cast<Eigen::Index>(i) * Mi;
        out.segment(off, Mi).noalias() = blocks[i].rate * (*blocks[i].weighted_kernel) * v.segment(off, Mi);
      }
    }
    return out;
  }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    if (static_cast<std::size_t>(v.size()) != dim()) {
      throw std::invalid_argument("operator applied to a vector of the wrong size");
    }
    Eigen::VectorXd out = apply_kernel(v);
    const auto Mi = static_cast<Eigen::Index>(M);
    for (std::size_t m = 0; m < M; ++m) {
      const Eigen::MatrixXd& B = field[m];
      const auto mi = static_cast<Eigen::Index>(m);
      for (Eigen::Index i = 0; i < B.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < B.cols(); ++k) {
          acc += B(i, k) * v[k * Mi + mi];
        }
        out[i * Mi + mi] += acc;
      }
    }
    return out;
  }

  Eigen::MatrixXd dense() const {
    const auto N = static_cast<Eigen::Index>(dim());
    const auto Mi = static_cast<Eigen::Index>(M);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (std::size_t i = 0; i < n; ++i) {
      if (!blocks[i].degenerate()) {
        const auto off = static_cast<Eigen::Index>(i) * Mi;
        A.block(off, off, Mi, Mi) = blocks[i].rate * (*blocks[i].weighted_kernel);
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
          A(i * Mi + mi, k * Mi + mi) += field[m](i, k);
        }
      }
    }
    return A;
  }
};

inline DiscreteOperator assemble(const SpatialGrid& grid, const std::vector<DispersalBlock>& blocks, const MatrixField& field) {
  if (field.size() != grid.size()) {
    throw std::invalid_argument("assemble: field is not sampled on this grid");
  }
  if (blocks.size() != field.n) {
    throw std::invalid_argument("assemble: expected one dispersal block per component");
  }
  DiscreteOperator op;
  op.n = field.n;
  op.M = grid.size();
  for (const auto& b : blocks) {
    if (b.rate < 0.0) {
      throw std::invalid_argument("assemble: negative dispersal rate");
    }
    if (!b.degenerate() && static_cast<std::size_t>(b.weighted_kernel->rows()) != op.M) {
      throw std::invalid_argument("assemble: dispersal block bound to a different grid");
    }
  }
  for (std::size_t m = 0; m < field.size(); ++m) {
    if (!check_cooperative(field[m])) {
      throw std::invalid_argument("assemble: field is not cooperative at node " + std::to_string(m));
    }
  }
  op.blocks = blocks;
  op.field = field;
  for (std::size_t i = 0; i < op.n; ++i) {
    if (blocks[i].degenerate()) {
      op.degenerate_set.push_back(i);
    }
  }
  double min_diag = 0.0;
  for (std::size_t i = 0; i < op.n; ++i) {
    for (std::size_t m = 0; m < op.M; ++m) {
      min_diag = std::min(min_diag, op.diagonal_entry(i, m));
    }
  }
  op.shift = -min_diag + 1.0;
  return op;
}

inline DiscreteOperator assemble(const SpatialGrid& grid, const std::vector<Dispersal>& dispersal, const MatrixField& field) {
  return assemble(grid, bind_dispersal(dispersal, grid), field);
}

/// Principal eigenpair of a discrete operator. `eigenfunction` is M×n with
/// sup-norm 1; `cw_lower`/`cw_upper` bracket λ by Collatz–Wielandt.
struct EigenResult {
  double lambda = 0.0;
  Eigen::MatrixXd eigenfunction;
  double residual = 0.0;
  long iterations = 0;
  bool strongly_positive = false;
  double cw_lower = 0.0;
  double cw_upper = 0.0;
  bool dense_fallback = false;
};

struct EigenOptions {
  PowerOptions power;
  double positivity_threshold = 1e-14;
  std::size_t dense_limit = 3000;
};

namespace detail {

inline Eigen::MatrixXd as_state(const Eigen::VectorXd& v, std::size_t M, std::size_t n) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(n));
}

inline Eigen::VectorXd as_vector(const Eigen::MatrixXd& state) {
  return Eigen::Map<const Eigen::VectorXd>(state.data(), state.size());
}

}  // namespace detail

inline EigenResult principal_eig(const DiscreteOperator& op, const EigenOptions& options = {}) {
  const auto N = static_cast<Eigen::Index>(op.dim());
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return op.apply(v); };
  PowerResult power = power_iterate(apply, Eigen::VectorXd::Ones(N), op.shift, options.power);
  EigenResult result;
  result.iterations = power.iterations;
  Eigen::VectorXd phi;
  if (power.converged) {
    result.lambda = power.value;
    phi = std::move(power.vector);
  } else {
    if (op.dim() > options.dense_limit) {
      throw NumericalError("power iteration did not converge after " + std::to_string(power.iterations) +
                           " iterations and the operator is too large for the dense route");
    }
    DenseEig dense = dense_max_real_eig(op.dense());
    result.lambda = reconcile_dense(power, dense);
    result.dense_fallback = true;
    phi = std::move(dense.vector);
  }
  phi /= phi.cwiseAbs().maxCoeff();
  const Eigen::VectorXd Aphi = op.apply(phi);
  result.residual = (Aphi - result.lambda * phi).cwiseAbs().maxCoeff();
  const auto [lo, hi] = quotient_bracket(Aphi, phi, options.power.floor);
  result.cw_lower = lo;
  result.cw_upper = hi;
  result.strongly_positive = phi.minCoeff() > options.positivity_threshold;
  result.eigenfunction = detail::as_state(phi, op.M, op.n);
  return result;
}

/// Min and max over all entries of (Aφ)/φ for a strictly positive φ (M×n).
inline std::pair<double, double> collatz_wielandt(const DiscreteOperator& op, const Eigen::MatrixXd& phi) {
  if (static_cast<std::size_t>(phi.rows()) != op.M || static_cast<std::size_t>(phi.cols()) != op.n) {
    throw std::invalid_argument("collatz_wielandt: test function has the wrong shape");
  }
  if (!(phi.minCoeff() > 0.0)) {
    throw std::invalid_argument("collatz_wielandt: test function must be strictly positive");
  }
  const Eigen::VectorXd v = detail::as_vector(phi);
  const Eigen::VectorXd Av = op.apply(v);
  const Eigen::ArrayXd q = Av.array() / v.array();
  return {q.minCoeff(), q.maxCoeff()};
}

struct SpectrumPoint {
  std::size_t node = 0;
  double x = 0.0;
  std::complex<double> value;
};

/// Union over nodes of σ(B(x_m)).
inline std::vector<SpectrumPoint> essential_spectrum(const MatrixField& field, const SpatialGrid& grid) {
  if (field.size() != grid.size()) {
    throw std::invalid_argument("essential_spectrum: field is not sampled on this grid");
  }
  std::vector<SpectrumPoint> cloud;
  cloud.reserve(field.size() * field.n);
  for (std::size_t m = 0; m < field.size(); ++m) {
    if (!check_cooperative(field[m])) {
      throw std::invalid_argument("essential_spectrum: field is not cooperative at node " + std::to_string(m));
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(field[m], false);
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
      cloud.push_back({m, grid.nodes[m], solver.eigenvalues()[k]});
    }
  }
  return cloud;
}

/// Distinct values of a spectrum cloud, merged within `tol`, sorted by real part.
inline std::vector<std::complex<double>> distinct_values(const std::vector<SpectrumPoint>& cloud, double tol = 1e-10) {
  std::vector<std::complex<double>> out;
  for (const auto& p : cloud) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& z) { return std::abs(z - p.value) <= tol; });
    if (!seen) {
      out.push_back(p.value);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) {
    return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
  });
  return out;
}

enum class Existence { exists, not_exists, marginal };

inline const char* to_string(Existence e) {
  switch (e) {
    case Existence::exists: return "exists";
    case Existence::not_exists: return "not_exists";
    case Existence::marginal: return "marginal";
  }
  return "?";
}

inline double default_gap_tol(double eta) { return 1e-8 * std::max(1.0, std::abs(eta)); }

/// Compares λ_p with η = max s(B(x)): a principal eigenvalue above the
/// multiplication bound exists iff λ_p > η.
inline Existence existence_gap_test(double lambda_p, const SpectralBoundField& sb, double gap_tol) {
  if (lambda_p > sb.eta + gap_tol) {
    return Existence::exists;
  }
  if (lambda_p < sb.eta - gap_tol) {
    return Existence::not_exists;
  }
  return Existence::marginal;
}

inline Existence existence_gap_test(double lambda_p, const SpectralBoundField& sb) {
  return existence_gap_test(lambda_p, sb, default_gap_tol(sb.eta));
}

inline Existence existence_gap_test(const DiscreteOperator& op, const SpectralBoundField& sb) {
  return existence_gap_test(principal_eig(op).lambda, sb);
}

/// Node-wise (λ0 I − B(x_m))^{-1}, applied by the resolvent test.
struct NodeResolvent {
  std::vector<Eigen::MatrixXd> inverses;
};

inline NodeResolvent node_resolvent(const MatrixField& field, double lambda0) {
  NodeResolvent r;
  r.inverses.reserve(field.size());
  const auto n = static_cast<Eigen::Index>(field.n);
  for (std::size_t m = 0; m < field.size(); ++m) {
    r.inverses.push_back((lambda0 * Eigen::MatrixXd::Identity(n, n) - field[m]).inverse());
  }
  return r;
}

/// Spectral radius of 𝒥 (λ0 I − B)^{-1}, where 𝒥 is the kernel part of the
/// operator. A value above one certifies λ_p exists and exceeds λ0 ≥ η.
inline double resolvent_radius_test(const DiscreteOperator& op, const SpectralBoundField& sb, double lambda0) {
  if (!(lambda0 > sb.eta)) {
    throw std::invalid_argument("resolvent_radius_test: lambda0 must exceed eta = " + std::to_string(sb.eta));
  }
  const NodeResolvent res = node_resolvent(op.field, lambda0);
  const auto Mi = static_cast<Eigen::Index>(op.M);
  const auto ni = static_cast<Eigen::Index>(op.n);
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd w(v.size());
    Eigen::VectorXd local(ni);
    for (Eigen::Index m = 0; m < Mi; ++m) {
      for (Eigen::Index k = 0; k < ni; ++k) {
        local[k] = v[k * Mi + m];
      }
      const Eigen::VectorXd out = res.inverses[static_cast<std::size_t>(m)] * local;
      for (Eigen::Index k = 0; k < ni; ++k) {
        w[k * Mi + m] = out[k];
      }
    }
    return op.apply_kernel(w);
  };
  PowerResult power = power_iterate(apply, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op.dim())), 1.0);
  if (power.converged) {
    return power.value;
  }
  const auto N = static_cast<Eigen::Index>(op.dim());
  Eigen::MatrixXd T(N, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    T.col(c) = apply(Eigen::VectorXd::Unit(N, c));
  }
  return reconcile_dense(power, dense_max_real_eig(T, false));
}

struct SqueezeReport {
  std::vector<double> schedule;
  std::vector<double> lower_eigs;
  std::vector<double> upper_eigs;
  std::vector<long> iters_lower;
  std::vector<long> iters_upper;
  double eta = 0.0;
  double interval_low = 0.0;
  double interval_high = 0.0;
  double lambda_estimate = 0.0;
  std::size_t irreducible_nodes = 0;
  std::string warning;

  double width() const noexcept { return interval_high - interval_low; }
  bool lower_monotone() const {
    for (std::size_t k = 1; k < lower_eigs.size(); ++k) {
      if (lower_eigs[k] < lower_eigs[k - 1]) {
        return false;
      }
    }
    return true;
  }
  bool upper_monotone() const {
    for (std::size_t k = 1; k < upper_eigs.size(); ++k) {
      if (upper_eigs[k] > upper_eigs[k - 1]) {
        return false;
      }
    }
    return true;
  }
};

struct SqueezeOptions {
  EigenOptions eig;
  unsigned threads = 1;
};

/// Principal eigenvalues of both control operators along a decreasing ε
/// schedule. The certified interval belongs to the last (smallest) ε.
inline SqueezeReport squeeze(const MatrixField& field, const SpatialGrid& grid, const std::vector<DispersalBlock>& blocks,
                             const std::vector<double>& schedule, const SqueezeOptions& options = {}) {
  if (schedule.empty()) {
    throw std::invalid_argument("squeeze: empty schedule");
  }
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0) || (k > 0 && !(schedule[k] < schedule[k - 1]))) {
      throw std::invalid_argument("squeeze: schedule must be positive and strictly decreasing");
    }
  }
  const SpectralBoundField sb = sample_field(field, grid);
  SqueezeReport report;
  report.schedule = schedule;
  report.eta = sb.eta;
  report.irreducible_nodes = sb.irreducible_nodes;
  report.warning = sb.warning;
  const std::size_t K = schedule.size();
  report.lower_eigs.assign(K, 0.0);
  report.upper_eigs.assign(K, 0.0);
  report.iters_lower.assign(K, 0);
  report.iters_upper.assign(K, 0);

  // Jobs 2k and 2k+1 are the lower and upper solves at ε_k.
  auto run = [&](std::size_t job) {
    const std::size_t k = job / 2;
    const bool upper = job % 2 == 1;
    const MatrixField control = upper ? upper_control(field, sb, schedule[k]) : lower_control(field, sb, schedule[k]);
    const EigenResult r = principal_eig(assemble(grid, blocks, control), options.eig);
    (upper ? report.upper_eigs : report.lower_eigs)[k] = r.lambda;
    (upper ? report.iters_upper : report.iters_lower)[k] = r.iterations;
  };

  const std::size_t jobs = 2 * K;
  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(jobs)));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) {
      run(j);
    }
  } else {
    std::mutex lock;
    std::size_t next = 0;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::size_t j = 0;
          {
            std::lock_guard guard(lock);
            if (next >= jobs || failure) {
              return;
            }
            j = next++;
          }
          try {
            run(j);
          } catch (...) {
            std::lock_guard guard(lock);
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
    if (failure) {
      std::rethrow_exception(failure);
    }
  }
  report.interval_low = report.lower_eigs.back();
  report.interval_high = report.upper_eigs.back();
  report.lambda_estimate = 0.5 * (report.interval_low + report.interval_high);
  return report;
}

inline SqueezeReport squeeze(const MatrixField& field, const SpatialGrid& grid, const std::vector<Dispersal>& dispersal,
                             const std::vector<double>& schedule, const SqueezeOptions& options = {}) {
  return squeeze(field, grid, bind_dispersal(dispersal, grid), schedule, options);
}

inline void write_squeeze_csv(std::ostream& out, const SqueezeReport& report) {
  out << "eps,lambda_lower,lambda_upper,gap,iters_lower,iters_upper\n";
  out.precision(17);
  for (std::size_t k = 0; k < report.schedule.size(); ++k) {
    out << report.schedule[k] << ',' << report.lower_eigs[k] << ',' << report.upper_eigs[k] << ','
        << (report.upper_eigs[k] - report.lower_eigs[k]) << ',' << report.iters_lower[k] << ',' << report.iters_upper[k]
        << '\n';
  }
}

}  // namespace nlgpe
