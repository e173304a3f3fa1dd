#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "nlgpe/control.hpp"
#include "nlgpe/error.hpp"
#include "nlgpe/model.hpp"
#include "nlgpe/spectral.hpp"

namespace nlgpe {

struct OrderedPair {
  State lower;
  State upper;
};

struct EquilibriumResult {
  State U;
  State lower;
  State upper;
  double residual = 0.0;
  long iterations_lower = 0;
  long iterations_upper = 0;
  double bracket_gap = 0.0;
  double kappa = 0.0;
  /// Times κ̂ was doubled after a broken bracket.
  int kappa_doublings = 0;
};

struct MonotoneOptions {
  long max_iter = 200000;
  double tol = 1e-10;
  /// Tolerance on the sign of the residual when validating the seeds.
  double seed_tol = 1e-12;
};

/// 1.1 × (max ‖∂f‖ over the order interval's ends + d(1 + colmass)).
inline double monotone_kappa(const ModelSpec& model, const OrderedPair& pair) {
  double d = 0.0;
  for (const auto& b : model.blocks) {
    if (!b.degenerate()) {
      d = std::max(d, b.boundary.maxCoeff() + b.rate * b.column_mass.maxCoeff());
      d = std::max(d, b.rate * (1.0 + b.column_mass.maxCoeff()));
    }
  }
  const double lip = reaction_lipschitz(model, {pair.lower, pair.upper, 0.5 * (pair.lower + pair.upper)});
  return 1.1 * std::max(lip + d, 1e-12);
}

inline void validate_pair(const ModelSpec& model, const OrderedPair& pair, double tol) {
  check_state(model, pair.lower);
  check_state(model, pair.upper);
  if ((pair.lower.array() > pair.upper.array()).any()) {
    throw std::invalid_argument("ordered pair: lower exceeds upper somewhere");
  }
  if (pair.lower.minCoeff() < 0.0) {
    throw std::invalid_argument("ordered pair: lower solution must be nonnegative");
  }
  const double scale = std::max(1.0, pair.upper.cwiseAbs().maxCoeff());
  if (residual(model, pair.lower).minCoeff() < -tol * scale) {
    throw std::invalid_argument("ordered pair: lower end is not a lower solution");
  }
  if (residual(model, pair.upper).maxCoeff() > tol * scale) {
    throw std::invalid_argument("ordered pair: upper end is not an upper solution");
  }
}

/// U ← U + R(U)/κ̂ from both ends of an ordered pair of lower and upper
/// solutions. The map is order preserving for κ̂ above the one-sided
/// Lipschitz constant, so the lower iterates increase and the upper
/// iterates decrease towards the extremal equilibria in the bracket.
inline EquilibriumResult monotone_iterate(const ModelSpec& model, const OrderedPair& pair, const MonotoneOptions& options = {}) {
  validate_pair(model, pair, options.seed_tol);
  EquilibriumResult result;
  result.kappa = monotone_kappa(model, pair);
  State lo = pair.lower;
  State up = pair.upper;
  State r_lo = residual(model, lo);
  State r_up = residual(model, up);
  const double slack = 1e-12 * std::max(1.0, up.cwiseAbs().maxCoeff());
  bool lo_done = false, up_done = false;
  double prev_gap = std::numeric_limits<double>::infinity();
  for (long it = 0; it < options.max_iter; ++it) {
    const double gap = (up - lo).cwiseAbs().maxCoeff();
    const double res = std::max(r_lo.cwiseAbs().maxCoeff(), r_up.cwiseAbs().maxCoeff());
    if (!lo_done && r_lo.cwiseAbs().maxCoeff() < options.tol) {
      lo_done = true;
      result.iterations_lower = it;
    }
    if (!up_done && r_up.cwiseAbs().maxCoeff() < options.tol) {
      up_done = true;
      result.iterations_upper = it;
    }
    if (gap < options.tol && res < options.tol) {
      if (!lo_done) result.iterations_lower = it;
      if (!up_done) result.iterations_upper = it;
      result.lower = lo;
      result.upper = up;
      result.U = 0.5 * (lo + up);
      result.bracket_gap = gap;
      result.residual = residual(model, result.U).cwiseAbs().maxCoeff();
      return result;
    }
    if (lo_done && up_done && gap >= options.tol && gap > 0.999 * prev_gap) {
      // Both ends are stalled equilibria but distinct: the bracket holds more than one.
      result.iterations_lower = result.iterations_lower ? result.iterations_lower : it;
      result.lower = lo;
      result.upper = up;
      result.U = 0.5 * (lo + up);
      result.bracket_gap = gap;
      result.residual = residual(model, result.U).cwiseAbs().maxCoeff();
      return result;
    }
    State lo_next = lo + r_lo / result.kappa;
    State up_next = up + r_up / result.kappa;
    State r_lo_next = residual(model, lo_next);
    State r_up_next = residual(model, up_next);
    const bool broken = (r_lo_next.array() < -slack).any() || (r_up_next.array() > slack).any() ||
                        (lo_next.array() > up_next.array() + slack).any();
    if (broken) {
      if (++result.kappa_doublings > 40) {
        throw NumericalError("monotone iteration: bracket order keeps breaking");
      }
      result.kappa *= 2.0;
      continue;
    }
    prev_gap = gap;
    lo = std::move(lo_next);
    up = std::move(up_next);
    r_lo = std::move(r_lo_next);
    r_up = std::move(r_up_next);
  }
  throw NumericalError("monotone iteration did not converge in " + std::to_string(options.max_iter) + " iterations");
}

enum class Dichotomy { all_zero, all_positive, violation };

inline const char* to_string(Dichotomy d) {
  switch (d) {
    case Dichotomy::all_zero: return "all_zero";
    case Dichotomy::all_positive: return "all_positive";
    case Dichotomy::violation: return "violation";
  }
  return "?";
}

struct DichotomyReport {
  Dichotomy verdict = Dichotomy::all_zero;
  std::vector<std::size_t> zero_components;
  std::vector<std::size_t> positive_components;
  std::vector<std::size_t> mixed_components;
  double min_value = 0.0;
};

/// Each component must be uniformly positive or identically zero, and a
/// coupled system cannot mix the two.
inline DichotomyReport strong_max_principle_check(const State& U, double pos_tol = 1e-10) {
  DichotomyReport r;
  r.min_value = U.minCoeff();
  for (Eigen::Index i = 0; i < U.cols(); ++i) {
    const auto col = U.col(i);
    if (col.maxCoeff() < pos_tol) {
      r.zero_components.push_back(static_cast<std::size_t>(i));
    } else if (col.minCoeff() > pos_tol) {
      r.positive_components.push_back(static_cast<std::size_t>(i));
    } else {
      r.mixed_components.push_back(static_cast<std::size_t>(i));
    }
  }
  if (r.mixed_components.empty() && r.positive_components.empty()) {
    r.verdict = Dichotomy::all_zero;
  } else if (r.mixed_components.empty() && r.zero_components.empty()) {
    r.verdict = Dichotomy::all_positive;
  } else {
    r.verdict = Dichotomy::violation;
  }
  return r;
}

struct SubhomSample {
  std::size_t node = 0;
  std::vector<double> u;
  double delta = 0.5;
};

struct SubhomReport {
  std::size_t samples = 0;
  std::size_t strong = 0;
  std::size_t strict = 0;
  std::size_t sub = 0;
  std::size_t violated = 0;
  Subhomogeneity empirical = Subhomogeneity::none;
  bool all_strict = false;
  bool all_strong = false;
};

/// Classifies f(x, δu) − δ f(x, u) per sample: strong when every component
/// is positive, strict when all are ≥ 0 and one is positive, sub when all
/// vanish, violated when one is negative.
inline SubhomReport subhomogeneity_check(const ModelSpec& model, const std::vector<SubhomSample>& samples) {
  SubhomReport rep;
  std::vector<double> fu(model.n), fdu(model.n), du(model.n);
  for (const auto& s : samples) {
    if (s.u.size() != model.n) {
      throw std::invalid_argument("subhomogeneity sample has the wrong dimension");
    }
    for (std::size_t i = 0; i < model.n; ++i) {
      if (!(s.u[i] > 0.0)) {
        throw std::invalid_argument("subhomogeneity samples must be strictly positive");
      }
      du[i] = s.delta * s.u[i];
    }
    model.f(s.node, s.u, fu);
    model.f(s.node, du, fdu);
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < model.n; ++i) {
      const double diff = fdu[i] - s.delta * fu[i];
      const double tol = 1e-12 * std::max({1.0, std::abs(fdu[i]), std::abs(s.delta * fu[i])});
      if (diff > tol) {
        ++pos;
      } else if (diff < -tol) {
        ++neg;
      }
    }
    ++rep.samples;
    if (neg > 0) {
      ++rep.violated;
    } else if (pos == model.n) {
      ++rep.strong;
    } else if (pos > 0) {
      ++rep.strict;
    } else {
      ++rep.sub;
    }
  }
  rep.all_strong = rep.samples > 0 && rep.strong == rep.samples;
  rep.all_strict = rep.samples > 0 && rep.strong + rep.strict == rep.samples;
  if (rep.violated > 0) {
    rep.empirical = Subhomogeneity::none;
  } else if (rep.all_strong) {
    rep.empirical = Subhomogeneity::strong;
  } else if (rep.all_strict) {
    rep.empirical = Subhomogeneity::strict;
  } else {
    rep.empirical = Subhomogeneity::sub;
  }
  return rep;
}

/// Random positive samples with u_i uniform in (0, scale_i(x)] and δ in (0, 1).
inline std::vector<SubhomSample> random_subhom_samples(const ModelSpec& model, const State& scale, std::size_t count,
                                                       std::uint64_t seed) {
  check_state(model, scale);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> node(0, model.size() - 1);
  std::vector<SubhomSample> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    SubhomSample s;
    s.node = node(rng);
    s.u.resize(model.n);
    for (std::size_t i = 0; i < model.n; ++i) {
      s.u[i] = (1.0 - unit(rng)) * scale(static_cast<Eigen::Index>(s.node), static_cast<Eigen::Index>(i));
    }
    s.delta = std::clamp(unit(rng), 1e-6, 1.0 - 1e-6);
    out.push_back(std::move(s));
  }
  return out;
}

struct UniquenessReport {
  std::vector<State> equilibria;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> rejections;
  double spread = 0.0;
  bool pass = false;
};

/// Runs monotone iteration from every seed; seeds that are not valid
/// ordered pairs are recorded as rejected rather than raised.
inline UniquenessReport uniqueness_probe(const ModelSpec& model, const std::vector<OrderedPair>& seeds,
                                         const MonotoneOptions& options = {}) {
  UniquenessReport rep;
  for (const auto& seed : seeds) {
    try {
      validate_pair(model, seed, options.seed_tol);
    } catch (const std::invalid_argument& e) {
      ++rep.rejected;
      rep.rejections.emplace_back(e.what());
      continue;
    }
    rep.equilibria.push_back(monotone_iterate(model, seed, options).U);
    ++rep.accepted;
  }
  for (std::size_t a = 0; a < rep.equilibria.size(); ++a) {
    for (std::size_t b = a + 1; b < rep.equilibria.size(); ++b) {
      rep.spread = std::max(rep.spread, (rep.equilibria[a] - rep.equilibria[b]).cwiseAbs().maxCoeff());
    }
  }
  rep.pass = rep.accepted > 0 && rep.spread < 10.0 * options.tol;
  return rep;
}

enum class RootCount { unique_root, multiple_roots, no_root };

inline const char* to_string(RootCount r) {
  switch (r) {
    case RootCount::unique_root: return "unique_root";
    case RootCount::multiple_roots: return "multiple_roots";
    case RootCount::no_root: return "no_root";
  }
  return "?";
}

struct ContinuityReport {
  RootCount verdict = RootCount::no_root;
  std::vector<std::vector<double>> roots;
  std::vector<double> frozen;
  std::size_t converged_starts = 0;
};

/// Freezes h_i = d_i (K_i U_i)(x_m) and counts the positive roots of
/// h − d* v + f(x_m, v) = 0 found by damped Newton from random positive starts.
inline ContinuityReport pointwise_continuity_probe(const ModelSpec& model, const State& U, std::size_t m,
                                                   std::size_t starts = 24, std::uint64_t seed = 1) {
  check_state(model, U);
  if (m >= model.size()) {
    throw std::invalid_argument("pointwise_continuity_probe: node out of range");
  }
  const std::size_t n = model.n;
  const auto mi = static_cast<Eigen::Index>(m);
  ContinuityReport rep;
  rep.frozen.resize(n);
  Eigen::VectorXd dstar(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = model.blocks[i];
    const auto ii = static_cast<Eigen::Index>(i);
    rep.frozen[i] = b.degenerate() ? 0.0 : b.rate * b.weighted_kernel->row(mi).dot(U.col(ii));
    dstar[ii] = b.boundary[mi];
  }
  const double span = std::max(1.0, 2.0 * U.cwiseAbs().maxCoeff());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> v(n), fv(n);
  auto G = [&](const Eigen::VectorXd& x) {
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = x[static_cast<Eigen::Index>(i)];
    }
    model.f(m, v, fv);
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      g[ii] = rep.frozen[i] - dstar[ii] * x[ii] + fv[i];
    }
    return g;
  };
  for (std::size_t s = 0; s < starts; ++s) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      x[static_cast<Eigen::Index>(i)] = span * (1.0 - unit(rng));
    }
    Eigen::VectorXd g = G(x);
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
      const double gn = g.cwiseAbs().maxCoeff();
      if (gn < 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
        ok = true;
        break;
      }
      std::vector<double> xv(x.data(), x.data() + x.size());
      Eigen::MatrixXd J = node_jacobian(model, m, xv);
      J.diagonal() -= dstar;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      if (!lu.isInvertible()) {
        break;
      }
      const Eigen::VectorXd step = lu.solve(g);
      double t = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        const Eigen::VectorXd trial = x - t * step;
        const Eigen::VectorXd gt = G(trial);
        if (gt.allFinite() && gt.cwiseAbs().maxCoeff() < (1.0 - 1e-4 * t) * gn) {
          x = trial;
          g = gt;
          improved = true;
          break;
        }
      }
      if (!improved) {
        ok = g.cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, x.cwiseAbs().maxCoeff());
        break;
      }
    }
    if (!ok) {
      continue;
    }
    ++rep.converged_starts;
    if (x.minCoeff() <= 1e-8) {
      continue;
    }
    std::vector<double> root(x.data(), x.data() + x.size());
    const bool seen = std::any_of(rep.roots.begin(), rep.roots.end(), [&](const std::vector<double>& r) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d = std::max(d, std::abs(r[i] - root[i]));
      }
      return d < 1e-6 * std::max(1.0, span);
    });
    if (!seen) {
      rep.roots.push_back(std::move(root));
    }
  }
  if (rep.converged_starts == 0) {
    throw NumericalError("pointwise_continuity_probe: Newton failed from every start at node " + std::to_string(m));
  }
  rep.verdict = rep.roots.empty() ? RootCount::no_root
                : rep.roots.size() == 1 ? RootCount::unique_root
                                        : RootCount::multiple_roots;
  return rep;
}

/// ρ·φ with ρ halved (at most `max_halvings` times) until the equilibrium
/// residual is componentwise nonnegative.
inline std::optional<State> canonical_lower_solution(const ModelSpec& model, const State& phi, double rho0 = 1.0,
                                                     int max_halvings = 60) {
  check_state(model, phi);
  if (phi.minCoeff() < 0.0) {
    throw std::invalid_argument("canonical_lower_solution: eigenfunction must be nonnegative");
  }
  double rho = rho0;
  for (int k = 0; k <= max_halvings; ++k, rho *= 0.5) {
    const State candidate = rho * phi;
    const State r = residual(model, candidate);
    if (r.minCoeff() >= 0.0) {
      return candidate;
    }
  }
  return std::nullopt;
}

/// Principal eigenfunction of the lower control, at level ε, of the model's
/// linearization at zero, together with its eigenvalue.
inline std::pair<double, State> lower_control_eigenfunction(const ModelSpec& model, double eps) {
  const MatrixField B = linearize_at_zero(model);
  const SpectralBoundField sb = sample_field(B, model.grid);
  const DiscreteOperator op = assemble(model.grid, model.blocks, lower_control(B, sb, eps));
  EigenResult r = principal_eig(op);
  return {r.lambda, r.eigenfunction.cwiseMax(0.0)};
}

inline void write_equilibrium_csv(std::ostream& out, const State& U, const std::vector<double>& nodes) {
  out << "component,node_index,x,value\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < U.cols(); ++i) {
    for (Eigen::Index m = 0; m < U.rows(); ++m) {
      out << i << ',' << m << ',' << nodes[static_cast<std::size_t>(m)] << ',' << U(m, i) << '\n';
    }
  }
}

inline void write_dichotomy(std::ostream& out, const DichotomyReport& r, const std::vector<std::string>& names) {
  auto list = [&](const std::vector<std::size_t>& idx) {
    std::string s;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      s += (k ? "," : "") + (idx[k] < names.size() ? names[idx[k]] : std::to_string(idx[k]));
    }
    return s.empty() ? std::string("-") : s;
  };
  out << "max_principle = " << to_string(r.verdict) << '\n';
  out << "zero_components = " << list(r.zero_components) << '\n';
  out << "positive_components = " << list(r.positive_components) << '\n';
  out << "mixed_components = " << list(r.mixed_components) << '\n';
}

}  // namespace nlgpe
