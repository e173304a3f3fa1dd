#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "nlgpe/equilibrium.hpp"
#include "nlgpe/model.hpp"

namespace nlgpe {

/// Node samples of a coefficient function.
using Coefficient = Eigen::VectorXd;

template <class Fn>
Coefficient coefficient(const SpatialGrid& grid, Fn&& fn) {
  return sample_nodes(grid, std::forward<Fn>(fn));
}

inline Coefficient coefficient(const SpatialGrid& grid, double value) {
  return Coefficient::Constant(static_cast<Eigen::Index>(grid.size()), value);
}

/// A scalar nonlinearity g(x, z) with its z-derivative. When no derivative
/// is supplied a Richardson-extrapolated central difference is used.
struct ScalarNonlinearity {
  std::function<double(double, double)> value;
  std::function<double(double, double)> derivative;

  double operator()(double x, double z) const { return value(x, z); }

  double dz(double x, double z) const {
    if (derivative) {
      return derivative(x, z);
    }
    const double h = 1e-3 * std::max(1.0, std::abs(z));
    auto central = [&](double s) { return (value(x, z + s) - value(x, z - s)) / (2.0 * s); };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
};

namespace detail {

inline void check_size(const Coefficient& c, const SpatialGrid& grid, const char* name) {
  if (static_cast<std::size_t>(c.size()) != grid.size()) {
    throw std::invalid_argument(std::string(name) + " is not sampled on the model grid");
  }
}

inline double at(const Coefficient& c, std::size_t m) { return c[static_cast<Eigen::Index>(m)]; }

/// Doubles `base` until it is an upper solution of `model` (residual ≤ 0).
inline State grow_to_upper(const ModelSpec& model, State base, int max_doublings = 60) {
  for (int k = 0; k <= max_doublings; ++k) {
    if (residual(model, base).maxCoeff() <= 0.0) {
      return base;
    }
    base *= 2.0;
  }
  throw NumericalError(model.name + ": no constant upper solution found");
}

}  // namespace detail

/// u' = d∫J u − d* u + u (a(x) − c(x) u). Without `c` the crowding rate is 1.
inline ModelSpec logistic(const SpatialGrid& grid, const Coefficient& a, const Dispersal& dispersal,
                          std::optional<Coefficient> c = std::nullopt) {
  detail::check_size(a, grid, "logistic growth rate");
  const Coefficient crowd = c ? *c : coefficient(grid, 1.0);
  detail::check_size(crowd, grid, "logistic crowding rate");
  if (!(crowd.minCoeff() > 0.0)) {
    throw std::invalid_argument("logistic crowding rate must be positive");
  }
  ModelSpec model;
  model.name = "logistic";
  model.n = 1;
  model.grid = grid;
  model.dispersal = {dispersal};
  model.component_names = {"u"};
  model.subhomogeneity = Subhomogeneity::strict;
  model.f = [a, crowd](std::size_t m, std::span<const double> u, std::span<double> out) {
    out[0] = u[0] * (a[static_cast<Eigen::Index>(m)] - crowd[static_cast<Eigen::Index>(m)] * u[0]);
  };
  model.jac = [a, crowd](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
    J(0, 0) = a[static_cast<Eigen::Index>(m)] - 2.0 * crowd[static_cast<Eigen::Index>(m)] * u[0];
  };
  const double cap = std::max(1.5 * (a.array() / crowd.array()).maxCoeff(), 1e-3);
  const auto M = static_cast<Eigen::Index>(grid.size());
  model.canonical_upper = [M, cap] { return State::Constant(M, 1, cap); };
  finalize(model);
  return model;
}

/// u' = d∫J u − d* u + b(x) u.
inline ModelSpec linear_scalar(const SpatialGrid& grid, const Coefficient& b, const Dispersal& dispersal) {
  detail::check_size(b, grid, "linear coefficient");
  ModelSpec model;
  model.name = "linear";
  model.n = 1;
  model.grid = grid;
  model.dispersal = {dispersal};
  model.component_names = {"u"};
  model.subhomogeneity = Subhomogeneity::sub;
  model.f = [b](std::size_t m, std::span<const double> u, std::span<double> out) { out[0] = b[static_cast<Eigen::Index>(m)] * u[0]; };
  model.jac = [b](std::size_t m, std::span<const double>, Eigen::Ref<Eigen::MatrixXd> J) { J(0, 0) = b[static_cast<Eigen::Index>(m)]; };
  const auto M = static_cast<Eigen::Index>(grid.size());
  model.canonical_upper = [M] { return State::Ones(M, 1); };
  finalize(model);
  return model;
}

/// u' = dispersal + A(x) u for a cooperative reaction field A.
inline ModelSpec linear_system(const SpatialGrid& grid, const MatrixField& A, const std::vector<Dispersal>& dispersal) {
  if (A.size() != grid.size()) {
    throw std::invalid_argument("linear_system: field is not sampled on the grid");
  }
  for (std::size_t m = 0; m < A.size(); ++m) {
    if (!check_cooperative(A[m])) {
      throw std::invalid_argument("linear_system: field is not cooperative at node " + std::to_string(m));
    }
  }
  ModelSpec model;
  model.name = "linear_system";
  model.n = A.n;
  model.grid = grid;
  model.dispersal = dispersal;
  model.subhomogeneity = Subhomogeneity::sub;
  model.f = [A](std::size_t m, std::span<const double> u, std::span<double> out) {
    const Eigen::Map<const Eigen::VectorXd> v(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = A[m] * v;
  };
  model.jac = [A](std::size_t m, std::span<const double>, Eigen::Ref<Eigen::MatrixXd> J) { J = A[m]; };
  const auto M = static_cast<Eigen::Index>(grid.size());
  const auto n = static_cast<Eigen::Index>(A.n);
  model.canonical_upper = [M, n] { return State::Ones(M, n); };
  finalize(model);
  return model;
}

// ---------------------------------------------------------------------------
// West Nile virus: hosts (birds) H_u, H_i and vectors (mosquitoes) V_u, V_i.

struct WnvParams {
  Coefficient a1, a2, mu1, mu2, c1, c2, l1, l2;
  Dispersal host;
  Dispersal vector;

  void validate(const SpatialGrid& grid) const {
    const std::pair<const Coefficient*, const char*> all[] = {{&a1, "a1"}, {&a2, "a2"}, {&mu1, "mu1"}, {&mu2, "mu2"},
                                                              {&c1, "c1"}, {&c2, "c2"}, {&l1, "l1"}, {&l2, "l2"}};
    for (const auto& [c, name] : all) {
      detail::check_size(*c, grid, name);
    }
    if (!(a1.minCoeff() > 0.0) || !(a2.minCoeff() > 0.0) || !(c1.minCoeff() > 0.0) || !(c2.minCoeff() > 0.0)) {
      throw std::invalid_argument("wnv: a_k and c_k must be positive");
    }
    if (mu1.minCoeff() < 0.0 || mu2.minCoeff() < 0.0 || l1.minCoeff() < 0.0 || l2.minCoeff() < 0.0) {
      throw std::invalid_argument("wnv: mu_k and l_k must be nonnegative");
    }
    if (!((l1.array() > 0.0) && (l2.array() > 0.0)).any()) {
      throw std::invalid_argument("wnv: l1 and l2 must be positive at some common node");
    }
  }

  /// Constant-coefficient fixture.
  static WnvParams constant(const SpatialGrid& grid, double a1, double a2, double mu1, double mu2, double c1, double c2,
                            double l1, double l2, Dispersal host, Dispersal vector) {
    return {coefficient(grid, a1), coefficient(grid, a2), coefficient(grid, mu1), coefficient(grid, mu2),
            coefficient(grid, c1), coefficient(grid, c2), coefficient(grid, l1), coefficient(grid, l2),
            std::move(host),       std::move(vector)};
  }
};

/// Full four-component model, components (H_u, H_i, V_u, V_i). Not
/// cooperative; the infected pair is the monitored one.
inline ModelSpec wnv_full(const SpatialGrid& grid, const WnvParams& p) {
  p.validate(grid);
  ModelSpec model;
  model.name = "wnv_full";
  model.n = 4;
  model.grid = grid;
  model.dispersal = {p.host, p.host, p.vector, p.vector};
  model.component_names = {"H_u", "H_i", "V_u", "V_i"};
  model.cooperative = false;
  model.subhomogeneity = Subhomogeneity::none;
  model.monitored = {1, 3};
  model.f = [p](std::size_t m, std::span<const double> u, std::span<double> out) {
    using detail::at;
    const double Hu = u[0], Hi = u[1], Vu = u[2], Vi = u[3];
    const double H = Hu + Hi, V = Vu + Vi;
    out[0] = at(p.a1, m) * H - at(p.mu1, m) * Hu - at(p.c1, m) * H * Hu - at(p.l1, m) * Hu * Vi;
    out[1] = at(p.l1, m) * Hu * Vi - at(p.mu1, m) * Hi - at(p.c1, m) * H * Hi;
    out[2] = at(p.a2, m) * V - at(p.mu2, m) * Vu - at(p.c2, m) * V * Vu - at(p.l2, m) * Hi * Vu;
    out[3] = at(p.l2, m) * Hi * Vu - at(p.mu2, m) * Vi - at(p.c2, m) * V * Vi;
  };
  model.jac = [p](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
    using detail::at;
    const double Hu = u[0], Hi = u[1], Vu = u[2], Vi = u[3];
    const double H = Hu + Hi, V = Vu + Vi;
    const double a1 = at(p.a1, m), mu1 = at(p.mu1, m), c1 = at(p.c1, m), l1 = at(p.l1, m);
    const double a2 = at(p.a2, m), mu2 = at(p.mu2, m), c2 = at(p.c2, m), l2 = at(p.l2, m);
    J.setZero();
    J(0, 0) = a1 - mu1 - c1 * H - c1 * Hu - l1 * Vi;
    J(0, 1) = a1 - c1 * Hu;
    J(0, 3) = -l1 * Hu;
    J(1, 0) = l1 * Vi - c1 * Hi;
    J(1, 1) = -mu1 - c1 * H - c1 * Hi;
    J(1, 3) = l1 * Hu;
    J(2, 1) = -l2 * Vu;
    J(2, 2) = a2 - mu2 - c2 * V - c2 * Vu - l2 * Hi;
    J(2, 3) = a2 - c2 * Vu;
    J(3, 1) = l2 * Vu;
    J(3, 2) = l2 * Hi - c2 * Vi;
    J(3, 3) = -mu2 - c2 * V - c2 * Vi;
  };
  const double Hcap = std::max(1.5 * ((p.a1 - p.mu1).array() / p.c1.array()).maxCoeff(), 1.0);
  const double Vcap = std::max(1.5 * ((p.a2 - p.mu2).array() / p.c2.array()).maxCoeff(), 1.0);
  const auto M = static_cast<Eigen::Index>(grid.size());
  model.canonical_upper = [M, Hcap, Vcap] {
    State s(M, 4);
    s.col(0).setConstant(Hcap);
    s.col(1).setConstant(Hcap);
    s.col(2).setConstant(Vcap);
    s.col(3).setConstant(Vcap);
    return s;
  };
  finalize(model);
  return model;
}

/// Total host (k = 1) or vector (k = 2) population:
/// U' = d_k∫J_k U − d*_k U + (a_k − μ_k) U − c_k U².
inline ModelSpec wnv_total(const SpatialGrid& grid, const WnvParams& p, int k) {
  p.validate(grid);
  if (k != 1 && k != 2) {
    throw std::invalid_argument("wnv_total: k must be 1 (hosts) or 2 (vectors)");
  }
  ModelSpec model = k == 1 ? logistic(grid, p.a1 - p.mu1, p.host, p.c1) : logistic(grid, p.a2 - p.mu2, p.vector, p.c2);
  model.name = k == 1 ? "wnv_host_total" : "wnv_vector_total";
  model.component_names = {k == 1 ? "H" : "V"};
  return model;
}

/// Positive equilibrium of a logistic-type scalar model by monotone
/// iteration from ρ·φ^ε up to the canonical upper solution.
inline State solve_logistic_equilibrium(const ModelSpec& model, double eps = 1e-3, const MonotoneOptions& options = {}) {
  const auto [lambda, phi] = lower_control_eigenfunction(model, eps);
  if (!(lambda > 0.0)) {
    throw NumericalError(model.name + ": lower-control eigenvalue " + std::to_string(lambda) +
                         " is not positive, no positive equilibrium to compute");
  }
  const auto lower = canonical_lower_solution(model, phi);
  if (!lower) {
    throw NumericalError(model.name + ": no canonical lower solution");
  }
  const State upper = detail::grow_to_upper(model, model.canonical_upper());
  return monotone_iterate(model, {*lower, upper}, options).U;
}

/// φ^ε_k: sup-normalized principal eigenfunction of the lower control of
/// the scalar operator d_k∫J_k + g_k, g_k = a_k − d*_k − μ_k.
inline std::pair<Coefficient, Coefficient> wnv_perturbation_direction(const SpatialGrid& grid, const WnvParams& p, double eps) {
  auto direction = [&](const Dispersal& disp, const Coefficient& a, const Coefficient& mu) {
    ModelSpec scalar = linear_scalar(grid, a - mu, disp);
    return Coefficient(lower_control_eigenfunction(scalar, eps).second.col(0));
  };
  return {direction(p.host, p.a1, p.mu1), direction(p.vector, p.a2, p.mu2)};
}

/// Perturbation of the reduced infected system by σ along (φ1, φ2).
struct WnvPerturbation {
  double sigma = 0.0;
  Coefficient phi1;
  Coefficient phi2;
};

struct WnvReduction {
  ModelSpec plain;
  ModelSpec truncated;
  MatrixField linearization;
  Coefficient H;
  Coefficient V;
};

/// Reduced infected system for (U, Z) = (H_i, V_i) given the total
/// equilibria H, V (optionally perturbed by σφ):
///   f1 = −(μ1 + c1 (H − σφ1)) U + ℓ1 (H + σφ1 − U) Z,
///   f2 = −(μ2 + c2 (V − σφ2)) Z + ℓ2 (V + σφ2 − Z) U,
/// and the variant with the brackets replaced by their positive parts.
inline WnvReduction wnv_reduce(const SpatialGrid& grid, const WnvParams& p, const Coefficient& H, const Coefficient& V,
                               const std::optional<WnvPerturbation>& perturb = std::nullopt, double eq_tol = 1e-6) {
  p.validate(grid);
  detail::check_size(H, grid, "H");
  detail::check_size(V, grid, "V");
  if (!(H.minCoeff() > 0.0) || !(V.minCoeff() > 0.0)) {
    throw std::invalid_argument("wnv_reduce: H and V must be strictly positive");
  }
  {
    const ModelSpec host = wnv_total(grid, p, 1);
    const ModelSpec vec = wnv_total(grid, p, 2);
    const double rh = residual(host, State(H)).cwiseAbs().maxCoeff();
    const double rv = residual(vec, State(V)).cwiseAbs().maxCoeff();
    if (rh > eq_tol * std::max(1.0, H.maxCoeff()) || rv > eq_tol * std::max(1.0, V.maxCoeff())) {
      throw std::invalid_argument("wnv_reduce: H or V is not an equilibrium of its total equation (residuals " +
                                  std::to_string(rh) + ", " + std::to_string(rv) + ")");
    }
  }
  const auto M = static_cast<Eigen::Index>(grid.size());
  Coefficient s1 = Coefficient::Zero(M), s2 = Coefficient::Zero(M);
  if (perturb) {
    detail::check_size(perturb->phi1, grid, "phi1");
    detail::check_size(perturb->phi2, grid, "phi2");
    s1 = perturb->sigma * perturb->phi1;
    s2 = perturb->sigma * perturb->phi2;
  }
  const Coefficient k1 = p.mu1.array() + p.c1.array() * (H - s1).array();
  const Coefficient k2 = p.mu2.array() + p.c2.array() * (V - s2).array();
  const Coefficient q1 = H + s1;
  const Coefficient q2 = V + s2;

  auto build = [&](bool truncate) {
    ModelSpec model;
    model.name = truncate ? "wnv_reduced_truncated" : "wnv_reduced";
    model.n = 2;
    model.grid = grid;
    model.dispersal = {p.host, p.vector};
    model.component_names = {"H_i", "V_i"};
    model.subhomogeneity = truncate ? Subhomogeneity::sub : Subhomogeneity::strong;
    model.f = [=, l1 = p.l1, l2 = p.l2](std::size_t m, std::span<const double> u, std::span<double> out) {
      using detail::at;
      double g1 = at(q1, m) - u[0], g2 = at(q2, m) - u[1];
      if (truncate) {
        g1 = std::max(g1, 0.0);
        g2 = std::max(g2, 0.0);
      }
      out[0] = -at(k1, m) * u[0] + at(l1, m) * g1 * u[1];
      out[1] = -at(k2, m) * u[1] + at(l2, m) * g2 * u[0];
    };
    model.jac = [=, l1 = p.l1, l2 = p.l2](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
      using detail::at;
      const double g1 = at(q1, m) - u[0], g2 = at(q2, m) - u[1];
      const bool on1 = !truncate || g1 > 0.0;
      const bool on2 = !truncate || g2 > 0.0;
      J(0, 0) = -at(k1, m) - (on1 ? at(l1, m) * u[1] : 0.0);
      J(0, 1) = on1 ? at(l1, m) * g1 : 0.0;
      J(1, 0) = on2 ? at(l2, m) * g2 : 0.0;
      J(1, 1) = -at(k2, m) - (on2 ? at(l2, m) * u[0] : 0.0);
    };
    model.canonical_upper = [=] {
      State s(M, 2);
      s.col(0) = q1;
      s.col(1) = q2;
      return s;
    };
    finalize(model);
    return model;
  };

  WnvReduction out{build(false), build(true), {}, H, V};
  out.linearization = linearize_at_zero(out.truncated);
  return out;
}

/// Positive root (v1, v2) of the pointwise system
///   h1 − r1 v1 + p1 (q1 − v1) v2 = 0,   h2 − r2 v2 + p2 (q2 − v2) v1 = 0,
/// obtained from the quadratic in v1 and back-substitution into the second
/// equation. Returns nothing when no positive solution exists.
inline std::optional<std::pair<double, double>> wnv_pointwise_quadratic(double h1, double h2, double r1, double r2, double p1,
                                                                       double p2, double q1, double q2) {
  if (h1 < 0.0 || h2 < 0.0 || !(r1 > 0.0) || !(r2 > 0.0) || !(p1 > 0.0) || !(p2 > 0.0) || !(q1 > 0.0) || !(q2 > 0.0)) {
    throw std::invalid_argument("wnv_pointwise_quadratic: need h >= 0 and r, p, q > 0");
  }
  const double A = p2 * (r1 + p1 * q2);
  const double B = r1 * r2 + p1 * h2 - p1 * p2 * q1 * q2 - p2 * h1;
  const double C = r2 * h1 + p1 * q1 * h2;
  double v1 = 0.0;
  if (C > 0.0) {
    const double disc = std::sqrt(B * B + 4.0 * A * C);
    v1 = B >= 0.0 ? 2.0 * C / (B + disc) : (disc - B) / (2.0 * A);
  } else if (B < 0.0) {
    v1 = -B / A;
  } else {
    return std::nullopt;
  }
  const double v2 = (h2 + p2 * q2 * v1) / (r2 + p2 * v1);
  if (!(v1 > 0.0) || !(v2 > 0.0)) {
    return std::nullopt;
  }
  return std::make_pair(v1, v2);
}

// ---------------------------------------------------------------------------
// May–Nowak: healthy cells u, infected cells v, virus w.

struct MayNowakParams {
  Coefficient a1, a2, b, phi, gamma;
  Dispersal cells;
  Dispersal virus;

  void validate(const SpatialGrid& grid) const {
    const std::pair<const Coefficient*, const char*> all[] = {{&a1, "a1"}, {&a2, "a2"}, {&b, "b"}, {&phi, "phi"}, {&gamma, "gamma"}};
    for (const auto& [c, name] : all) {
      detail::check_size(*c, grid, name);
      if (!(c->minCoeff() > 0.0)) {
        throw std::invalid_argument(std::string("may_nowak: ") + name + " must be positive");
      }
    }
  }
};

/// Z solving d1∫J1 Z − d1* Z − a1 Z + φ = 0.
inline Coefficient may_nowak_source(const SpatialGrid& grid, const MayNowakParams& p) {
  p.validate(grid);
  const DispersalBlock block = bind_dispersal(p.cells, grid);
  const auto M = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  if (!block.degenerate()) {
    A = -block.rate * (*block.weighted_kernel);
  }
  A.diagonal() += block.boundary + p.a1;
  return Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(p.phi);
}

/// Full three-component model (u, v, w). Not cooperative.
inline ModelSpec may_nowak(const SpatialGrid& grid, const MayNowakParams& p) {
  p.validate(grid);
  ModelSpec model;
  model.name = "may_nowak";
  model.n = 3;
  model.grid = grid;
  model.dispersal = {p.cells, p.cells, p.virus};
  model.component_names = {"u", "v", "w"};
  model.cooperative = false;
  model.subhomogeneity = Subhomogeneity::none;
  model.monitored = {1, 2};
  model.f = [p](std::size_t m, std::span<const double> u, std::span<double> out) {
    using detail::at;
    out[0] = -at(p.a1, m) * u[0] - at(p.b, m) * u[0] * u[2] + at(p.phi, m);
    out[1] = -at(p.a1, m) * u[1] + at(p.b, m) * u[0] * u[2];
    out[2] = -at(p.a2, m) * u[2] + at(p.gamma, m) * u[1];
  };
  model.jac = [p](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
    using detail::at;
    J.setZero();
    J(0, 0) = -at(p.a1, m) - at(p.b, m) * u[2];
    J(0, 2) = -at(p.b, m) * u[0];
    J(1, 0) = at(p.b, m) * u[2];
    J(1, 1) = -at(p.a1, m);
    J(1, 2) = at(p.b, m) * u[0];
    J(2, 1) = at(p.gamma, m);
    J(2, 2) = -at(p.a2, m);
  };
  const Coefficient Z = may_nowak_source(grid, p);
  const double zcap = 1.5 * Z.maxCoeff();
  const double wcap = zcap * std::max(1.0, (p.gamma.array() / p.a2.array()).maxCoeff());
  const auto M = static_cast<Eigen::Index>(grid.size());
  model.canonical_upper = [M, zcap, wcap] {
    State s(M, 3);
    s.col(0).setConstant(zcap);
    s.col(1).setConstant(zcap);
    s.col(2).setConstant(wcap);
    return s;
  };
  finalize(model);
  return model;
}

/// Infection subsystem (v, w) with u = Z − v:
///   f_v = −a1 v + b (Z − v)⁺ w,   f_w = −a2 w + γ v.
inline ModelSpec may_nowak_reduce(const SpatialGrid& grid, const MayNowakParams& p, const Coefficient& Z) {
  p.validate(grid);
  detail::check_size(Z, grid, "Z");
  ModelSpec model;
  model.name = "may_nowak_reduced";
  model.n = 2;
  model.grid = grid;
  model.dispersal = {p.cells, p.virus};
  model.component_names = {"v", "w"};
  model.subhomogeneity = Subhomogeneity::strict;
  model.f = [p, Z](std::size_t m, std::span<const double> u, std::span<double> out) {
    using detail::at;
    out[0] = -at(p.a1, m) * u[0] + at(p.b, m) * std::max(at(Z, m) - u[0], 0.0) * u[1];
    out[1] = -at(p.a2, m) * u[1] + at(p.gamma, m) * u[0];
  };
  model.jac = [p, Z](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
    using detail::at;
    const double g = at(Z, m) - u[0];
    J(0, 0) = -at(p.a1, m) - (g > 0.0 ? at(p.b, m) * u[1] : 0.0);
    J(0, 1) = g > 0.0 ? at(p.b, m) * g : 0.0;
    J(1, 0) = at(p.gamma, m);
    J(1, 1) = -at(p.a2, m);
  };
  finalize(model);
  const auto M = static_cast<Eigen::Index>(grid.size());
  const double wcap = 1.05 * (p.gamma.array() * Z.array() / p.a2.array()).maxCoeff();
  State base(M, 2);
  base.col(0) = Z;
  base.col(1).setConstant(wcap);
  const ModelSpec probe = model;
  model.canonical_upper = [probe, base] {
    State s = base;
    for (int k = 0; k < 60 && residual(probe, s).maxCoeff() > 0.0; ++k) {
      s.col(1) *= 2.0;
    }
    return s;
  };
  return model;
}

// ---------------------------------------------------------------------------
// Capasso–Maddalena: agent u, infective humans v.

struct CapassoParams {
  Coefficient g11, g12, g22;
  Dispersal agent;
  Dispersal humans;
  ScalarNonlinearity G;
};

struct GxReport {
  bool vanishes_at_zero = false;
  bool increasing = false;
  bool ratio_decreasing = false;
  double asymptotic_slope = 0.0;
  double slope_bound = 0.0;
  bool asymptotic_ok = false;

  bool ok() const { return vanishes_at_zero && increasing && ratio_decreasing && asymptotic_ok; }
};

/// Samples the saturation conditions on G: G(x, 0) = 0, G_z > 0, G/z
/// strictly decreasing, and G(x, z)/z at z = 10⁶ below min γ11 min γ22 / max γ12.
inline GxReport capasso_gx_check(const SpatialGrid& grid, const CapassoParams& p) {
  GxReport r;
  r.vanishes_at_zero = r.increasing = r.ratio_decreasing = true;
  r.slope_bound = p.g11.minCoeff() * p.g22.minCoeff() / p.g12.maxCoeff();
  const double zs[] = {1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e4};
  for (double x : grid.nodes) {
    if (std::abs(p.G(x, 0.0)) > 1e-14) {
      r.vanishes_at_zero = false;
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double z : zs) {
      if (!(p.G.dz(x, z) > 0.0)) {
        r.increasing = false;
      }
      const double ratio = p.G(x, z) / z;
      if (!(ratio < prev)) {
        r.ratio_decreasing = false;
      }
      prev = ratio;
    }
    r.asymptotic_slope = std::max(r.asymptotic_slope, p.G(x, 1e6) / 1e6);
  }
  r.asymptotic_ok = r.asymptotic_slope < r.slope_bound;
  return r;
}

inline ModelSpec capasso_maddalena(const SpatialGrid& grid, const CapassoParams& p) {
  detail::check_size(p.g11, grid, "gamma11");
  detail::check_size(p.g12, grid, "gamma12");
  detail::check_size(p.g22, grid, "gamma22");
  if (!(p.g11.minCoeff() > 0.0) || !(p.g12.minCoeff() > 0.0) || !(p.g22.minCoeff() > 0.0)) {
    throw std::invalid_argument("capasso_maddalena: gamma coefficients must be positive");
  }
  if (!p.G.value) {
    throw std::invalid_argument("capasso_maddalena: G is required");
  }
  ModelSpec model;
  model.name = "capasso_maddalena";
  model.n = 2;
  model.grid = grid;
  model.dispersal = {p.agent, p.humans};
  model.component_names = {"u", "v"};
  model.subhomogeneity = capasso_gx_check(grid, p).ratio_decreasing ? Subhomogeneity::strict : Subhomogeneity::sub;
  const std::vector<double> nodes = grid.nodes;
  model.f = [p, nodes](std::size_t m, std::span<const double> u, std::span<double> out) {
    using detail::at;
    out[0] = -at(p.g11, m) * u[0] + at(p.g12, m) * u[1];
    out[1] = -at(p.g22, m) * u[1] + p.G(nodes[m], u[0]);
  };
  model.jac = [p, nodes](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
    using detail::at;
    J(0, 0) = -at(p.g11, m);
    J(0, 1) = at(p.g12, m);
    J(1, 0) = p.G.dz(nodes[m], u[0]);
    J(1, 1) = -at(p.g22, m);
  };
  finalize(model);
  const auto M = static_cast<Eigen::Index>(grid.size());
  const double ratio = p.g11.minCoeff() / p.g12.maxCoeff();
  const ModelSpec probe = model;
  model.canonical_upper = [probe, M, ratio] {
    State s(M, 2);
    double C = 1.0;
    for (int k = 0; k <= 60; ++k, C *= 2.0) {
      s.col(0).setConstant(C);
      s.col(1).setConstant(ratio * C);
      if (residual(probe, s).maxCoeff() <= 0.0) {
        break;
      }
    }
    return s;
  };
  return model;
}

// ---------------------------------------------------------------------------
// Benthic–drift: drift zone u (dispersing), benthic zone v (sessile).

struct BenthicParams {
  Coefficient Ad, Ab, md, mb, sigma, mu;
  Dispersal drift;
  ScalarNonlinearity g;
};

/// (A_d/A_b) σ > 0 everywhere: the sessile component is fed by the drift.
inline bool benthic_coupling_ok(const BenthicParams& p) {
  return ((p.Ad.array() / p.Ab.array()) * p.sigma.array() > 0.0).all();
}

inline ModelSpec benthic_drift(const SpatialGrid& grid, const BenthicParams& p) {
  const std::pair<const Coefficient*, const char*> all[] = {{&p.Ad, "A_d"}, {&p.Ab, "A_b"}, {&p.md, "m_d"}, {&p.mb, "m_b"}};
  for (const auto& [c, name] : all) {
    detail::check_size(*c, grid, name);
    if (!(c->minCoeff() > 0.0)) {
      throw std::invalid_argument(std::string("benthic_drift: ") + name + " must be positive");
    }
  }
  detail::check_size(p.sigma, grid, "sigma");
  detail::check_size(p.mu, grid, "mu");
  if (p.sigma.minCoeff() < 0.0 || p.mu.minCoeff() < 0.0) {
    throw std::invalid_argument("benthic_drift: release rates must be nonnegative");
  }
  if (!p.g.value) {
    throw std::invalid_argument("benthic_drift: growth function g is required");
  }
  ModelSpec model;
  model.name = "benthic_drift";
  model.n = 2;
  model.grid = grid;
  model.dispersal = {p.drift, Dispersal{p.drift.kernel, BoundaryMode{p.drift.mode.kind, 0.0}}};
  model.component_names = {"u", "v"};
  const std::vector<double> nodes = grid.nodes;
  bool decreasing = true;
  for (double x : nodes) {
    if (!(p.g(x, 1.0) < p.g(x, 0.5)) || !(p.g(x, 0.5) < p.g(x, 0.0))) {
      decreasing = false;
    }
  }
  model.subhomogeneity = decreasing ? Subhomogeneity::strict : Subhomogeneity::sub;
  model.f = [p, nodes](std::size_t m, std::span<const double> u, std::span<double> out) {
    using detail::at;
    out[0] = -(at(p.md, m) + at(p.sigma, m)) * u[0] + at(p.Ab, m) / at(p.Ad, m) * at(p.mu, m) * u[1];
    out[1] = p.g(nodes[m], u[1]) * u[1] - at(p.mb, m) * u[1] + at(p.Ad, m) / at(p.Ab, m) * at(p.sigma, m) * u[0] -
             at(p.mu, m) * u[1];
  };
  model.jac = [p, nodes](std::size_t m, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) {
    using detail::at;
    J(0, 0) = -(at(p.md, m) + at(p.sigma, m));
    J(0, 1) = at(p.Ab, m) / at(p.Ad, m) * at(p.mu, m);
    J(1, 0) = at(p.Ad, m) / at(p.Ab, m) * at(p.sigma, m);
    J(1, 1) = p.g(nodes[m], u[1]) + p.g.dz(nodes[m], u[1]) * u[1] - at(p.mb, m) - at(p.mu, m);
  };
  finalize(model);
  const auto M = static_cast<Eigen::Index>(grid.size());
  const Coefficient ratio = (p.Ab.array() / p.Ad.array()) * p.mu.array() / (p.md + p.sigma).array();
  const double r = 1.01 * std::max(ratio.maxCoeff(), 1e-12);
  const ModelSpec probe = model;
  model.canonical_upper = [probe, M, r] {
    State s(M, 2);
    double C = 1.0;
    for (int k = 0; k <= 60; ++k, C *= 2.0) {
      s.col(1).setConstant(C);
      s.col(0).setConstant(r * C);
      if (residual(probe, s).maxCoeff() <= 0.0) {
        break;
      }
    }
    return s;
  };
  return model;
}

}  // namespace nlgpe
