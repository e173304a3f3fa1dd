#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlgpe/grid.hpp"
#include "nlgpe/kernel.hpp"
#include "nlgpe/matrix_field.hpp"

namespace nlgpe {

enum class Subhomogeneity { strong, strict, sub, none };

inline const char* to_string(Subhomogeneity s) {
  switch (s) {
    case Subhomogeneity::strong: return "strong";
    case Subhomogeneity::strict: return "strict";
    case Subhomogeneity::sub: return "sub";
    case Subhomogeneity::none: return "none";
  }
  return "?";
}

/// State of an n-component model on an M-node grid: an M×n matrix whose
/// column i holds component i.
using State = Eigen::MatrixXd;

/// A nonlinear system  u_i' = d_i ∫ J_i u_i − d*_i u_i + f_i(x, u).
///
/// `f(m, u, out)` and `jac(m, u, J)` evaluate the reaction at node m for
/// the local state vector u (length n).
struct ModelSpec {
  using Reaction = std::function<void(std::size_t, std::span<const double>, std::span<double>)>;
  using Jacobian = std::function<void(std::size_t, std::span<const double>, Eigen::Ref<Eigen::MatrixXd>)>;

  std::string name;
  std::size_t n = 1;
  SpatialGrid grid;
  std::vector<Dispersal> dispersal;
  std::vector<DispersalBlock> blocks;
  Reaction f;
  Jacobian jac;
  Subhomogeneity subhomogeneity = Subhomogeneity::none;
  bool cooperative = true;
  /// Components whose persistence or extinction is the question asked of
  /// the model (all of them unless stated otherwise).
  std::vector<std::size_t> monitored;
  std::vector<std::string> component_names;
  std::function<State()> canonical_upper;

  std::size_t size() const noexcept { return grid.size(); }

  std::vector<std::size_t> degenerate_set() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].degenerate()) {
        out.push_back(i);
      }
    }
    return out;
  }

  std::vector<std::size_t> monitored_components() const {
    if (!monitored.empty()) {
      return monitored;
    }
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) {
      all[i] = i;
    }
    return all;
  }

  State zeros() const { return State::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(n)); }

  State constant_state(std::span<const double> values) const {
    if (values.size() != n) {
      throw std::invalid_argument("constant_state: one value per component required");
    }
    State s(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      s.col(static_cast<Eigen::Index>(i)).setConstant(values[i]);
    }
    return s;
  }

  State constant_state(std::initializer_list<double> values) const {
    return constant_state(std::span<const double>(values.begin(), values.size()));
  }
};

/// Binds dispersal to the model's grid and fills in defaults.
inline void finalize(ModelSpec& model) {
  if (model.dispersal.size() != model.n) {
    throw std::invalid_argument(model.name + ": one dispersal entry per component required");
  }
  model.blocks = bind_dispersal(model.dispersal, model.grid);
  if (model.component_names.empty()) {
    for (std::size_t i = 0; i < model.n; ++i) {
      model.component_names.push_back("u" + std::to_string(i + 1));
    }
  }
}

inline void check_state(const ModelSpec& model, const State& U) {
  if (static_cast<std::size_t>(U.rows()) != model.size() || static_cast<std::size_t>(U.cols()) != model.n) {
    throw std::invalid_argument(model.name + ": state has shape " + std::to_string(U.rows()) + "x" +
                                std::to_string(U.cols()) + ", expected " + std::to_string(model.size()) + "x" +
                                std::to_string(model.n));
  }
}

/// Reaction term f(x_m, U(x_m)) at every node.
inline State reaction(const ModelSpec& model, const State& U) {
  check_state(model, U);
  const auto M = static_cast<Eigen::Index>(model.size());
  const auto n = static_cast<Eigen::Index>(model.n);
  State out(M, n);
  std::vector<double> local(model.n), value(model.n);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index i = 0; i < n; ++i) {
      local[static_cast<std::size_t>(i)] = U(m, i);
    }
    model.f(static_cast<std::size_t>(m), local, value);
    for (Eigen::Index i = 0; i < n; ++i) {
      out(m, i) = value[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

/// Dispersal part d_i K_i U_i − d*_i U_i for every component.
inline State dispersal_term(const ModelSpec& model, const State& U) {
  check_state(model, U);
  State out(U.rows(), U.cols());
  for (std::size_t i = 0; i < model.n; ++i) {
    out.col(static_cast<Eigen::Index>(i)) = model.blocks[i].apply(U.col(static_cast<Eigen::Index>(i)));
  }
  return out;
}

/// Right-hand side of the evolution problem, which is also the residual of
/// the equilibrium problem.
inline State rhs(const ModelSpec& model, const State& U) { return dispersal_term(model, U) + reaction(model, U); }

inline State residual(const ModelSpec& model, const State& U) { return rhs(model, U); }

inline Eigen::MatrixXd node_jacobian(const ModelSpec& model, std::size_t m, std::span<const double> u) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.n), static_cast<Eigen::Index>(model.n));
  model.jac(m, u, J);
  return J;
}

inline Eigen::MatrixXd node_jacobian(const ModelSpec& model, std::size_t m, const State& U) {
  std::vector<double> local(model.n);
  for (std::size_t i = 0; i < model.n; ++i) {
    local[i] = U(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
  }
  return node_jacobian(model, m, local);
}

/// Field of ∂f/∂u(x, 0) with the boundary weights subtracted on the diagonal.
inline MatrixField linearize_at_zero(const ModelSpec& model) {
  const std::vector<double> zero(model.n, 0.0);
  MatrixField a;
  a.n = model.n;
  a.nodes = model.grid.nodes;
  for (std::size_t m = 0; m < model.size(); ++m) {
    a.samples.push_back(node_jacobian(model, m, zero));
  }
  return linearization_field(a, model.blocks);
}

/// Largest row-sum norm of ∂f over the nodes, evaluated at each given state.
inline double reaction_lipschitz(const ModelSpec& model, const std::vector<State>& states) {
  double L = 0.0;
  for (const State& U : states) {
    check_state(model, U);
    for (std::size_t m = 0; m < model.size(); ++m) {
      L = std::max(L, node_jacobian(model, m, U).cwiseAbs().rowwise().sum().maxCoeff());
    }
  }
  return L;
}

/// max_i d_i (1 + max_x j_i(x)), raised to the row-sum bound of the
/// dispersal block when a non-symmetric table makes that larger.
inline double dispersal_lipschitz(const ModelSpec& model) {
  double L = 0.0;
  for (const auto& b : model.blocks) {
    if (!b.degenerate()) {
      const double rows = b.rate * b.weighted_kernel->rowwise().sum().maxCoeff() + b.boundary.maxCoeff();
      L = std::max({L, b.rate * (1.0 + b.column_mass.maxCoeff()), rows});
    }
  }
  return L;
}

}  // namespace nlgpe
