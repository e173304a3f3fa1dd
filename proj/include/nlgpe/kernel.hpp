#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlgpe/grid.hpp"

namespace nlgpe {

enum class KernelFamily { gaussian, tent, uniform_window, tabulated };

/// A dispersal kernel J(x, y).
///
/// Analytic families are translation invariant, symmetric and integrate to
/// one over the whole line. They are not renormalized over the
/// domain, so the row mass over Ω drops below one near the boundary.
/// Tabulated kernels carry a dense node matrix `table(m, j) = J(x_m, x_j)`
/// bound to the grid they were loaded for.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double width = 1.0;
  std::shared_ptr<const Eigen::MatrixXd> table;
  std::vector<double> table_nodes;

  static KernelSpec gaussian(double w) { return {KernelFamily::gaussian, w, nullptr, {}}; }
  static KernelSpec tent(double w) { return {KernelFamily::tent, w, nullptr, {}}; }
  static KernelSpec uniform_window(double w) { return {KernelFamily::uniform_window, w, nullptr, {}}; }

  static KernelSpec tabulated(const SpatialGrid& grid, Eigen::MatrixXd values) {
    const auto M = static_cast<Eigen::Index>(grid.size());
    if (values.rows() != M || values.cols() != M) {
      throw std::invalid_argument("tabulated kernel must be an M x M node matrix");
    }
    if ((values.array() < 0.0).any()) {
      throw std::invalid_argument("tabulated kernel has negative entries");
    }
    KernelSpec spec;
    spec.family = KernelFamily::tabulated;
    spec.width = 0.0;
    spec.table = std::make_shared<const Eigen::MatrixXd>(std::move(values));
    spec.table_nodes = grid.nodes;
    return spec;
  }

  bool symmetric() const {
    if (family != KernelFamily::tabulated) {
      return true;
    }
    return (*table - table->transpose()).cwiseAbs().maxCoeff() == 0.0;
  }
};

namespace detail {

inline std::size_t table_index(const std::vector<double>& nodes, double x) {
  // nodes are uniform midpoints; binary search keeps this independent of spacing
  auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
  std::size_t best = static_cast<std::size_t>(it - nodes.begin());
  if (best == nodes.size() || (best > 0 && std::abs(nodes[best - 1] - x) < std::abs(nodes[best] - x))) {
    --best;
  }
  const double h = nodes.size() > 1 ? nodes[1] - nodes[0] : 1.0;
  if (std::abs(nodes[best] - x) > 1e-9 * h) {
    throw std::invalid_argument("tabulated kernel evaluated off its node set");
  }
  return best;
}

}  // namespace detail

inline double eval_kernel(const KernelSpec& spec, double x, double y) {
  if (spec.family != KernelFamily::tabulated && !(spec.width > 0.0)) {
    throw std::invalid_argument("kernel width must be positive");
  }
  const double z = x - y;
  const double w = spec.width;
  switch (spec.family) {
    case KernelFamily::gaussian:
      return std::exp(-z * z / (2.0 * w * w)) / (w * std::sqrt(2.0 * std::numbers::pi));
    case KernelFamily::tent: {
      const double t = 1.0 - std::abs(z) / w;
      return t > 0.0 ? t / w : 0.0;
    }
    case KernelFamily::uniform_window:
      return std::abs(z) < w ? 1.0 / (2.0 * w) : 0.0;
    case KernelFamily::tabulated:
      return (*spec.table)(static_cast<Eigen::Index>(detail::table_index(spec.table_nodes, x)),
                           static_cast<Eigen::Index>(detail::table_index(spec.table_nodes, y)));
  }
  return 0.0;
}

/// Node matrix of the kernel, `J(m, j) = J(x_m, x_j)`.
inline Eigen::MatrixXd kernel_node_matrix(const KernelSpec& spec, const SpatialGrid& grid) {
  const auto M = static_cast<Eigen::Index>(grid.size());
  if (spec.family == KernelFamily::tabulated) {
    if (spec.table->rows() != M) {
      throw std::invalid_argument("tabulated kernel bound to a different grid");
    }
    return *spec.table;
  }
  Eigen::MatrixXd J(M, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index j = 0; j < M; ++j) {
      J(m, j) = eval_kernel(spec, grid.nodes[static_cast<std::size_t>(m)], grid.nodes[static_cast<std::size_t>(j)]);
    }
  }
  return J;
}

/// j(x_m) = ∫_Ω J(y, x_m) dy by the grid quadrature.
inline double column_mass(const KernelSpec& spec, const SpatialGrid& grid, std::size_t m) {
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    sum += grid.weights[j] * eval_kernel(spec, grid.nodes[j], grid.nodes[m]);
  }
  return sum;
}

inline double column_mass(const KernelSpec& spec, const SpatialGrid& grid, double x) {
  return column_mass(spec, grid, grid.node_index(x));
}

enum class Boundary { dirichlet, neumann };

/// Boundary treatment and dispersal rate of one component. A zero rate
/// marks a degenerate (non-dispersing) component.
struct BoundaryMode {
  Boundary kind = Boundary::neumann;
  double rate = 0.0;
};

inline double boundary_weight(const BoundaryMode& mode, const KernelSpec& spec, const SpatialGrid& grid, std::size_t m) {
  if (mode.rate == 0.0) {
    return 0.0;
  }
  if (mode.kind == Boundary::dirichlet) {
    return mode.rate;
  }
  return mode.rate * column_mass(spec, grid, m);
}

inline double boundary_weight(const BoundaryMode& mode, const KernelSpec& spec, const SpatialGrid& grid, double x) {
  return boundary_weight(mode, spec, grid, grid.node_index(x));
}

struct Dispersal {
  KernelSpec kernel;
  BoundaryMode mode;

  double rate() const noexcept { return mode.rate; }
  bool degenerate() const noexcept { return mode.rate == 0.0; }
};

/// A component's dispersal bound to a grid: the quadrature-weighted kernel
/// matrix `K(m, j) = J(x_m, x_j) w_j` and the boundary weights d*(x_m).
struct DispersalBlock {
  double rate = 0.0;
  std::shared_ptr<const Eigen::MatrixXd> weighted_kernel;
  Eigen::VectorXd boundary;
  Eigen::VectorXd column_mass;

  bool degenerate() const noexcept { return rate == 0.0; }

  /// rate · K u − d* ∘ u
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    if (degenerate()) {
      return Eigen::VectorXd::Zero(u.size());
    }
    Eigen::VectorXd out = rate * (*weighted_kernel * u);
    out.array() -= boundary.array() * u.array();
    return out;
  }
};

inline DispersalBlock bind_dispersal(const Dispersal& dispersal, const SpatialGrid& grid) {
  if (dispersal.rate() < 0.0) {
    throw std::invalid_argument("dispersal rate must be nonnegative");
  }
  const auto M = static_cast<Eigen::Index>(grid.size());
  DispersalBlock block;
  block.rate = dispersal.rate();
  Eigen::MatrixXd J = kernel_node_matrix(dispersal.kernel, grid);
  block.column_mass = Eigen::VectorXd(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    double mass = 0.0;
    for (Eigen::Index j = 0; j < M; ++j) {
      mass += grid.weights[static_cast<std::size_t>(j)] * J(j, m);
    }
    block.column_mass[m] = mass;
  }
  for (Eigen::Index j = 0; j < M; ++j) {
    J.col(j) *= grid.weights[static_cast<std::size_t>(j)];
  }
  block.weighted_kernel = std::make_shared<const Eigen::MatrixXd>(std::move(J));
  if (block.degenerate()) {
    block.boundary = Eigen::VectorXd::Zero(M);
  } else if (dispersal.mode.kind == Boundary::dirichlet) {
    block.boundary = Eigen::VectorXd::Constant(M, block.rate);
  } else {
    block.boundary = block.rate * block.column_mass;
  }
  return block;
}

inline std::vector<DispersalBlock> bind_dispersal(const std::vector<Dispersal>& dispersal, const SpatialGrid& grid) {
  std::vector<DispersalBlock> blocks;
  blocks.reserve(dispersal.size());
  for (const auto& d : dispersal) {
    blocks.push_back(bind_dispersal(d, grid));
  }
  return blocks;
}

/// Reads a tabulated kernel from CSV with header `x,y,value`, one row per
/// node pair in row-major order over the grid's nodes.
inline KernelSpec load_tabulated_kernel(std::istream& in, const SpatialGrid& grid) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("tabulated kernel: empty input");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "x,y,value") {
    throw std::invalid_argument("tabulated kernel: expected header 'x,y,value'");
  }
  const std::size_t M = grid.size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  const double h = grid.spacing();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    std::istringstream fields(line);
    double x = 0, y = 0, v = 0;
    char c1 = 0, c2 = 0;
    if (!(fields >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw std::invalid_argument("tabulated kernel: malformed row " + std::to_string(row + 2));
    }
    if (row >= M * M) {
      throw std::invalid_argument("tabulated kernel: too many rows");
    }
    const std::size_t m = row / M;
    const std::size_t j = row % M;
    if (std::abs(x - grid.nodes[m]) > 1e-9 * h || std::abs(y - grid.nodes[j]) > 1e-9 * h) {
      throw std::invalid_argument("tabulated kernel: row " + std::to_string(row + 2) + " is not on the grid node set");
    }
    values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = v;
    ++row;
  }
  if (row != M * M) {
    throw std::invalid_argument("tabulated kernel: expected " + std::to_string(M * M) + " rows");
  }
  return KernelSpec::tabulated(grid, std::move(values));
}

inline KernelSpec load_tabulated_kernel(const std::string& path, const SpatialGrid& grid) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open kernel table " + path);
  }
  return load_tabulated_kernel(in, grid);
}

}  // namespace nlgpe
