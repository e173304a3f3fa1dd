#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace nlgpe {

/// Composite-midpoint discretization of a bounded interval [a, b].
///
/// Nodes sit at cell centres, so no node coincides with an endpoint. The
/// grid is immutable after construction.
struct SpatialGrid {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  double measure() const noexcept { return b - a; }
  double spacing() const noexcept { return (b - a) / static_cast<double>(nodes.size()); }

  /// Index of the node at `x`, or throws if `x` is not (within 1e-9·h) a node.
  std::size_t node_index(double x) const {
    const double h = spacing();
    const double pos = (x - a) / h - 0.5;
    const auto m = static_cast<long>(std::lround(pos));
    if (m < 0 || m >= static_cast<long>(size()) ||
        std::abs(nodes[static_cast<std::size_t>(m)] - x) > 1e-9 * h) {
      throw std::invalid_argument("point is not a grid node");
    }
    return static_cast<std::size_t>(m);
  }
};

inline SpatialGrid build_grid(double a, double b, std::size_t resolution) {
  if (resolution < 2) {
    throw std::invalid_argument("grid resolution must be at least 2");
  }
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("grid bounds must satisfy a < b");
  }
  SpatialGrid grid;
  grid.a = a;
  grid.b = b;
  const double h = (b - a) / static_cast<double>(resolution);
  grid.nodes.resize(resolution);
  grid.weights.assign(resolution, h);
  for (std::size_t m = 0; m < resolution; ++m) {
    grid.nodes[m] = a + (static_cast<double>(m) + 0.5) * h;
  }
  return grid;
}

inline double quad_integrate(const SpatialGrid& grid, std::span<const double> samples) {
  if (samples.size() != grid.size()) {
    throw std::invalid_argument("sample count does not match grid size");
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < samples.size(); ++m) {
    sum += grid.weights[m] * samples[m];
  }
  return sum;
}

inline double quad_integrate(const SpatialGrid& grid, const Eigen::VectorXd& samples) {
  return quad_integrate(grid, std::span<const double>(samples.data(), static_cast<std::size_t>(samples.size())));
}

/// Samples `fn` at every node.
template <class Fn>
Eigen::VectorXd sample_nodes(const SpatialGrid& grid, Fn&& fn) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t m = 0; m < grid.size(); ++m) {
    out[static_cast<Eigen::Index>(m)] = fn(grid.nodes[m]);
  }
  return out;
}

}  // namespace nlgpe
