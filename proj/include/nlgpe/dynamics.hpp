#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlgpe/error.hpp"
#include "nlgpe/model.hpp"

namespace nlgpe {

struct Trajectory {
  std::string model_id;
  double dt = 0.0;
  std::size_t stride = 1;
  std::vector<double> times;
  std::vector<State> states;
  /// Entries clipped back to zero over the whole run.
  std::size_t clip_events = 0;
  double most_negative = 0.0;

  const State& final_state() const { return states.back(); }
};

/// Largest admissible explicit step, 0.9 / (dispersal bound + sup ‖∂f‖)
/// with ‖∂f‖ sampled at the zero state, the canonical upper solution and
/// any extra states supplied by the caller.
inline double stability_bound(const ModelSpec& model, const std::vector<State>& probes = {}) {
  std::vector<State> states = probes;
  states.push_back(model.zeros());
  if (model.canonical_upper) {
    const State upper = model.canonical_upper();
    states.push_back(upper);
    for (const State& p : probes) {
      states.push_back(p.cwiseMax(upper));
    }
  }
  const double L = dispersal_lipschitz(model) + reaction_lipschitz(model, states);
  return L > 0.0 ? 0.9 / L : std::numeric_limits<double>::infinity();
}

struct IntegrateOptions {
  std::size_t stride = 1;
  /// Skip the stability check (callers that verified the step themselves).
  bool trust_dt = false;
  /// Called after every step with the step index, time and new state.
  std::function<void(std::size_t, double, const State&)> on_step;
};

/// Explicit Euler from u0 up to time T. The step is shrunk uniformly so that
/// an integer number of steps lands exactly on T.
inline Trajectory integrate(const ModelSpec& model, const State& u0, double T, double dt, const IntegrateOptions& options = {}) {
  check_state(model, u0);
  if (!(u0.minCoeff() >= 0.0)) {
    throw std::invalid_argument("initial data must be nonnegative");
  }
  if (!(u0.maxCoeff() > 0.0)) {
    throw std::invalid_argument("initial data must not vanish identically");
  }
  if (!(T > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("T and dt must be positive");
  }
  if (options.stride == 0) {
    throw std::invalid_argument("stride must be positive");
  }
  if (!options.trust_dt) {
    const double bound = stability_bound(model, {u0});
    if (dt > bound) {
      throw std::invalid_argument("dt = " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));
    }
  }
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  const double h = T / static_cast<double>(steps);

  Trajectory traj;
  traj.model_id = model.name;
  traj.dt = h;
  traj.stride = options.stride;
  traj.times.push_back(0.0);
  traj.states.push_back(u0);
  State u = u0;
  for (std::size_t k = 1; k <= steps; ++k) {
    u += h * rhs(model, u);
    const double low = u.minCoeff();
    if (low < 0.0) {
      traj.most_negative = std::min(traj.most_negative, low);
      traj.clip_events += static_cast<std::size_t>((u.array() < 0.0).count());
      u = u.cwiseMax(0.0);
    }
    if (!u.allFinite()) {
      throw NumericalError("integration produced non-finite values at step " + std::to_string(k));
    }
    const double t = static_cast<double>(k) * h;
    if (options.on_step) {
      options.on_step(k, t, u);
    }
    if (k % options.stride == 0 || k == steps) {
      traj.times.push_back(t);
      traj.states.push_back(u);
    }
  }
  return traj;
}

inline Trajectory integrate(const ModelSpec& model, const State& u0, double T, double dt, std::size_t stride) {
  IntegrateOptions options;
  options.stride = stride;
  return integrate(model, u0, T, dt, options);
}

/// True iff a ≤ b entrywise (within `slack`) at every recorded time.
inline bool comparison_check(const Trajectory& a, const Trajectory& b, double slack = 1e-10) {
  if (a.times.size() != b.times.size() || a.dt != b.dt || a.model_id != b.model_id) {
    throw std::invalid_argument("comparison_check: trajectories use different discretizations");
  }
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    if (a.states[k].rows() != b.states[k].rows() || a.states[k].cols() != b.states[k].cols()) {
      throw std::invalid_argument("comparison_check: state shapes differ");
    }
    if ((a.states[k].array() > b.states[k].array() + slack).any()) {
      return false;
    }
  }
  return true;
}

enum class Regime { converges_positive, decays_to_zero, undetermined };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::converges_positive: return "converges_positive";
    case Regime::decays_to_zero: return "decays_to_zero";
    case Regime::undetermined: return "undetermined";
  }
  return "?";
}

struct RegimeVerdict {
  Regime verdict = Regime::undetermined;
  double terminal_residual = 0.0;
  double terminal_sup = 0.0;
  double terminal_min = 0.0;
  std::optional<double> distance_to_equilibrium;
  std::optional<double> decay_rate;
  bool stationary = false;
};

namespace detail {

inline State select_columns(const State& s, const std::vector<std::size_t>& cols) {
  if (cols.empty()) {
    return s;
  }
  State out(s.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = s.col(static_cast<Eigen::Index>(cols[c]));
  }
  return out;
}

/// Least-squares slope of y against t.
inline double ls_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    st += t[k];
    sy += y[k];
    stt += t[k] * t[k];
    sty += t[k] * y[k];
  }
  const double den = n * stt - st * st;
  return den != 0.0 ? (n * sty - st * sy) / den : 0.0;
}

}  // namespace detail

/// Long-time regime of a trajectory, restricted to `components` (all when
/// empty).
///
/// converges_positive: the terminal state is within tol of `equilibrium`
/// (or, without one, the last three checkpoint increments are below tol)
/// and its minimum exceeds tol. decays_to_zero: the terminal sup-norm is
/// below tol, or log sup-norm decreases along a straight line over the last
/// half of the record and has dropped by at least a decade there.
inline RegimeVerdict classify(const Trajectory& traj, const std::optional<State>& equilibrium, double tol,
                              const std::vector<std::size_t>& components = {}) {
  RegimeVerdict v;
  if (traj.states.empty()) {
    return v;
  }
  std::vector<State> record;
  record.reserve(traj.states.size());
  for (const State& s : traj.states) {
    record.push_back(detail::select_columns(s, components));
  }
  const State& last = record.back();
  v.terminal_sup = last.cwiseAbs().maxCoeff();
  v.terminal_min = last.minCoeff();
  const std::size_t K = record.size();
  if (K >= 2) {
    v.terminal_residual = (record[K - 1] - record[K - 2]).cwiseAbs().maxCoeff();
  }
  if (K >= 4) {
    v.stationary = true;
    for (std::size_t k = K - 3; k < K; ++k) {
      if ((record[k] - record[k - 1]).cwiseAbs().maxCoeff() >= tol) {
        v.stationary = false;
      }
    }
  }

  std::vector<double> t, logs;
  for (std::size_t k = K / 2; k < K; ++k) {
    const double s = record[k].cwiseAbs().maxCoeff();
    if (s > 0.0) {
      t.push_back(traj.times[k]);
      logs.push_back(std::log(s));
    }
  }
  bool trend = false;
  if (t.size() >= 4) {
    const double slope = detail::ls_slope(t, logs);
    double worst = 0.0;
    const double tm = t.front();
    const double intercept = [&] {
      double acc = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        acc += logs[k] - slope * (t[k] - tm);
      }
      return acc / static_cast<double>(t.size());
    }();
    bool nonincreasing = true;
    for (std::size_t k = 0; k < t.size(); ++k) {
      worst = std::max(worst, std::abs(logs[k] - (intercept + slope * (t[k] - tm))));
      if (k > 0 && logs[k] > logs[k - 1] + 1e-12) {
        nonincreasing = false;
      }
    }
    const double drop = logs.front() - logs.back();
    trend = slope < 0.0 && nonincreasing && worst < 0.05 && drop > std::log(10.0);
    if (trend || v.terminal_sup < tol) {
      v.decay_rate = -slope;
    }
  }

  if (equilibrium) {
    const State target = detail::select_columns(*equilibrium, components);
    if (target.rows() == last.rows() && target.cols() == last.cols()) {
      v.distance_to_equilibrium = (last - target).cwiseAbs().maxCoeff();
    }
  }
  const bool near_eq = v.distance_to_equilibrium ? *v.distance_to_equilibrium < tol : v.stationary;
  if (v.terminal_sup < tol || (trend && !near_eq)) {
    v.verdict = Regime::decays_to_zero;
  } else if (near_eq && v.terminal_min > tol) {
    v.verdict = Regime::converges_positive;
  }
  if (v.verdict != Regime::decays_to_zero) {
    v.decay_rate.reset();
  }
  return v;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<double>& nodes) {
  out << "t,component,node_index,x,value\n";
  out.precision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const State& s = traj.states[k];
    for (Eigen::Index i = 0; i < s.cols(); ++i) {
      for (Eigen::Index m = 0; m < s.rows(); ++m) {
        out << traj.times[k] << ',' << i << ',' << m << ',' << nodes[static_cast<std::size_t>(m)] << ',' << s(m, i) << '\n';
      }
    }
  }
}

inline void write_verdict(std::ostream& out, const RegimeVerdict& v) {
  out << "verdict = " << to_string(v.verdict) << '\n';
  out << "terminal_residual = " << v.terminal_residual << '\n';
  out << "terminal_sup = " << v.terminal_sup << '\n';
  out << "terminal_min = " << v.terminal_min << '\n';
  if (v.distance_to_equilibrium) {
    out << "distance_to_equilibrium = " << *v.distance_to_equilibrium << '\n';
  }
  if (v.decay_rate) {
    out << "decay_rate = " << *v.decay_rate << '\n';
  }
}

}  // namespace nlgpe
