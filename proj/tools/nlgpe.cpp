// nlgpe: generalized principal eigenvalue squeeze, threshold simulation and
// equilibrium solves for nonlocal dispersal systems, driven by a scenario
// config file.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlgpe/config.hpp"
#include "nlgpe/nlgpe.hpp"

namespace fs = std::filesystem;
using namespace nlgpe;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_coherence = 4;

struct Run {
  Config cfg;
  fs::path out_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  std::ofstream open(const std::string& file) const {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / file);
    if (!out) {
      throw std::runtime_error("cannot write " + (out_dir / file).string());
    }
    out << "# nlgpe " << version << " config_hash=" << cfg.hash_hex() << '\n';
    out.precision(17);
    return out;
  }
};

std::string component_list(const ModelSpec& model, const std::vector<std::size_t>& idx) {
  if (idx.empty()) {
    return "-";
  }
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    s += (k ? "," : "") + model.component_names[idx[k]];
  }
  return s;
}

SqueezeReport threshold_squeeze(const Scenario& sc, const SpectralSettings& spec, unsigned threads) {
  const MatrixField B = linearize_at_zero(sc.threshold);
  SqueezeOptions opt;
  opt.eig = spec.eig;
  opt.threads = threads;
  return squeeze(B, sc.grid, sc.threshold.blocks, spec.schedule, opt);
}

std::string interval_sign(const SqueezeReport& r) {
  if (r.interval_low > 0.0) {
    return "positive";
  }
  if (r.interval_high < 0.0) {
    return "negative";
  }
  return "straddle";
}

/// Positive equilibrium of the threshold system from ρφ^ε and the canonical
/// upper solution; nothing when no canonical lower solution exists.
std::optional<EquilibriumResult> threshold_equilibrium(const Scenario& sc, const EquilibriumSettings& es, OrderedPair* seed_out = nullptr) {
  const ModelSpec& model = sc.threshold;
  if (!model.canonical_upper) {
    return std::nullopt;
  }
  const auto [lambda, phi] = lower_control_eigenfunction(model, es.eps);
  if (!(lambda > 0.0)) {
    return std::nullopt;
  }
  const auto lower = canonical_lower_solution(model, phi);
  if (!lower) {
    return std::nullopt;
  }
  State upper = model.canonical_upper();
  if (residual(model, upper).maxCoeff() > 0.0) {
    return std::nullopt;
  }
  OrderedPair pair{*lower, upper};
  if (seed_out) {
    *seed_out = pair;
  }
  return monotone_iterate(model, pair, es.monotone);
}

int cmd_eig(const Run& run) {
  const Scenario sc = build_scenario(run.cfg);
  const SpectralSettings spec = read_spectral(run.cfg);
  const MatrixField B = linearize_at_zero(sc.threshold);
  const SpectralBoundField sb = sample_field(B, sc.grid);
  const DiscreteOperator op = assemble(sc.grid, sc.threshold.blocks, B);
  const EigenResult r = principal_eig(op, spec.eig);
  const Existence gap = existence_gap_test(r.lambda, sb, spec.gap_tol.value_or(default_gap_tol(sb.eta)));
  const double lambda0 = spec.lambda0.value_or(sb.eta + 1.0);
  if (!(lambda0 > sb.eta)) {
    throw ConfigError("spectral.lambda0", "must exceed max s(B(x)) = " + std::to_string(sb.eta));
  }
  const double radius = resolvent_radius_test(op, sb, lambda0);
  const auto degenerate = sc.threshold.degenerate_set();

  auto out = run.open("eig.csv");
  out << "lambda,residual,iterations,strongly_positive,dense_fallback,cw_lower,cw_upper,eta,existence,lambda0,resolvent_radius\n";
  out << r.lambda << ',' << r.residual << ',' << r.iterations << ',' << (r.strongly_positive ? 1 : 0) << ','
      << (r.dense_fallback ? 1 : 0) << ',' << r.cw_lower << ',' << r.cw_upper << ',' << sb.eta << ',' << to_string(gap) << ','
      << lambda0 << ',' << radius << '\n';

  auto ef = run.open("eigenfunction.csv");
  write_equilibrium_csv(ef, r.eigenfunction, sc.grid.nodes);

  auto ess = run.open("ess_spectrum.csv");
  ess << "node_index,x,re,im\n";
  for (const auto& p : essential_spectrum(B, sc.grid)) {
    ess << p.node << ',' << p.x << ',' << p.value.real() << ',' << p.value.imag() << '\n';
  }

  std::cout << "model = " << sc.threshold.name << '\n'
            << "lambda_p = " << r.lambda << '\n'
            << "eta = " << sb.eta << '\n'
            << "existence = " << to_string(gap) << '\n'
            << "resolvent_radius(lambda0=" << lambda0 << ") = " << radius << '\n'
            << "degenerate_set = " << component_list(sc.threshold, degenerate) << '\n';
  if (!sb.warning.empty()) {
    std::cerr << "warning: " << sb.warning << '\n';
  }
  return 0;
}

int cmd_squeeze(const Run& run) {
  const Scenario sc = build_scenario(run.cfg);
  const SpectralSettings spec = read_spectral(run.cfg);
  const SqueezeReport rep = threshold_squeeze(sc, spec, run.threads);
  auto out = run.open("squeeze.csv");
  write_squeeze_csv(out, rep);
  auto sum = run.open("squeeze_summary.txt");
  for (std::ostream* s : {static_cast<std::ostream*>(&sum), static_cast<std::ostream*>(&std::cout)}) {
    *s << "model = " << sc.threshold.name << '\n'
       << "eta = " << rep.eta << '\n'
       << "interval_low = " << rep.interval_low << '\n'
       << "interval_high = " << rep.interval_high << '\n'
       << "lambda_estimate = " << rep.lambda_estimate << '\n'
       << "width = " << rep.width() << '\n'
       << "lower_monotone = " << (rep.lower_monotone() ? "true" : "false") << '\n'
       << "upper_monotone = " << (rep.upper_monotone() ? "true" : "false") << '\n'
       << "sign = " << interval_sign(rep) << '\n';
  }
  if (!rep.warning.empty()) {
    std::cerr << "warning: " << rep.warning << '\n';
  }
  return 0;
}

int cmd_simulate(const Run& run) {
  const Scenario sc = build_scenario(run.cfg);
  const SpectralSettings spec = read_spectral(run.cfg);
  const EquilibriumSettings es = read_equilibrium(run.cfg);
  const DynamicsSettings dyn = read_dynamics(run.cfg, sc.dynamics);
  const State u0 = initial_state(dyn, sc.dynamics);
  const SqueezeReport rep = threshold_squeeze(sc, spec, run.threads);

  const double bound = stability_bound(sc.dynamics, {u0});
  const double dt = dyn.dt.value_or(0.5 * bound);
  if (dt > bound) {
    throw ConfigError("dynamics.dt", "dt = " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));
  }

  // A canonical upper solution bounds the flow even when f is only subhomogeneous.
  const bool saturating = sc.threshold.subhomogeneity == Subhomogeneity::strict ||
                          sc.threshold.subhomogeneity == Subhomogeneity::strong || static_cast<bool>(sc.threshold.canonical_upper);
  std::string predicted;
  std::optional<State> target;
  if (rep.interval_low > 0.0) {
    if (saturating) {
      predicted = to_string(Regime::converges_positive);
      if (auto eq = threshold_equilibrium(sc, es)) {
        target = sc.lift(eq->U);
      }
    } else {
      predicted = "unbounded_growth";
    }
  } else if (rep.interval_high < 0.0) {
    predicted = to_string(Regime::decays_to_zero);
  } else {
    predicted = "critical";
  }

  IntegrateOptions opt;
  opt.stride = dyn.stride;
  opt.trust_dt = true;
  const Trajectory traj = integrate(sc.dynamics, u0, dyn.T, dt, opt);
  const auto monitored = sc.dynamics.monitored_components();
  const RegimeVerdict v = classify(traj, target, dyn.tol, monitored);

  std::string coherence;
  std::optional<double> sigma_pred;
  bool rate_ok = true;
  if (predicted == "critical") {
    coherence = "critical: prediction suspended";
  } else if (predicted == "unbounded_growth") {
    coherence = "n/a: model is not strictly subhomogeneous";
  } else {
    bool ok = predicted == to_string(v.verdict);
    if (v.verdict == Regime::decays_to_zero) {
      sigma_pred = -rep.interval_high / 2.0;
      if (v.decay_rate) {
        rate_ok = *v.decay_rate >= *sigma_pred - 0.05;
        ok = ok && rate_ok;
      }
    }
    coherence = ok ? "PASS" : "FAIL";
  }

  auto out = run.open("trajectory.csv");
  write_trajectory_csv(out, traj, sc.grid.nodes);
  auto vb = run.open("verdict.txt");
  for (std::ostream* s : {static_cast<std::ostream*>(&vb), static_cast<std::ostream*>(&std::cout)}) {
    s->precision(12);
    *s << "model = " << sc.dynamics.name << '\n'
       << "threshold_model = " << sc.threshold.name << '\n'
       << "monitored = " << component_list(sc.dynamics, monitored) << '\n'
       << "lambda_low = " << rep.interval_low << '\n'
       << "lambda_high = " << rep.interval_high << '\n'
       << "dt = " << traj.dt << '\n'
       << "T = " << dyn.T << '\n'
       << "predicted = " << predicted << '\n'
       << "observed = " << to_string(v.verdict) << '\n';
    write_verdict(*s, v);
    if (sigma_pred) {
      *s << "sigma_pred = " << *sigma_pred << '\n' << "rate_check = " << (rate_ok ? "PASS" : "FAIL") << '\n';
    }
    *s << "clip_events = " << traj.clip_events << '\n' << "coherence = " << coherence << '\n';
  }
  if (traj.clip_events > 0) {
    std::cerr << "warning: " << traj.clip_events << " negative entries clipped to zero (most negative " << traj.most_negative
              << ")\n";
  }
  return coherence == "FAIL" ? exit_coherence : 0;
}

int cmd_equilibrium(const Run& run) {
  const Scenario sc = build_scenario(run.cfg);
  const SpectralSettings spec = read_spectral(run.cfg);
  const EquilibriumSettings es = read_equilibrium(run.cfg);
  const SqueezeReport rep = threshold_squeeze(sc, spec, run.threads);
  const ModelSpec& model = sc.threshold;

  auto report = run.open("equilibrium_report.txt");
  auto both = [&](auto&& write) {
    write(static_cast<std::ostream&>(report));
    write(static_cast<std::ostream&>(std::cout));
  };
  both([&](std::ostream& s) {
    s << "model = " << model.name << '\n'
      << "lambda_low = " << rep.interval_low << '\n'
      << "lambda_high = " << rep.interval_high << '\n';
  });

  OrderedPair seed;
  const auto eq = rep.interval_low > 0.0 ? threshold_equilibrium(sc, es, &seed) : std::nullopt;
  if (!eq) {
    // Only the trivial equilibrium is certified to exist.
    const State zero = sc.lift(model.zeros());
    auto csv = run.open("equilibrium.csv");
    write_equilibrium_csv(csv, zero, sc.grid.nodes);
    both([&](std::ostream& s) {
      s << "positive_equilibrium = none\n"
        << "canonical_lower_solution = " << (rep.interval_low > 0.0 ? "not found" : "not attempted (lambda interval not positive)")
        << '\n';
      write_dichotomy(s, strong_max_principle_check(model.zeros()), model.component_names);
    });
    return 0;
  }

  std::vector<OrderedPair> seeds;
  for (std::size_t k = 0; k < es.brackets; ++k) {
    const double s = std::ldexp(1.0, -static_cast<int>(k));
    seeds.push_back({s * seed.lower, seed.upper * (1.0 + static_cast<double>(k))});
  }
  MonotoneOptions probe_opt = es.monotone;
  probe_opt.seed_tol = std::max(probe_opt.seed_tol, 1e-12);
  const UniquenessReport uniq = uniqueness_probe(model, seeds, probe_opt);
  const ContinuityReport cont = pointwise_continuity_probe(model, eq->U, model.size() / 2, es.continuity_starts, run.seed);
  const SubhomReport sub = subhomogeneity_check(model, random_subhom_samples(model, seed.upper, es.subhom_samples, run.seed));
  const State full = sc.lift(eq->U);
  const DichotomyReport dich = strong_max_principle_check(eq->U);

  auto csv = run.open("equilibrium.csv");
  write_equilibrium_csv(csv, full, sc.grid.nodes);
  both([&](std::ostream& s) {
    s << "positive_equilibrium = found\n"
      << "residual = " << eq->residual << '\n'
      << "iterations_lower = " << eq->iterations_lower << '\n'
      << "iterations_upper = " << eq->iterations_upper << '\n'
      << "bracket_gap = " << eq->bracket_gap << '\n'
      << "kappa = " << eq->kappa << '\n'
      << "min = " << full.minCoeff() << '\n'
      << "max = " << full.maxCoeff() << '\n';
    write_dichotomy(s, dich, model.component_names);
    s << "uniqueness_accepted = " << uniq.accepted << '\n'
      << "uniqueness_rejected = " << uniq.rejected << '\n'
      << "uniqueness_spread = " << uniq.spread << '\n'
      << "uniqueness = " << (uniq.pass ? "PASS" : "FAIL") << '\n'
      << "continuity_node = " << model.size() / 2 << '\n'
      << "continuity = " << to_string(cont.verdict) << '\n'
      << "subhomogeneity_tag = " << to_string(model.subhomogeneity) << '\n'
      << "subhomogeneity_empirical = " << to_string(sub.empirical) << '\n'
      << "subhomogeneity_samples = " << sub.samples << '\n';
  });
  return 0;
}

int cmd_sweep(const Run& run) {
  const SweepSettings sw = read_sweep(run.cfg);
  auto out = run.open("sweep.csv");
  out << sw.section << '.' << sw.key << ",lambda_lower,lambda_upper,lambda_estimate,sign\n";
  for (double value : sw.values) {
    Config cfg = run.cfg;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    cfg.set(sw.section, sw.key, buf);
    const Scenario sc = build_scenario(cfg);
    const SqueezeReport rep = threshold_squeeze(sc, read_spectral(cfg), run.threads);
    out << value << ',' << rep.interval_low << ',' << rep.interval_high << ',' << rep.lambda_estimate << ',' << interval_sign(rep)
        << '\n';
    std::cout << sw.section << '.' << sw.key << " = " << value << "  [" << rep.interval_low << ", " << rep.interval_high << "]  "
              << interval_sign(rep) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized principal eigenvalues and threshold dynamics of nonlocal dispersal systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version);

  std::string config_path, out_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (default: [output] directory, else .)");
    sub->add_option("--seed", seed, "Seed for randomized probes");
    sub->add_option("--threads", threads, "Worker threads for the squeeze")->check(CLI::Range(1u, 256u));
  };
  using Command = int (*)(const Run&);
  const std::vector<std::tuple<std::string, std::string, Command>> verbs = {
      {"eig", "Principal eigenpair, essential spectrum and existence tests", cmd_eig},
      {"squeeze", "Lower/upper control squeeze along the eps schedule", cmd_squeeze},
      {"simulate", "Integrate the model and check the threshold prediction", cmd_simulate},
      {"equilibrium", "Monotone iteration for the positive equilibrium plus diagnostics", cmd_equilibrium},
      {"sweep", "Threshold interval across a parameter range", cmd_sweep},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    subs.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    Run run{Config::load(config_path), {}, seed, threads};
    out_dir = out_dir.empty() ? run.cfg.text_or("output", "directory", ".") : out_dir;
    run.out_dir = out_dir;
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) {
        return fn(run);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  }
  return exit_config;
}
