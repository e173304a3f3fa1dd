#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "nlgpe/config.hpp"
#include "nlgpe/dynamics.hpp"

using namespace nlgpe;

namespace {

std::string error_of(const std::string& text) {
  try {
    Config::parse_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

template <class Fn>
std::string key_of(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

const char* logistic_text = R"(
[grid]
M = 40

[model]
name = logistic
a = 1
c = 1

[dispersal]
rate = 0.5
width = 0.1
)";

}  // namespace

TEST(Expression, ArithmeticAndFunctions) {
  EXPECT_DOUBLE_EQ(Expression::compile("1 + 2 * 3")(0.0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::compile("2 ^ 3 ^ 2")(0.0), 512.0);
  EXPECT_DOUBLE_EQ(Expression::compile("-2 ^ 2")(0.0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::compile("(1 - x) * x")(0.25), 0.1875);
  EXPECT_NEAR(Expression::compile("sin(pi * x)")(0.5), 1.0, 1e-15);
  EXPECT_NEAR(Expression::compile("exp(1) - e")(0.0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(Expression::compile("abs(x - 1)")(0.25), 0.75);
  const double args[2] = {0.5, 3.0};
  EXPECT_DOUBLE_EQ(Expression::compile("x * u", {"x", "u"})(std::span<const double>(args, 2)), 1.5);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::compile("1 +"), std::invalid_argument);
  EXPECT_THROW(Expression::compile("y"), std::invalid_argument);
  EXPECT_THROW(Expression::compile("sin x"), std::invalid_argument);
  EXPECT_THROW(Expression::compile("(1"), std::invalid_argument);
  EXPECT_THROW(Expression::compile("2 $ 3"), std::invalid_argument);
}

TEST(ConfigParse, SectionsCommentsQuotes) {
  const auto cfg = Config::parse_string(R"(
# leading comment
[alpha]
x = 1.5   ; trailing
name = "a # b ; c"
[beta gamma]
y=2
)");
  EXPECT_TRUE(cfg.has_section("alpha"));
  EXPECT_TRUE(cfg.has_section("beta gamma"));
  EXPECT_DOUBLE_EQ(cfg.number("alpha", "x"), 1.5);
  EXPECT_EQ(cfg.text("alpha", "name"), "a # b ; c");
  EXPECT_EQ(cfg.integer("beta gamma", "y"), 2);
  EXPECT_EQ(cfg.find("alpha", "x")->line, 4);
  EXPECT_FALSE(cfg.has("alpha", "y"));
  EXPECT_EQ(cfg.text_or("alpha", "missing", "fb"), "fb");
  EXPECT_DOUBLE_EQ(cfg.number_or("alpha", "missing", -3.0), -3.0);
  EXPECT_EQ(cfg.integer_or("alpha", "missing", 7), 7);
}

TEST(ConfigParse, Errors) {
  EXPECT_NE(error_of("[a]\nx = 1\nx = 2\n").find("duplicate key (first set on line 2)"), std::string::npos);
  EXPECT_NE(error_of("x = 1\n").find("key outside any section"), std::string::npos);
  EXPECT_NE(error_of("[a]\njunk\n").find("line 2: expected 'key = value'"), std::string::npos);
  EXPECT_NE(error_of("[a\n").find("malformed section header"), std::string::npos);
  EXPECT_NE(error_of("[a]\n = 1\n").find("empty key"), std::string::npos);
  EXPECT_NE(error_of("[a]\ns = \"open\n").find("unterminated quote"), std::string::npos);
  EXPECT_EQ(error_of("[a]\nx = 1\n[b]\nx = 1\n"), "");
  EXPECT_THROW(Config::load("/nonexistent/dir/cfg.ini"), ConfigError);
}

TEST(ConfigParse, TypedGetterErrors) {
  const auto cfg = Config::parse_string("[a]\nhalf = 0.5\nbad = 1 +\nlist = 1, 2 +, 3\n");
  EXPECT_EQ(key_of([&] { cfg.integer("a", "half"); }), "a.half");
  EXPECT_EQ(key_of([&] { cfg.number("a", "bad"); }), "a.bad");
  EXPECT_EQ(key_of([&] { cfg.number("a", "absent"); }), "a.absent");
  try {
    cfg.number_list("a", "list");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("item 2"), std::string::npos);
  }
  try {
    cfg.require("z", "k");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "z.k: required key missing");
  }
}

TEST(ConfigParse, ParamsEvaluatedInOrder) {
  auto cfg = Config::parse_string("[params]\nl = 2\nll = 2 * l\n[model]\nk = ll + 1\nf = l * x\n");
  const auto c = cfg.constants();
  EXPECT_DOUBLE_EQ(c.at("l"), 2.0);
  EXPECT_DOUBLE_EQ(c.at("ll"), 4.0);
  EXPECT_DOUBLE_EQ(cfg.number("model", "k"), 5.0);
  EXPECT_DOUBLE_EQ(cfg.expression("model", "f", {"x"})(0.25), 0.5);
  cfg.set("params", "l", "3");
  EXPECT_DOUBLE_EQ(cfg.number("model", "k"), 7.0);
  EXPECT_THROW(Config::parse_string("[params]\na = b\nb = 1\n").constants(), ConfigError);
}

TEST(ConfigParse, Lists) {
  const auto cfg = Config::parse_string("[params]\nq = 4\n[s]\nv = 1, q, q/8\nu = x, 1 - x\n");
  EXPECT_EQ(cfg.number_list("s", "v"), (std::vector<double>{1.0, 4.0, 0.5}));
  const auto u = cfg.expression_list("s", "u", {"x"});
  ASSERT_EQ(u.size(), 2U);
  EXPECT_DOUBLE_EQ(u[1](0.25), 0.75);
}

TEST(ConfigParse, HashTracksRawText) {
  const auto a = Config::parse_string(logistic_text);
  const auto b = Config::parse_string(logistic_text);
  const auto c = Config::parse_string(std::string(logistic_text) + "\n");
  EXPECT_EQ(a.hash_hex(), b.hash_hex());
  EXPECT_NE(a.hash_hex(), c.hash_hex());
  EXPECT_EQ(a.hash_hex().size(), 16U);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(BuildScenario, GridAndLogistic) {
  const auto sc = build_scenario(Config::parse_string(logistic_text));
  EXPECT_EQ(sc.model_name, "logistic");
  EXPECT_EQ(sc.grid.size(), 40U);
  EXPECT_DOUBLE_EQ(sc.grid.nodes.front(), 0.5 / 40);
  EXPECT_EQ(sc.dynamics.n, 1U);
  EXPECT_EQ(sc.threshold.n, 1U);
  const State s = State::Constant(40, 1, 0.3);
  EXPECT_TRUE(sc.lift(s).isApprox(s));

  EXPECT_EQ(key_of([] { build_scenario(Config::parse_string("[grid]\nM = 1\n[model]\nname = logistic\n")); }), "grid.M");
  EXPECT_EQ(key_of([] { build_scenario(Config::parse_string("[grid]\nM = 10\n[model]\nname = nope\n")); }), "model.name");
  EXPECT_EQ(key_of([] { build_scenario(Config::parse_string("[grid]\nM = 10\n[model]\nname = logistic\na = 1\n")); }),
            "dispersal");
}

TEST(BuildScenario, DispersalErrors) {
  auto with = [](const std::string& disp) {
    return key_of([&] {
      build_scenario(Config::parse_string("[grid]\nM = 10\n[model]\nname = linear\nb = -1\n[dispersal]\n" + disp));
    });
  };
  EXPECT_EQ(with("rate = 1\nwidth = 0\n"), "dispersal.width");
  EXPECT_EQ(with("rate = -1\nwidth = 0.1\n"), "dispersal.rate");
  EXPECT_EQ(with("rate = 1\nwidth = 0.1\nkernel = cauchy\n"), "dispersal.kernel");
  EXPECT_EQ(with("rate = 1\nwidth = 0.1\nboundary = periodic\n"), "dispersal.boundary");
  EXPECT_EQ(with("rate = 1\nkernel = tabulated\ntable = missing.csv\n"), "dispersal.table");
  EXPECT_EQ(with("rate = 1\nwidth = 0.1\nkernel = tent\nboundary = dirichlet\n"), "<none>");
}

TEST(BuildScenario, ComponentDispersalLookup) {
  const auto cfg = Config::parse_string(R"(
[grid]
M = 20
[model]
name = linear_system
n = 3
a11 = -1
a12 = 0.5
a21 = x
a33 = 1
[dispersal]
rate = 0.1
width = 0.2
[dispersal.2]
rate = 0.7
width = 0.2
kernel = uniform
)");
  const auto sc = build_scenario(cfg);
  ASSERT_EQ(sc.dynamics.dispersal.size(), 3U);
  EXPECT_DOUBLE_EQ(sc.dynamics.dispersal[0].rate(), 0.1);
  EXPECT_DOUBLE_EQ(sc.dynamics.dispersal[1].rate(), 0.7);
  EXPECT_DOUBLE_EQ(sc.dynamics.dispersal[2].rate(), 0.1);

  Eigen::MatrixXd J(3, 3);
  const double u[3] = {0.0, 0.0, 0.0};
  sc.dynamics.jac(5, u, J);
  const double x5 = sc.grid.nodes[5];
  EXPECT_DOUBLE_EQ(J(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(J(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(J(1, 0), x5);
  EXPECT_DOUBLE_EQ(J(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(J(1, 2), 0.0);

  auto bad = Config::parse_string(cfg.raw());
  bad.set("model", "a12", "-0.5");
  EXPECT_EQ(key_of([&] { build_scenario(bad); }), "model");
  bad.set("model", "n", "0");
  EXPECT_EQ(key_of([&] { build_scenario(bad); }), "model.n");
}

TEST(BuildScenario, FieldAddsBoundaryBack) {
  const auto sc = build_scenario(Config::parse_string(R"(
[grid]
M = 30
[model]
name = field
n = 1
b11 = 2 - x
[dispersal]
rate = 0.4
width = 0.1
)"));
  const auto B = linearize_at_zero(sc.dynamics);
  for (std::size_t m = 0; m < 30; ++m) {
    EXPECT_NEAR(B[m](0, 0), 2.0 - sc.grid.nodes[m], 1e-14);
  }
}

TEST(BuildScenario, TabulatedKernelRelativeToConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "nlgpe_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream k(dir / "kernel.csv");
    k << "x,y,value\n";
    for (double x : {0.25, 0.75}) {
      for (double y : {0.25, 0.75}) {
        k << x << ',' << y << ",1\n";
      }
    }
  }
  {
    std::ofstream c(dir / "cfg.ini");
    c << "[grid]\nM = 2\n[model]\nname = linear\nb = 0\n[dispersal]\nrate = 1\nkernel = tabulated\ntable = kernel.csv\n";
  }
  const auto sc = build_scenario(Config::load(dir / "cfg.ini"));
  EXPECT_EQ(sc.dynamics.dispersal[0].kernel.family, KernelFamily::tabulated);
  std::filesystem::remove_all(dir);
}

TEST(BuildScenario, CatalogNames) {
  const std::string grid = "[grid]\nM = 16\n";
  const std::string wnv = grid + R"(
[params]
l = 2
[model]
name = wnv_full
a1 = 1
a2 = 1
c1 = 1
c2 = 1
l1 = l
l2 = l
[dispersal.host]
rate = 1
width = 0.1
[dispersal.vector]
rate = 0.5
width = 0.15
)";
  const auto full = build_scenario(Config::parse_string(wnv));
  EXPECT_EQ(full.dynamics.n, 4U);
  EXPECT_EQ(full.threshold.n, 2U);
  const State r = State::Constant(16, 2, 0.25);
  const State lifted = full.lift(r);
  ASSERT_EQ(lifted.cols(), 4);
  EXPECT_NEAR(lifted(3, 0) + lifted(3, 1), 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(lifted(3, 1), 0.25);

  auto reduced_cfg = Config::parse_string(wnv);
  reduced_cfg.set("model", "name", "wnv_reduced");
  reduced_cfg.set("model", "sigma", "0.5");
  const auto reduced = build_scenario(reduced_cfg);
  EXPECT_EQ(reduced.dynamics.n, 2U);

  const auto mn = build_scenario(Config::parse_string(grid + R"(
[model]
name = may_nowak
a1 = 1
a2 = 1
b = 0.5
phi = 1
gamma = 1
[dispersal.cells]
rate = 0.1
width = 0.1
[dispersal.virus]
rate = 0.2
width = 0.1
)"));
  EXPECT_EQ(mn.dynamics.n, 3U);
  EXPECT_EQ(mn.threshold.n, 2U);
  EXPECT_EQ(mn.lift(r).cols(), 3);

  const auto cm = build_scenario(Config::parse_string(grid + R"(
[model]
name = capasso_maddalena
gamma11 = 1
gamma12 = 1
gamma22 = 1
G = 2 * u / (1 + u)
[dispersal.agent]
rate = 1
width = 0.1
[dispersal.humans]
rate = 0.3
width = 0.1
)"));
  EXPECT_EQ(cm.dynamics.n, 2U);

  const auto bd = build_scenario(Config::parse_string(grid + R"(
[model]
name = benthic_drift
A_d = 1
A_b = 2
m_d = 0.2
m_b = 0.1
sigma = 0.5
mu = 0.3
g = 2 * (1 - v)
[dispersal.drift]
rate = 1
width = 0.1
)"));
  EXPECT_EQ(bd.dynamics.n, 2U);
  EXPECT_EQ(bd.dynamics.degenerate_set(), (std::vector<std::size_t>{1}));
}

TEST(Settings, Spectral) {
  const auto def = read_spectral(Config::parse_string("[spectral]\n"));
  ASSERT_EQ(def.schedule.size(), 11U);
  EXPECT_DOUBLE_EQ(def.schedule.back(), 0.1 / 1024);
  EXPECT_FALSE(def.gap_tol);

  const auto s = read_spectral(Config::parse_string("[spectral]\nschedule = 0.2, 0.1, 0.05\ntolerance = 1e-10\ngap_tol = 1e-6\nlambda0 = 2\n"));
  EXPECT_EQ(s.schedule, (std::vector<double>{0.2, 0.1, 0.05}));
  EXPECT_DOUBLE_EQ(s.eig.power.tolerance, 1e-10);
  EXPECT_DOUBLE_EQ(*s.gap_tol, 1e-6);
  EXPECT_DOUBLE_EQ(*s.lambda0, 2.0);

  EXPECT_EQ(key_of([] { read_spectral(Config::parse_string("[spectral]\nschedule = 0.1, 0.2\n")); }), "spectral.schedule");
  EXPECT_EQ(key_of([] { read_spectral(Config::parse_string("[spectral]\neps0 = 0\n")); }), "spectral.eps0");
  EXPECT_EQ(key_of([] { read_spectral(Config::parse_string("[spectral]\nlevels = -1\n")); }), "spectral.levels");
}

TEST(Settings, DynamicsAndInitialState) {
  const auto sc = build_scenario(Config::parse_string(logistic_text));
  const auto d = read_dynamics(Config::parse_string("[dynamics]\nT = 5\ndt = 0.01\nstride = 10\nu0 = 1 - x\n"), sc.dynamics);
  EXPECT_DOUBLE_EQ(d.T, 5.0);
  EXPECT_DOUBLE_EQ(*d.dt, 0.01);
  EXPECT_EQ(d.stride, 10U);
  const State u0 = initial_state(d, sc.dynamics);
  EXPECT_DOUBLE_EQ(u0(0, 0), 1.0 - sc.grid.nodes[0]);

  auto key = [&](const std::string& text) { return key_of([&] { read_dynamics(Config::parse_string(text), sc.dynamics); }); };
  EXPECT_EQ(key("[dynamics]\nT = 0\nu0 = 1\n"), "dynamics.T");
  EXPECT_EQ(key("[dynamics]\nT = 1\ndt = -1\nu0 = 1\n"), "dynamics.dt");
  EXPECT_EQ(key("[dynamics]\nT = 1\nstride = 0\nu0 = 1\n"), "dynamics.stride");
  EXPECT_EQ(key("[dynamics]\nT = 1\nu0 = 1, 1\n"), "dynamics.u0");
  EXPECT_EQ(key_of([&] {
              initial_state(read_dynamics(Config::parse_string("[dynamics]\nT = 1\nu0 = x - 0.5\n"), sc.dynamics), sc.dynamics);
            }),
            "dynamics.u0");
  EXPECT_EQ(key_of([&] {
              initial_state(read_dynamics(Config::parse_string("[dynamics]\nT = 1\nu0 = 0\n"), sc.dynamics), sc.dynamics);
            }),
            "dynamics.u0");
}

TEST(Settings, EquilibriumDefaultsAndOverrides) {
  const auto e0 = read_equilibrium(Config::parse_string(""));
  EXPECT_EQ(e0.brackets, 3U);
  EXPECT_EQ(e0.subhom_samples, 10000U);
  const auto e = read_equilibrium(Config::parse_string("[equilibrium]\ntol = 1e-9\nbrackets = 5\neps = 0.01\n"));
  EXPECT_DOUBLE_EQ(e.monotone.tol, 1e-9);
  EXPECT_EQ(e.brackets, 5U);
  EXPECT_DOUBLE_EQ(e.eps, 0.01);
}

TEST(Settings, Sweep) {
  const auto v = read_sweep(Config::parse_string("[sweep]\nparameter = params.l\nvalues = 0.4, 1, 2\n"));
  EXPECT_EQ(v.section, "params");
  EXPECT_EQ(v.key, "l");
  EXPECT_EQ(v.values, (std::vector<double>{0.4, 1.0, 2.0}));

  const auto r = read_sweep(Config::parse_string("[sweep]\nparameter = model.a\nfrom = 0\nto = 1\npoints = 5\n"));
  EXPECT_EQ(r.values, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(read_sweep(Config::parse_string("[sweep]\nparameter = a.b\nfrom = 3\nto = 3\npoints = 1\n")).values.size(), 1U);

  EXPECT_EQ(key_of([] { read_sweep(Config::parse_string("[sweep]\nparameter = nodot\nvalues = 1\n")); }), "sweep.parameter");
  EXPECT_EQ(key_of([] { read_sweep(Config::parse_string("[sweep]\nparameter = a.b\nfrom = 1\nto = 1\npoints = 3\n")); }), "sweep.to");
  EXPECT_EQ(key_of([] { read_sweep(Config::parse_string("[sweep]\nparameter = a.b\nfrom = 0\nto = 1\npoints = 0\n")); }), "sweep.points");
}
