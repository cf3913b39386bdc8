#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "morawetz/estimates.hpp"
#include "morawetz/io.hpp"
#include "morawetz/lab/suites.hpp"

using namespace morawetz;
using namespace morawetz::lab;
namespace fs = std::filesystem;

namespace {

nlohmann::json load(const std::string& name) { return load_json(std::string(MORAWETZ_CONFIG_DIR) + "/" + name); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("morawetz_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string expect_config_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError";
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, ShippedConfigsParse) {
  EXPECT_NO_THROW(parse_operators_config(load("operators.json")));
  EXPECT_NO_THROW(parse_speccalc_config(load("speccalc.json")));
  EXPECT_NO_THROW(parse_decay_config(load("decay.json")));
  EXPECT_NO_THROW(parse_local_config(load("local.json")));
}

TEST(Config, UnknownFieldNamesItsPath) {
  nlohmann::json j = load("decay.json");
  j["time"]["cadense"] = 0.1;
  const std::string msg = expect_config_error([&] { parse_decay_config(j); });
  EXPECT_NE(msg.find("time.cadense"), std::string::npos) << msg;
}

TEST(Config, DecayRefusesThreeDimensions) {
  nlohmann::json j = load("decay.json");
  j["geometries"][0]["manifold"]["n"] = 3;
  const std::string msg = expect_config_error([&] { parse_decay_config(j); });
  EXPECT_NE(msg.find("n >= 4"), std::string::npos) << msg;
}

TEST(Config, ConjugationWeightsOutOfRange) {
  nlohmann::json j = load("speccalc.json");
  j["speccalc"]["conjugated_cutoff"][0] = {{"s", 1.5}, {"rho", 0.6}};
  const std::string msg = expect_config_error([&] { parse_speccalc_config(j); });
  EXPECT_NE(msg.find("s + rho"), std::string::npos) << msg;
  EXPECT_THROW(check_conjugation_range(3, 1.0, 0.6), std::invalid_argument);  // cap n/2 = 1.5
  EXPECT_NO_THROW(check_conjugation_range(4, 1.5, 0.4));
}

TEST(Config, ConeApertureMustBeBelowQuarter) {
  nlohmann::json j = load("local.json");
  j["cones"]["delta"] = 0.25;
  const std::string msg = expect_config_error([&] { parse_local_config(j); });
  EXPECT_NE(msg.find("cones.delta"), std::string::npos) << msg;
}

TEST(Config, CutoffScaleMustBeDyadic) {
  nlohmann::json j = load("decay.json");
  j["runs"][0]["cutoff"]["H"] = 3;
  EXPECT_THROW(parse_decay_config(j), ConfigError);
}

TEST(Cli, BadConfigExitsWithTwo) {
  const fs::path dir = scratch("badcfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "{\"geometries\": []}";
  EXPECT_THROW(run_command("run-decay", (dir / "c.json").string(), (dir / "out").string(), 1), ConfigError);
  EXPECT_THROW(run_command("run-decay", (dir / "missing.json").string(), (dir / "out").string(), 1), ConfigError);
}

TEST(Csv, RejectsSeparatorsInCells) {
  Csv c({"a", "b"});
  EXPECT_THROW(c.row({"x,y", "1"}), std::logic_error);
  EXPECT_THROW(c.row({"x\ny", "1"}), std::logic_error);
  c.row({"s=1;rho=0.5", "2"});
  EXPECT_EQ(c.str(), "a,b\ns=1;rho=0.5,2\n");
}

TEST(Threads, ExplicitThenEnvironmentThenOne) {
  ::setenv("MORAWETZ_LAB_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(5), 5);
  EXPECT_EQ(resolve_threads(std::nullopt), 3);
  ::unsetenv("MORAWETZ_LAB_THREADS");
  EXPECT_EQ(resolve_threads(std::nullopt), 1);
}

TEST(Threads, ParallelMapKeepsOrder) {
  const auto v = parallel_map<int>(4, 100, [](int i) { return i * i; });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
}

TEST(Report, EmptyDirectoryListsExpectedFiles) {
  const fs::path dir = scratch("empty");
  fs::create_directories(dir);
  try {
    build_report(dir);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("manifest.json"), std::string::npos) << e.what();
  }
}

TEST(Report, SvgIsDeterministicAndWellFormed) {
  Plot p;
  p.title = "decay <test>";
  p.xlabel = "H";
  p.ylabel = "norm";
  p.logx = p.logy = true;
  p.series.push_back({"a", {{2, 1.0}, {4, 0.5}, {8, 0.25}}});
  p.series.push_back({"b", {{2, 0.3}, {4, 0.1}, {8, 0.04}}});
  const std::string s1 = render_svg(p), s2 = render_svg(p);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.rfind("<svg", 0), 0u);
  EXPECT_NE(s1.find("</svg>"), std::string::npos);
  EXPECT_NE(s1.find("decay &lt;test&gt;"), std::string::npos);
}

TEST(Io, DenseRoundTrip) {
  const fs::path dir = scratch("io");
  fs::create_directories(dir);
  const Eigen::MatrixXd A = Eigen::MatrixXd::Random(7, 5);
  write_dense((dir / "a.bin").string(), A, 0xabcdefULL);
  DenseHeader h;
  const Eigen::MatrixXd B = read_dense((dir / "a.bin").string(), &h);
  EXPECT_EQ(h.rows, 7u);
  EXPECT_EQ(h.cols, 5u);
  EXPECT_EQ(h.grid_hash, 0xabcdefULL);
  EXPECT_EQ((A - B).cwiseAbs().maxCoeff(), 0.0);
  std::ofstream(dir / "bad.bin") << "XXXXjunk";
  EXPECT_THROW(read_dense((dir / "bad.bin").string()), std::runtime_error);
}

// Hardy in four dimensions: ||u / r~|| <= ||u / r|| <= (2 / (n - 2)) ||grad u|| = ||grad u||.
// Cauchy-Schwarz: ||grad u||^2 = <L u, u> <= ||L u|| ||u||.
TEST(Estimates, HardyAndInterpolationOnRandomBumps) {
  ManifoldSpec s;
  s.n = 4;
  s.R = 10.0;
  const RadialGrid g(s, 640, 0.125);
  const ModeOperator L = assemble_laplacian(g, angular_mode(4, 0));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(2.0, 40.0), w(0.5, 6.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec u = Vec::Zero(g.size());
    for (int term = 0; term < 3; ++term) {
      const double rc = c(rng), wd = w(rng);
      for (int j = 0; j < g.size(); ++j) u[j] += std::exp(-std::pow((g.r()[j] - rc) / wd, 2));
    }
    EXPECT_LE(hardy_ratio(g, L.mode(), u, 0.0, 1.0), 1.0 + 1e-3);
    EXPECT_LE(interpolation_bound_ratio(L, u, 0.0), 1.0 + 1e-12);
  }
}

TEST(Determinism, SuiteOutputsAreByteIdentical) {
  // A shrunk run-local config keeps this fast.
  nlohmann::json j = load("local.json");
  j["geometries"] = nlohmann::json::array({j["geometries"][0]});
  j["grid"] = {{"r_max", 160}, {"dr", 0.25}};
  j["time"] = {{"cadence", 0.25}, {"T0", 32}};
  j["compact"] = {{"K_radius", 10}, {"blocks", 5}};
  j["data"]["rc"] = 12;
  j["data"]["width"] = 2;
  const fs::path dir = scratch("det");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << j.dump();
  run_command("run-local", (dir / "c.json").string(), (dir / "a").string(), 1);
  run_command("run-local", (dir / "c.json").string(), (dir / "b").string(), 2);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const std::string name = e.path().filename().string();
    if (name == "manifest.json") continue;  // carries the wall time
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 3u);
}
