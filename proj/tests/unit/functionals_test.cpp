#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "morawetz/functionals.hpp"
#include "morawetz/operator_norm.hpp"
#include "morawetz/wave.hpp"

using namespace morawetz;

namespace {

ManifoldSpec flat4() {
  ManifoldSpec s;
  s.n = 4;
  s.R = 10.0;
  return s;
}

struct Flat4Run {
  RadialGrid grid{flat4(), 800, 0.1};
  WeightFunctions wf{grid.spec()};
  std::vector<std::unique_ptr<ModeOperator>> ops;
  std::vector<std::unique_ptr<SpectralDecomposition>> sds;
  std::vector<SpectralPropagator> props;
  Flat4Run() {
    for (int l = 0; l <= 1; ++l) {
      ops.push_back(std::make_unique<ModeOperator>(assemble_laplacian(grid, angular_mode(4, l))));
      sds.push_back(std::make_unique<SpectralDecomposition>(*ops.back()));
      const ModeData md = CauchyData::gaussian_bump(grid, 20.0 + 5.0 * l, 3.0, l).modes[0];
      props.emplace_back(*sds.back(), md.u0, md.v0, 50.0);
    }
  }
  WaveState state(double t, double scale = 1.0) const {
    WaveState s;
    s.t = t;
    for (const auto& p : props) {
      ModeState m = p.state_at(t);
      m.u *= scale;
      m.ud *= scale;
      s.modes.push_back(m);
    }
    return s;
  }
  MorawetzAccumulator run(double t0, double t1, double dt, double scale = 1.0) const {
    MorawetzRun r(grid, wf, {});
    const long n = std::lround((t1 - t0) / dt);
    for (long i = 0; i <= n; ++i) r.sample(t0 + i * dt, state(t0 + i * dt, scale));
    return r.accumulator();
  }
};

const Flat4Run& setup() {
  static const Flat4Run s;
  return s;
}

}  // namespace

TEST(Shells, LayoutAndDominationConstant) {
  const Flat4Run& s = setup();
  const ShellLayout l = ShellLayout::for_grid(s.grid, 10.0);  // r_max = 80
  EXPECT_EQ(l.k_min, 3);
  EXPECT_EQ(l.k_max, 6);
  EXPECT_EQ(l.index(7.9), -1);
  EXPECT_EQ(l.index(8.0), 0);
  EXPECT_EQ(l.index(79.0), 3);
  const double ln2 = std::log(2.0);
  EXPECT_NEAR(l.domination_constant(), (1.0 / 9 + 1.0 / 16 + 1.0 / 25 + 1.0 / 36) / (ln2 * ln2), 1e-15);
  const ForcingShells fs = ForcingShells::for_grid(s.grid);
  double sum = 0.0;
  for (int k = 0; k <= fs.k_max; ++k) sum += 1.0 / (4.0 * std::pow(std::max(k, 1) * ln2, 2));
  EXPECT_NEAR(fs.log_domination_constant(), 1.0 / sum, 1e-14);
}

TEST(Shells, SupOfSingleShellAndEqualShells) {
  MorawetzAccumulator a(ShellLayout{3, 6}, ForcingShells{}, 0, 0);
  a.S = {0.0, 2.5, 0.0, 0.0};
  ShellNorms n = shell_norms(a);
  EXPECT_DOUBLE_EQ(n.linf * n.linf, 2.5);
  a.S = {1.0, 1.0, 1.0, 1.0};
  n = shell_norms(a);
  EXPECT_DOUBLE_EQ(n.linf, 1.0);
  EXPECT_DOUBLE_EQ(n.comparison, a.layout.domination_constant());
}

TEST(Accumulator, MergeOfSubintervalsMatchesSingleRun) {
  const Flat4Run& s = setup();
  const MorawetzAccumulator whole = s.run(0.0, 4.0, 0.1);
  MorawetzAccumulator first = s.run(0.0, 1.5, 0.1);
  first.merge(s.run(1.5, 4.0, 0.1));
  EXPECT_NEAR(first.T, whole.T, 1e-12);
  for (auto [x, y] : {std::pair{first.T1_a, whole.T1_a}, {first.T1_b, whole.T1_b}, {first.T1_c, whole.T1_c},
                      {first.T1_d, whole.T1_d}})
    EXPECT_NEAR(x, y, 1e-12 * std::abs(y));
  for (std::size_t k = 0; k < whole.S.size(); ++k) EXPECT_NEAR(first.S[k], whole.S[k], 1e-12 * whole.shell_sup());
}

TEST(Accumulator, QuadraticInTheSolution) {
  const Flat4Run& s = setup();
  const MorawetzAccumulator a = s.run(0.0, 2.0, 0.1), b = s.run(0.0, 2.0, 0.1, 3.0);
  ASSERT_GT(a.T1_a, 0.0);
  EXPECT_NEAR(b.T1_a, 9.0 * a.T1_a, 1e-12 * b.T1_a);
  EXPECT_NEAR(b.T1_b, 9.0 * a.T1_b, 1e-12 * b.T1_b);
  EXPECT_NEAR(b.T1_d, 9.0 * a.T1_d, 1e-12 * b.T1_d);
  EXPECT_NEAR(b.shell_sup(), 9.0 * a.shell_sup(), 1e-12 * b.shell_sup());
}

TEST(Accumulator, ZeroSolutionGivesZero) {
  const Flat4Run& s = setup();
  const MorawetzAccumulator a = s.run(0.0, 1.0, 0.1, 0.0);
  EXPECT_EQ(a.T1_a + a.T1_b + a.T1_c + a.T1_d + a.shell_sup(), 0.0);
  EXPECT_THROW(ratio_report(a, 0.0), std::invalid_argument);
}

TEST(Accumulator, RejectsNonIncreasingTimes) {
  const Flat4Run& s = setup();
  MorawetzRun r(s.grid, s.wf, {});
  r.sample(1.0, s.state(1.0));
  EXPECT_THROW(r.sample(1.0, s.state(1.0)), std::invalid_argument);
}

TEST(Cones, RegionNestingAndValidation) {
  ConeRegionSpec wide, narrow;
  wide.delta = wide.c = 0.2;
  narrow.delta = narrow.c = 0.1;
  for (double t : {20.0, 50.0, 200.0})
    for (double rt = 2.0; rt < t; rt *= 1.3)
      if (narrow.inside(rt, t)) EXPECT_TRUE(wide.inside(rt, t));
  EXPECT_FALSE(wide.active(5.0));
  EXPECT_TRUE(wide.active(5.01));
  ConeRegionSpec bad = wide;
  bad.delta = 0.3;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = wide;
  bad.sigma = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Fits, PowerLawSlopeUnderNoise) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<std::pair<double, double>> pts;
  for (double H = 2; H <= 64; H *= 2) pts.emplace_back(H, 3.0 * std::pow(H, -1.5) * std::exp(noise(rng)));
  EXPECT_NEAR(fit_decay_exponent(pts).slope, -1.5, 0.02);
  std::vector<double> blocks;
  for (int j = 0; j < 6; ++j) blocks.push_back(0.7 * std::ldexp(1.0, j));
  EXPECT_NEAR(block_slope(blocks).slope, 1.0, 1e-12);
}
