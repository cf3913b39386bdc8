#include <gtest/gtest.h>

#include <cmath>

#include "morawetz/wave.hpp"

using namespace morawetz;

namespace {

struct Flat3 {
  ManifoldSpec spec;
  RadialGrid grid;
  ModeOperator L;
  explicit Flat3(double r_max = 60.0, double dr = 0.1)
      : spec([] {
          ManifoldSpec s;
          s.n = 3;
          s.R = 2.0;
          return s;
        }()),
        grid(spec, static_cast<int>(std::lround(r_max / dr)), dr),
        L(assemble_laplacian(grid, angular_mode(3, 0))) {}
};

double bump(double r, double rc, double w) {
  const double x = (r - rc) / w;
  return std::exp(-x * x);
}

}  // namespace

// Radial waves in three dimensions: r u(t, r) = (F(r + t) + F(r - t)) / 2, F odd.
TEST(Wave, DAlembertAtCourantOne) {
  const Flat3 f;
  const double rc = 15.0, w = 1.5;
  const ModeData md = CauchyData::gaussian_bump(f.grid, rc, w, 0).modes[0];
  auto F = [&](double x) { return x * bump(std::abs(x), rc, w); };
  Leapfrog lf(f.L, md.u0, md.v0, f.grid.dr());
  double worst = 0.0;
  for (int i = 0; i <= 300; ++i) {  // t <= 30 = r_max / 2
    if (i) lf.advance();
    const double t = lf.t();
    for (int j = 0; j < f.grid.size(); ++j) {
      const double r = f.grid.r()[j];
      worst = std::max(worst, std::abs(lf.u()[j] - 0.5 * (F(r + t) + F(r - t)) / r));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Wave, SpectralEnergyAndReversal) {
  const Flat3 f;
  const SpectralDecomposition sd(f.L);
  const ModeData md = CauchyData::gaussian_bump(f.grid, 15.0, 1.5, 0).modes[0];
  const SpectralPropagator p(sd, md.u0, md.v0, 40.0);
  const double E0 = mode_energy(f.L, p.state_at(0.0));
  for (double t : {5.0, 17.0, 33.0}) EXPECT_NEAR(mode_energy(f.L, p.state_at(t)), E0, 1e-10 * E0);
  const ModeState s = p.state_at(20.0);
  const SpectralPropagator back(sd, s.u, -s.ud, 20.0);
  EXPECT_LT((back.state_at(20.0).u - md.u0).norm() / md.u0.norm(), 1e-9);
}

TEST(Wave, LeapfrogConvergesAtSecondOrder) {
  const Flat3 f(40.0, 0.2);
  const SpectralDecomposition sd(f.L);
  const ModeData md = CauchyData::gaussian_bump(f.grid, 12.0, 2.0, 0).modes[0];
  const Vec ref = propagate_spectral(sd, md, 8.0, 30.0).u;
  const double e1 = (propagate_leapfrog(f.L, md, 0.1, 8.0).u - ref).norm();
  const double e2 = (propagate_leapfrog(f.L, md, 0.05, 8.0).u - ref).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.5);
}

TEST(Wave, LeapfrogRejectsUnstableStep) {
  const Flat3 f;
  const Vec z = Vec::Zero(f.grid.size());
  EXPECT_THROW(Leapfrog(f.L, z, z, 1.1 * f.grid.dr()), std::invalid_argument);
  EXPECT_NO_THROW(Leapfrog(f.L, z, z, f.grid.dr()));
}

TEST(Wave, KernelSeriesNearZero) {
  for (double lam : {1e-13, -1e-13, 0.0}) {
    const auto [c, s] = wave_kernels(lam, 3.0);
    EXPECT_NEAR(c, std::cos(std::sqrt(std::abs(lam)) * 3.0), 1e-11);
    EXPECT_NEAR(s, 3.0, 1e-11);
  }
}

TEST(Wave, GuardIsEnforced) {
  const Flat3 f;
  const SpectralDecomposition sd(f.L);
  const CauchyData d = CauchyData::gaussian_bump(f.grid, 15.0, 1.5, 0);
  const double T = guard_time(f.grid, d, nullptr, 1e-6);
  // exp(-x^2) = 1e-6 at x = sqrt(6 ln 10)
  EXPECT_NEAR(T, 60.0 - 15.0 - 1.5 * std::sqrt(6.0 * std::log(10.0)) - 2.0, 0.1);
  const SpectralPropagator p(sd, d.modes[0].u0, d.modes[0].v0, T);
  EXPECT_THROW(p.state_at(T + 1.0), GuardViolation);
}

// Constant forcing on an eigenvector e: u = a (1 - cos(sqrt(lam) t)) / lam e.
TEST(Wave, DuhamelAgainstClosedForm) {
  const Flat3 f(40.0, 0.2);
  const SpectralDecomposition sd(f.L);
  const int k = 7;
  const Vec e = sd.eigenvector(k);
  const double lam = sd.values()[k], a = 0.3, T_f = 6.0;
  ForcingSpec fs;
  fs.T_f = T_f;
  fs.tau = [a](double) { return a; };
  fs.profiles = {e};
  const Vec z = Vec::Zero(e.size());
  const SpectralPropagator p(sd, z, z, 30.0, &fs, 0, 0.01);
  for (double t : {2.5, T_f}) {
    const double amp = a * (1.0 - std::cos(std::sqrt(lam) * t)) / lam;
    EXPECT_LT((p.state_at(t).u - amp * e).norm() / e.norm(), 1e-9) << "t=" << t;
  }
  // After T_f the solution is free: energy is constant.
  EXPECT_NEAR(p.energy_at(10.0), p.energy_at(20.0), 1e-12 * p.energy_at(10.0));
}
