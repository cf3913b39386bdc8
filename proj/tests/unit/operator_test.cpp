#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "morawetz/manifold.hpp"
#include "morawetz/mode_operator.hpp"
#include "morawetz/multiplier.hpp"
#include "morawetz/spectral.hpp"
#include "morawetz/tridiagonal_eigen.hpp"

using namespace morawetz;

namespace {

ManifoldSpec flat(int n) {
  ManifoldSpec s;
  s.n = n;
  s.R = 2.0;
  return s;
}

ManifoldSpec trapped() {
  ManifoldSpec s;
  s.n = 4;
  s.warp = Warp::trapped_bump(0.5, 4.0, 1.0);
  s.r_flat = 8.0;
  s.R = 10.0;
  return s;
}

// Dimension of degree-l harmonic polynomials on R^n, counted from monomials.
std::uint64_t harmonic_dim(int n, int l) {
  auto monomials = [n](int d) -> std::uint64_t {
    if (d < 0) return 0;
    // stars and bars by recursion, independent of the closed form
    std::vector<std::uint64_t> c(d + 1, 0);
    c[0] = 1;
    for (int v = 0; v < n; ++v)
      for (int k = 1; k <= d; ++k) c[k] += c[k - 1];
    return c[d];
  };
  return monomials(l) - monomials(l - 2);
}

}  // namespace

TEST(AngularMode, EigenvalueAndMultiplicity) {
  for (int n : {3, 4, 5})
    for (int l = 0; l <= 6; ++l) {
      const AngularMode m = angular_mode(n, l);
      EXPECT_DOUBLE_EQ(m.mu, l * (l + n - 2.0));
      EXPECT_EQ(m.multiplicity, harmonic_dim(n, l)) << "n=" << n << " l=" << l;
    }
  EXPECT_EQ(angular_mode(3, 4).multiplicity, 9u);  // 2l + 1
}

TEST(Manifold, TrappedBumpCriticalRadii) {
  const ManifoldSpec s = trapped();
  // Independent oracle: sign changes of a centered difference of w, refined by bisection.
  auto dw = [&](double r) { return (s.w(r + 1e-6) - s.w(r - 1e-6)) / 2e-6; };
  std::vector<double> roots;
  for (double a = 3.01; a < 4.99; a += 0.01) {
    double lo = a, hi = a + 0.01;
    if (dw(lo) * dw(hi) > 0.0) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dw(lo) * dw(mid) <= 0.0 ? hi : lo) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  const std::vector<double> rep = trapping_report(s);
  ASSERT_EQ(rep.size(), roots.size());
  ASSERT_FALSE(roots.empty());
  for (std::size_t i = 0; i < roots.size(); ++i) EXPECT_NEAR(rep[i], roots[i], 1e-6);
}

TEST(Manifold, RejectsBadSpecs) {
  ManifoldSpec s = flat(2);
  EXPECT_THROW(s.validate(), ConfigError);
  s = trapped();
  s.r_flat = 4.5;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Manifold, JsonRejectsUnknownFieldWithPath) {
  const auto j = nlohmann::json::parse(R"({"n": 4, "warp": {"kind": "euclidean", "bogus": 1}, "R": 10})");
  try {
    manifold_from_json(j, "geometries[0].manifold");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("geometries[0].manifold.warp.bogus"), std::string::npos) << e.what();
  }
}

TEST(Laplacian, SymmetricAndNonnegative) {
  const RadialGrid g(trapped(), 400, 0.1);
  for (int l = 0; l <= 3; ++l) {
    const ModeOperator L = assemble_laplacian(g, angular_mode(4, l));
    EXPECT_LT(L.relative_asymmetry(), 1e-13);
    EXPECT_GE(L.min_eigenvalue(), -1e-10 * L.max_eigenvalue());
  }
}

// Flat n = 3, l = 0: eigenfunctions sin(k r) / r with k = m pi / r_max.
TEST(Laplacian, FlatThreeDimensionalSpectrum) {
  const double r_max = 40.0;
  for (double dr : {0.1, 0.05}) {
    const RadialGrid g(flat(3), static_cast<int>(std::lround(r_max / dr)), dr);
    const ModeOperator L = assemble_laplacian(g, angular_mode(3, 0));
    const SpectralDecomposition sd(L);
    for (int m = 1; m <= 5; ++m) {
      const double k = m * M_PI / r_max;
      // second-order stencil on r u: lambda_h = (2 sin(k dr / 2) / dr)^2
      const double exact = k * k, discrete = std::pow(2.0 * std::sin(0.5 * k * dr) / dr, 2);
      EXPECT_NEAR(sd.values()[m - 1], discrete, 1e-10 * exact);
      EXPECT_LT(std::abs(sd.values()[m - 1] - exact) / exact, 0.1 * dr * dr);
    }
  }
}

// Flat n = 4, l = 0: eigenfunctions J_1(k r) / r with J_1(k r_max) = 0.
TEST(Laplacian, FlatFourDimensionalBesselSpectrum) {
  const double r_max = 40.0;
  double prev = 0.0;
  for (double dr : {0.2, 0.1, 0.05}) {
    const RadialGrid g(flat(4), static_cast<int>(std::lround(r_max / dr)), dr);
    const SpectralDecomposition sd(assemble_laplacian(g, angular_mode(4, 0)));
    double err = 0.0;
    for (int m = 1; m <= 5; ++m) {
      const double k = boost::math::cyl_bessel_j_zero(1.0, m) / r_max;
      err = std::max(err, std::abs(sd.values()[m - 1] - k * k) / (k * k));
    }
    if (prev > 0.0) EXPECT_GT(prev / err, 3.0) << "dr=" << dr;  // second order
    EXPECT_LT(err, 1e-2);
    prev = err;
  }
}

TEST(Laplacian, DirectStencilIsNotSymmetricOnWarpedGeometry) {
  const RadialGrid g(trapped(), 400, 0.1);
  const ModeOperator L = assemble_laplacian(g, angular_mode(4, 1), {false});
  EXPECT_GT(L.relative_asymmetry(), 1e-10);
}

TEST(TridiagonalEigen, MatchesDenseSolver) {
  const int n = 60;
  Eigen::VectorXd d(n), e(n - 1);
  for (int i = 0; i < n; ++i) d[i] = 2.0 + std::sin(1.3 * i);
  for (int i = 0; i < n - 1; ++i) e[i] = -1.0 + 0.3 * std::cos(0.7 * i);
  Eigen::MatrixXd T = d.asDiagonal();
  for (int i = 0; i < n - 1; ++i) T(i, i + 1) = T(i + 1, i) = e[i];
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(T);
  const TridiagonalEigen te = tridiagonal_eigen(d, e);
  ASSERT_EQ(te.values.size(), n);
  EXPECT_LT((te.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
  // Windowed request returns the same values on the window.
  const double lo = ref.eigenvalues()[10], hi = ref.eigenvalues()[20];
  EigenRequest req;
  req.range = EigenRange::value_window;
  req.lower = lo - 1e-9;
  req.upper = hi + 1e-9;
  const TridiagonalEigen tw = tridiagonal_eigen(d, e, req);
  ASSERT_EQ(tw.values.size(), 11);
  EXPECT_LT((tw.values - ref.eigenvalues().segment(10, 11)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Multiplier, SkewAdjointInGridMeasure) {
  const RadialGrid g(trapped(), 400, 0.1);
  const WeightFunctions wf(g.spec());
  for (const MultiplierSpec& ms : {MultiplierSpec::power(0.5), MultiplierSpec::power(1.0), MultiplierSpec::log_pA()}) {
    const SparseMat A = assemble_multiplier(g, angular_mode(4, 1), wf, ms);
    EXPECT_LT(relative_skew_defect(A, g.measure()), 1e-13);
  }
}
