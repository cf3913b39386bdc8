#pragma once

// Morawetz multipliers A_F = (F d_r - d_r^* F) / 2 and the model right-hand
// sides of their commutators with Delta_g + V.
//
// A_F is discretized as (D - D^+) / 2 with D = diag(F) * (centered difference)
// and D^+ = M^{-1} D^T M its adjoint in the grid measure, so skew-adjointness
// holds by construction.

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/jet.hpp"
#include "morawetz/manifold.hpp"
#include "morawetz/mode_operator.hpp"
#include "morawetz/norms.hpp"
#include "morawetz/smooth.hpp"
#include "morawetz/test_functions.hpp"

namespace morawetz {

enum class MultiplierKind { power, log_pA, log_bump_ppA };

inline std::string to_string(MultiplierKind k) {
  switch (k) {
    case MultiplierKind::power: return "power";
    case MultiplierKind::log_pA: return "log_pA";
    case MultiplierKind::log_bump_ppA: return "log_bump_ppA";
  }
  return "?";
}

inline constexpr double kKappaMax = 0.125;

struct MultiplierSpec {
  MultiplierKind kind = MultiplierKind::power;
  double s = 1.0;        // power: F = r^s
  double kappa = 0.0;    // log_bump_ppA: F = 1 - 1/log r~ + kappa * slow_step(r / Lambda)
  double Lambda = 64.0;
  bool cutoff = true;    // multiply F by chi(r)

  static MultiplierSpec power(double s, bool cutoff = true) {
    MultiplierSpec m;
    m.kind = MultiplierKind::power;
    m.s = s;
    m.cutoff = cutoff;
    return m;
  }
  static MultiplierSpec log_pA(bool cutoff = true) {
    MultiplierSpec m;
    m.kind = MultiplierKind::log_pA;
    m.cutoff = cutoff;
    return m;
  }
  static MultiplierSpec log_bump_ppA(double kappa, double Lambda, bool cutoff = true) {
    MultiplierSpec m;
    m.kind = MultiplierKind::log_bump_ppA;
    m.kappa = kappa;
    m.Lambda = Lambda;
    m.cutoff = cutoff;
    return m;
  }

  // Exponent used for the weights r~^{(s-4)/2} that normalize residuals.
  double weight_exponent() const { return kind == MultiplierKind::power ? s : 0.0; }

  void validate() const {
    switch (kind) {
      case MultiplierKind::power:
        if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("multiplier: need 0 <= s <= 1");
        break;
      case MultiplierKind::log_pA:
        break;
      case MultiplierKind::log_bump_ppA: {
        if (!(kappa > 0.0 && kappa <= kKappaMax))
          throw std::invalid_argument("multiplier: need 0 < kappa <= 1/8");
        const double k = std::log2(Lambda);
        if (!(Lambda >= 1.0) || k != std::round(k))
          throw std::invalid_argument("multiplier: Lambda must be a power of 2");
        break;
      }
    }
  }

  // F (including the cutoff when requested) as a Taylor jet in r.
  template <int K>
  Jet<K> profile(const WeightFunctions& wf, const Jet<K>& r) const {
    Jet<K> F;
    switch (kind) {
      case MultiplierKind::power:
        F = s == 0.0 ? Jet<K>(1.0) : pow(r, s);
        break;
      case MultiplierKind::log_pA:
        F = 1.0 - 1.0 / log(WeightFunctions::r_tilde(r));
        break;
      case MultiplierKind::log_bump_ppA:
        F = 1.0 - 1.0 / log(WeightFunctions::r_tilde(r)) + kappa * slow_step(r / Lambda);
        break;
    }
    return cutoff ? wf.chi(r) * F : F;
  }

  double operator()(const WeightFunctions& wf, double r) const { return profile(wf, Jet<0>(r)).value(); }
};

// Zeroth-order coefficient of the flat-end commutator as stated for each family:
// F = r^s gives (n-1)/2 (1-s)(n+s-3) r^{s-3}; the log families give (n-1)(n-3)/2 r^{-3}.
inline double comm_zeroth_coefficient(int n, MultiplierKind kind, double s = 0.0) {
  if (kind == MultiplierKind::power) return 0.5 * (n - 1) * (1.0 - s) * (n + s - 3.0);
  return 0.5 * (n - 1) * (n - 3.0);
}

struct MultiplierOptions {
  bool antisymmetrize = true;  // false keeps only D (negative control)
};

// m-weighted adjoint M^{-1} B^T M.
inline SparseMat m_adjoint(const SparseMat& B, const Vec& m) {
  SparseMat Bt = B.transpose();
  return m.cwiseInverse().asDiagonal() * Bt * m.asDiagonal();
}

// Multiplier for given node values of F.
inline SparseMat assemble_multiplier(const RadialGrid& grid, const AngularMode& mode, const Vec& F,
                                     const MultiplierOptions& opt = {}) {
  const int N = grid.size();
  const double h = 0.5 / grid.dr();
  const double axis_parity = mode.l == 0 ? 1.0 : -1.0;
  const double rho = std::sqrt(grid.W()[N - 1] / grid.W_ghost());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    const double c = F[j] * h;
    if (j > 0) t.emplace_back(j, j - 1, -c);
    if (j + 1 < N) t.emplace_back(j, j + 1, c);
  }
  t.emplace_back(0, 0, -axis_parity * F[0] * h);
  t.emplace_back(N - 1, N - 1, -rho * F[N - 1] * h);
  SparseMat D(N, N);
  D.setFromTriplets(t.begin(), t.end());
  if (!opt.antisymmetrize) return D;
  SparseMat A = 0.5 * (D - m_adjoint(D, grid.measure()));
  A.prune(0.0);
  return A;
}

inline Vec multiplier_values(const RadialGrid& grid, const WeightFunctions& wf, const MultiplierSpec& ms) {
  Vec F(grid.size());
  for (int j = 0; j < grid.size(); ++j) F[j] = ms(wf, grid.r()[j]);
  return F;
}

inline SparseMat assemble_multiplier(const RadialGrid& grid, const AngularMode& mode, const WeightFunctions& wf,
                                     const MultiplierSpec& ms, const MultiplierOptions& opt = {}) {
  ms.validate();
  return assemble_multiplier(grid, mode, multiplier_values(grid, wf, ms), opt);
}

// ||A + A^+|| / ||A|| in the max-entry norm of M A.
inline double relative_skew_defect(const SparseMat& A, const Vec& m) {
  SparseMat MA = m.asDiagonal() * A;
  SparseMat sym = MA + SparseMat(MA.transpose());
  double num = 0.0, den = 0.0;
  for (int k = 0; k < sym.outerSize(); ++k)
    for (SparseMat::InnerIterator it(sym, k); it; ++it) num = std::max(num, std::abs(it.value()));
  for (int k = 0; k < MA.outerSize(); ++k)
    for (SparseMat::InnerIterator it(MA, k); it; ++it) den = std::max(den, std::abs(it.value()));
  return den > 0.0 ? num / den : 0.0;
}

inline SparseMat commutator(const SparseMat& L, const SparseMat& A) {
  if (L.rows() != A.rows() || L.cols() != A.cols() || L.rows() != L.cols())
    throw std::invalid_argument("commutator: dimension mismatch");
  SparseMat C = SparseMat(L * A) - SparseMat(A * L);
  C.prune(0.0);
  return C;
}

// Pieces of the flat-end model for one node: the coefficient c_F of the
// zeroth-order term (from F alone) and the size of F itself.
struct CommutatorCoefficients {
  double F = 0.0, dF = 0.0, cF = 0.0;
};

// With G = -F' - (n-1) F / r, the zeroth-order term of [Delta, A_F] on the
// exact end is c_F = (G'' + (n-1) G' / r) / 2.
inline CommutatorCoefficients comm_coefficients(int n, const WeightFunctions& wf, const MultiplierSpec& ms,
                                                double r) {
  const Jet<3> rj = Jet<3>::variable(r);
  const Jet<3> F = ms.profile(wf, rj);
  const Jet<2> G = -differentiate(F) - (n - 1.0) * truncate<2>(F) / truncate<2>(rj);
  CommutatorCoefficients c;
  c.F = F.derivative(0);
  c.dF = F.derivative(1);
  c.cF = 0.5 * (G.derivative(2) + (n - 1.0) * G.derivative(1) / r);
  return c;
}

// Model right-hand side: the flux form of 2 d_r^* F' d_r (same faces and
// closures as the Laplacian), plus 2 F mu / (a^2 r^3) + c_F - F V'.
inline SparseMat assemble_comm_rhs(const RadialGrid& grid, const AngularMode& mode, const WeightFunctions& wf,
                                   const MultiplierSpec& ms) {
  ms.validate();
  const ManifoldSpec& spec = grid.spec();
  const int N = grid.size();
  const double dr = grid.dr();
  const Vec& W = grid.W();
  const Vec& m = grid.measure();
  const Vec& r = grid.r();
  const double a = spec.warp.end_slope();
  auto dF_at = [&](double rf) {
    return ms.profile(wf, Jet<1>::variable(std::max(rf, 0.25 * dr))).derivative(1);
  };

  Vec kd = Vec::Zero(N), ko = Vec::Zero(N - 1);
  for (int f = 1; f < N; ++f) {
    const double c = 2.0 * dF_at(grid.face_r(f)) * std::sqrt(W[f - 1] * W[f]) / dr;
    kd[f - 1] += c;
    kd[f] += c;
    ko[f - 1] = -c;
  }
  if (mode.l > 0) kd[0] += 2.0 * dF_at(0.0) * 2.0 * W[0] / dr;
  const double rho = std::sqrt(W[N - 1] / grid.W_ghost());
  kd[N - 1] += 2.0 * dF_at(grid.r_max()) * std::sqrt(W[N - 1] * grid.W_ghost()) * (1.0 + rho) / dr;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    const CommutatorCoefficients cc = comm_coefficients(spec.n, wf, ms, r[j]);
    const double dV = spec.potential.eval(Jet<1>::variable(r[j])).derivative(1);
    const double zeroth = 2.0 * cc.F * mode.mu / (a * a * r[j] * r[j] * r[j]) + cc.cF - cc.F * dV;
    t.emplace_back(j, j, kd[j] / m[j] + zeroth);
    if (j > 0) t.emplace_back(j, j - 1, ko[j - 1] / m[j]);
    if (j + 1 < N) t.emplace_back(j, j + 1, ko[j] / m[j]);
  }
  SparseMat R(N, N);
  R.setFromTriplets(t.begin(), t.end());
  return R;
}

// Largest |e_3| = |F - 1| and |e_4| = |c_F / ((n-1)(n-3)/(2 r^3)) - 1| over nodes r >= r_from
// (log families; e_4 is skipped for n = 3 where the reference coefficient vanishes).
struct AbsorptionReport {
  double max_e3 = 0.0, max_e4 = 0.0;
  bool e4_defined = false;
  bool ok(double threshold = 0.5) const { return max_e3 < threshold && (!e4_defined || max_e4 < threshold); }
};

inline AbsorptionReport absorption_report(const RadialGrid& grid, const WeightFunctions& wf,
                                          const MultiplierSpec& ms, double r_from) {
  AbsorptionReport rep;
  const int n = grid.n();
  rep.e4_defined = n > 3;
  for (int j = 0; j < grid.size(); ++j) {
    const double r = grid.r()[j];
    if (r < r_from) continue;
    const CommutatorCoefficients cc = comm_coefficients(n, wf, ms, r);
    rep.max_e3 = std::max(rep.max_e3, std::abs(cc.F - 1.0));
    if (rep.e4_defined) {
      const double ref = 0.5 * (n - 1) * (n - 3.0) / (r * r * r);
      rep.max_e4 = std::max(rep.max_e4, std::abs(cc.cF / ref - 1.0));
    }
  }
  return rep;
}

// |<(C - R) u, u>_m| / (||r~^{(s-4)/2} u||^2 + ||r~^{(s-4)/2} u'||^2).
inline double commutator_residual(const RadialGrid& grid, const AngularMode& mode, const SparseMat& C,
                                  const SparseMat& R, const Vec& u, double s) {
  const Vec d = C * u - R * u;
  const double num = std::abs(m_dot(grid, d, u));
  const double p = 0.5 * (s - 4.0);
  const RadialWeight wt = [p](double r) { return std::pow(WeightFunctions::r_tilde(r), p); };
  const double un = weighted_norm(grid, u, wt);
  const double den = un * un + radial_gradient_norm2(grid, mode, u, wt) + angular_gradient_norm2(grid, mode, u, wt);
  return den > 0.0 ? num / den : 0.0;
}

// Largest residual over a family of test functions sampled on the grid.
inline double max_commutator_residual(const ModeOperator& L, const WeightFunctions& wf, const MultiplierSpec& ms,
                                      const std::vector<GaussianSum>& family) {
  const RadialGrid& grid = L.grid();
  const SparseMat A = assemble_multiplier(grid, L.mode(), wf, ms);
  const SparseMat C = commutator(L.matrix(), A);
  const SparseMat R = assemble_comm_rhs(grid, L.mode(), wf, ms);
  double worst = 0.0;
  for (const auto& g : family)
    worst = std::max(worst, commutator_residual(grid, L.mode(), C, R, g.sample(grid), ms.weight_exponent()));
  return worst;
}

}  // namespace morawetz
