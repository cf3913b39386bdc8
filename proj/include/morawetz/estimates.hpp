#pragma once

// Weighted norms of spectral cutoffs and resolvents, Hardy/interpolation
// ratios, and localized cutoff decay.
//
// Everything works in orthonormal coordinates u~ = M^{1/2} u, where the
// eigenvectors are the columns of Q and weights are diagonal. A composite
// B = P diag(d) Y then has ||B|| computed from the Gram matrices P^T P and
// Y Y^T (see sandwich_norm), so sweeps over H and z only change d.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/manifold.hpp"
#include "morawetz/mode_operator.hpp"
#include "morawetz/norms.hpp"
#include "morawetz/operator_norm.hpp"
#include "morawetz/spectral.hpp"

namespace morawetz {

enum class DerivativeKind { id, scat_deriv };

inline std::string to_string(DerivativeKind k) { return k == DerivativeKind::id ? "id" : "scat_deriv"; }

// Which radius the weights x = 1/r use: the smoothed r~ (default) or bare r.
// The bare form is only for comparison runs.
enum class RadiusConvention { smoothed, bare };

inline double weight_radius(double r, RadiusConvention rc) {
  return rc == RadiusConvention::smoothed ? WeightFunctions::r_tilde(r) : r;
}

// Node weights x^a = r~^{-a}.
inline Vec x_power(const RadialGrid& grid, double a, RadiusConvention rc = RadiusConvention::smoothed) {
  Vec v(grid.size());
  for (int j = 0; j < grid.size(); ++j) v[j] = std::pow(weight_radius(grid.r()[j], rc), -a);
  return v;
}

// Face gradient in orthonormal coordinates: M_f^{1/2} G M^{-1/2}, (N+1) x N.
inline SparseMat orthonormal_gradient(const RadialGrid& grid, const AngularMode& mode) {
  const int N = grid.size();
  const double dr = grid.dr();
  const Vec& W = grid.W();
  const Vec sm = grid.measure().cwiseSqrt();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * static_cast<std::size_t>(N) + 2);
  if (mode.l > 0) t.emplace_back(0, 0, std::sqrt(0.5 * W[0] * dr) * 2.0 / dr / sm[0]);
  for (int f = 1; f < N; ++f) {
    const double a = std::sqrt(std::sqrt(W[f - 1] * W[f]) * dr) / dr;
    t.emplace_back(f, f, a / sm[f]);
    t.emplace_back(f, f - 1, -a / sm[f - 1]);
  }
  const double rho = std::sqrt(W[N - 1] / grid.W_ghost());
  const double mass = std::sqrt(W[N - 1] * grid.W_ghost()) * dr / (1.0 + rho);
  t.emplace_back(N, N - 1, -std::sqrt(mass) * (1.0 + rho) / dr / sm[N - 1]);
  SparseMat G(N + 1, N);
  G.setFromTriplets(t.begin(), t.end());
  return G;
}

inline Vec face_x_power(const RadialGrid& grid, double a, RadiusConvention rc = RadiusConvention::smoothed) {
  Vec v(grid.size() + 1);
  for (int f = 0; f <= grid.size(); ++f) v[f] = std::pow(weight_radius(std::max(grid.face_r(f), 0.5 * grid.dr()), rc), -a);
  return v;
}

// Left factor P = [face weight] [derivative] diag(node weight) Q, returned as P^T P.
struct LeftFactor {
  Vec node_weight;       // applied first
  DerivativeKind derivative = DerivativeKind::id;
  Vec face_weight;       // applied after the derivative (optional)
};

inline Eigen::MatrixXd left_gram(const SpectralDecomposition& sd, const LeftFactor& lf,
                                 const std::vector<int>& cols = {}) {
  const RadialGrid& grid = sd.grid();
  Eigen::MatrixXd Q = cols.empty() ? sd.q() : sd.q()(Eigen::all, cols);
  Q = lf.node_weight.asDiagonal() * Q;
  if (lf.derivative == DerivativeKind::scat_deriv) {
    Eigen::MatrixXd P = orthonormal_gradient(grid, sd.op().mode()) * Q;
    if (lf.face_weight.size()) P = lf.face_weight.asDiagonal() * P;
    Eigen::MatrixXd G(P.cols(), P.cols());
    G.setZero();
    G.selfadjointView<Eigen::Lower>().rankUpdate(P.transpose());
    return G.selfadjointView<Eigen::Lower>();
  }
  Eigen::MatrixXd G(Q.cols(), Q.cols());
  G.setZero();
  G.selfadjointView<Eigen::Lower>().rankUpdate(Q.transpose());
  return G.selfadjointView<Eigen::Lower>();
}

// Y Y^T for Y = Q^T diag(w).
inline Eigen::MatrixXd right_gram(const SpectralDecomposition& sd, const Vec& w, const std::vector<int>& cols = {}) {
  Eigen::MatrixXd Q = cols.empty() ? sd.q() : sd.q()(Eigen::all, cols);
  Q = w.asDiagonal() * Q;
  Eigen::MatrixXd G(Q.cols(), Q.cols());
  G.setZero();
  G.selfadjointView<Eigen::Lower>().rankUpdate(Q.transpose());
  return G.selfadjointView<Eigen::Lower>();
}

inline void check_conjugation_range(int n, double s, double rho) {
  if (!(s >= 0.0) || !(rho >= 0.0)) throw std::invalid_argument("need s >= 0 and rho >= 0");
  const double cap = std::min(2.0, 0.5 * n);
  if (!(s + rho < cap))
    throw std::invalid_argument("weights out of range: the conjugated estimate requires s + rho < min(2, n/2) = " +
                                std::to_string(cap) + ", got s + rho = " + std::to_string(s + rho));
}

// ||L x^{s+rho} Psi_H x^{-s}|| in the grid measure.
inline NormEstimate conjugated_cutoff_norm(const SpectralDecomposition& sd, const FrequencyCutoff& fc,
                                           DerivativeKind L, double s, double rho,
                                           const PowerIterationOptions& opt = {},
                                           RadiusConvention rc = RadiusConvention::smoothed) {
  check_conjugation_range(sd.grid().n(), s, rho);
  require_window(sd, fc.lambda_lower(), fc.lambda_upper());
  std::vector<int> cols;
  std::vector<double> d;
  for (int k = 0; k < sd.size(); ++k) {
    const double v = fc(sd.values()[k]);
    if (v != 0.0) {
      cols.push_back(k);
      d.push_back(v);
    }
  }
  if (cols.empty()) return {0.0, 0, true};
  LeftFactor lf{x_power(sd.grid(), s + rho, rc), L, Vec()};
  const Eigen::MatrixXd Gp = left_gram(sd, lf, cols);
  const Eigen::MatrixXd Gy = right_gram(sd, x_power(sd.grid(), -s, rc), cols);
  Eigen::VectorXcd dv(static_cast<int>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) dv[static_cast<int>(i)] = d[i];
  return sandwich_norm(Gp, dv, Gy, opt);
}

// Precomputed Gram matrices for ||P R(z) Y|| with R(z) = (H^2 L - z)^{-1}.
class ResolventNormSweep {
 public:
  // right_weight empty: Y is the identity.
  ResolventNormSweep(const SpectralDecomposition& sd, const LeftFactor& left, const Vec& right_weight)
      : sd_(&sd) {
    if (!sd.complete()) throw std::invalid_argument("resolvent sweep needs the full decomposition");
    Gp_ = left_gram(sd, left);
    if (right_weight.size()) Gy_ = right_gram(sd, right_weight);
  }

  NormEstimate norm(double H, std::complex<double> z, const PowerIterationOptions& opt = {}) const {
    if (z.imag() == 0.0) throw std::domain_error("resolvent norm: z must be off the real axis");
    Eigen::VectorXcd d(sd_->size());
    for (int k = 0; k < sd_->size(); ++k) d[k] = 1.0 / (H * H * sd_->values()[k] - z);
    return sandwich_norm(Gp_, d, Gy_, opt);
  }

 private:
  const SpectralDecomposition* sd_;
  Eigen::MatrixXd Gp_, Gy_;
};

// The fixed sweep grids.
inline std::vector<double> default_H_list() { return {2, 4, 8, 16, 32, 64}; }
inline std::vector<std::complex<double>> default_z_contour() {
  return {{1, 0.5}, {1, -0.5}, {-1, 0.5}, {-1, -0.5}, {2, 0.5}, {2, -0.5}, {-2, 0.5}, {-2, -0.5}};
}

// ||x^{s+theta} u|| / (||x^s grad u||^theta ||x^s u||^{1-theta}), x = 1/r~.
inline double hardy_ratio(const RadialGrid& grid, const AngularMode& mode, const Vec& u, double s, double theta) {
  const RadialWeight xs = [s](double r) { return std::pow(WeightFunctions::r_tilde(r), -s); };
  const RadialWeight xst = [s, theta](double r) { return std::pow(WeightFunctions::r_tilde(r), -(s + theta)); };
  const double num = weighted_norm(grid, u, xst);
  const double grad = gradient_norm(grid, mode, u, xs);
  const double base = weighted_norm(grid, u, xs);
  const double den = std::pow(grad, theta) * std::pow(base, 1.0 - theta);
  if (!(den > 0.0)) throw std::domain_error("hardy_ratio: zero denominator");
  return num / den;
}

// ||x^s grad u|| / (||(Delta + V) u||^{(1+s)/2} ||u||^{(1-s)/2}).
inline double interpolation_bound_ratio(const ModeOperator& L, const Vec& u, double s) {
  const RadialGrid& grid = L.grid();
  const RadialWeight xs = [s](double r) { return std::pow(WeightFunctions::r_tilde(r), -s); };
  const double num = gradient_norm(grid, L.mode(), u, xs);
  const double den = std::pow(weighted_norm(grid, L.apply(u)), 0.5 * (1.0 + s)) *
                     std::pow(weighted_norm(grid, u), 0.5 * (1.0 - s));
  if (!(den > 0.0)) throw std::domain_error("interpolation_bound_ratio: zero denominator");
  return num / den;
}

// Cutoffs for the localized decay sweep: phi(sigma) is 1 on [0, 1/2] and
// vanishes for sigma >= 1; chi(sigma) is 1 on [0, 2] and vanishes for sigma >= 4,
// so supp phi and supp (1 - chi) are separated by t.
inline double localized_phi(double sigma) { return 1.0 - unit_step((sigma - 0.5) / 0.5); }
inline double localized_chi(double sigma) { return 1.0 - unit_step((sigma - 2.0) / 2.0); }

struct LocalizedSample {
  double t = 0.0;
  double norm = 0.0;
};

// ||L r~^m phi(r/t) psi(L) (1 - chi(r/t)) r~^m|| for each t (psi at H = 1).
inline std::vector<LocalizedSample> localized_cutoff_decay(const SpectralDecomposition& sd, const FrequencyCutoff& fc,
                                                           DerivativeKind L, int m_weight,
                                                           const std::vector<double>& t_samples,
                                                           const std::function<double(double)>& phi = localized_phi,
                                                           const std::function<double(double)>& chi = localized_chi,
                                                           const PowerIterationOptions& opt = {}) {
  require_window(sd, fc.lambda_lower(), fc.lambda_upper());
  const RadialGrid& grid = sd.grid();
  std::vector<int> cols;
  Eigen::VectorXcd d;
  {
    std::vector<double> dv;
    for (int k = 0; k < sd.size(); ++k) {
      const double v = fc(sd.values()[k]);
      if (v != 0.0) {
        cols.push_back(k);
        dv.push_back(v);
      }
    }
    d.resize(static_cast<int>(dv.size()));
    for (std::size_t i = 0; i < dv.size(); ++i) d[static_cast<int>(i)] = dv[i];
  }
  std::vector<LocalizedSample> out;
  for (double t : t_samples) {
    Vec left(grid.size()), right(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
      const double r = grid.r()[j];
      const double rm = std::pow(WeightFunctions::r_tilde(r), m_weight);
      const double p = phi(r / t), q = 1.0 - chi(r / t);
      if (p != 0.0 && q != 0.0)
        throw std::invalid_argument("localized_cutoff_decay: supp phi meets supp (1 - chi) at r = " +
                                    std::to_string(r));
      left[j] = rm * p;
      right[j] = rm * q;
    }
    LocalizedSample smp{t, 0.0};
    if (!cols.empty() && left.cwiseAbs().maxCoeff() > 0.0 && right.cwiseAbs().maxCoeff() > 0.0) {
      const Eigen::MatrixXd Gp = left_gram(sd, LeftFactor{left, L, Vec()}, cols);
      const Eigen::MatrixXd Gy = right_gram(sd, right, cols);
      smp.norm = sandwich_norm(Gp, d, Gy, opt).norm;
    }
    out.push_back(smp);
  }
  return out;
}

}  // namespace morawetz
