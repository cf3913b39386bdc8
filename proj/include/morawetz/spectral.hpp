#pragma once

// Exact functional calculus for a flux-form ModeOperator.
//
// L = M^{-1} K is similar to the symmetric tridiagonal S = M^{-1/2} K M^{-1/2};
// with S = Q diag(lambda) Q^T the m-orthonormal eigenvectors of L are
// v_k = M^{-1/2} q_k, and f(L) u = M^{-1/2} Q f(lambda) Q^T M^{1/2} u.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include "morawetz/mode_operator.hpp"
#include "morawetz/smooth.hpp"
#include "morawetz/tridiagonal_eigen.hpp"

namespace morawetz {

using CVec = Eigen::VectorXcd;

class SpectralDecomposition {
 public:
  // All eigenpairs.
  explicit SpectralDecomposition(const ModeOperator& L) : op_(&L), complete_(true) {
    Vec d, e;
    L.symmetric_tridiagonal(d, e);
    init(tridiagonal_eigen(d, e));
  }

  // Eigenpairs with lambda in (lower, upper]; enough for any spectral
  // multiplier supported in that window.
  SpectralDecomposition(const ModeOperator& L, double lower, double upper) : op_(&L), complete_(false) {
    Vec d, e;
    L.symmetric_tridiagonal(d, e);
    EigenRequest req;
    req.range = EigenRange::value_window;
    req.lower = lower;
    req.upper = upper;
    init(tridiagonal_eigen(d, e, req));
    window_lower_ = lower;
    window_upper_ = upper;
  }

  const ModeOperator& op() const { return *op_; }
  const RadialGrid& grid() const { return op_->grid(); }
  bool complete() const { return complete_; }
  int size() const { return static_cast<int>(values_.size()); }
  double window_lower() const { return window_lower_; }
  double window_upper() const { return window_upper_; }

  const Vec& values() const { return values_; }
  // Orthonormal eigenvectors q_k of S (columns).
  const Eigen::MatrixXd& q() const { return Q_; }
  const Vec& sqrt_mass() const { return sqrt_m_; }

  // m-orthonormal eigenvector v_k of L.
  Vec eigenvector(int k) const { return Q_.col(k).cwiseQuotient(sqrt_m_); }

  // <u, v_k>_m for all k.
  Vec coefficients(const Vec& u) const { return Q_.transpose() * u.cwiseProduct(sqrt_m_); }
  Vec synthesize(const Vec& c) const { return (Q_ * c).cwiseQuotient(sqrt_m_); }

  // f(L) u for a real multiplier f; exact when f vanishes off the window.
  Vec apply(const std::function<double(double)>& f, const Vec& u) const {
    Vec c = coefficients(u);
    for (int k = 0; k < size(); ++k) c[k] *= f(values_[k]);
    return synthesize(c);
  }

  CVec apply_complex(const std::function<std::complex<double>(double)>& f, const Vec& u) const {
    const Vec c = coefficients(u);
    CVec cc(size());
    for (int k = 0; k < size(); ++k) cc[k] = f(values_[k]) * c[k];
    CVec out = Q_.cast<std::complex<double>>() * cc;
    for (int j = 0; j < out.size(); ++j) out[j] /= sqrt_m_[j];
    return out;
  }

  // max_k ||L v_k - lambda_k v_k||_m / (1 + lambda_k).
  double max_relative_residual() const {
    double worst = 0.0;
    for (int k = 0; k < size(); ++k) {
      const Vec v = eigenvector(k);
      const Vec r = op_->apply(v) - values_[k] * v;
      worst = std::max(worst, std::sqrt(r.cwiseAbs2().dot(op_->mass())) / (1.0 + std::abs(values_[k])));
    }
    return worst;
  }

  // max_{jk} |<v_j, v_k>_m - delta_jk|.
  double orthonormality_defect() const {
    Eigen::MatrixXd G = Q_.transpose() * Q_;
    G -= Eigen::MatrixXd::Identity(size(), size());
    return G.cwiseAbs().maxCoeff();
  }

 private:
  void init(TridiagonalEigen te) {
    values_ = std::move(te.values);
    Q_ = std::move(te.vectors);
    sqrt_m_ = op_->mass().cwiseSqrt();
  }

  const ModeOperator* op_;
  bool complete_;
  double window_lower_ = -INFINITY, window_upper_ = INFINITY;
  Vec values_;
  Eigen::MatrixXd Q_;
  Vec sqrt_m_;
};

enum class WindowFamily { psi, psi_tilde };

// psi(H^2 lambda) with the fixed window family; shift moves the window to
// frequencies scaled by `shift` (shift = 1 is the standard window).
struct FrequencyCutoff {
  double H = 1.0;
  WindowFamily family = WindowFamily::psi;
  double shift = 1.0;

  double operator()(double lambda) const {
    const double x = H * H * lambda / shift;
    return family == WindowFamily::psi ? frequency_window(x) : enlarged_window(x);
  }

  FrequencyCutoff enlarged() const { return {H, WindowFamily::psi_tilde, shift}; }

  // Spectral window containing the support.
  double lambda_lower() const { return (family == WindowFamily::psi ? 0.25 : 0.125) * shift / (H * H); }
  double lambda_upper() const { return (family == WindowFamily::psi ? 4.0 : 8.0) * shift / (H * H); }
};

inline void require_window(const SpectralDecomposition& sd, double lo, double hi) {
  if (!sd.complete() && (lo < sd.window_lower() || hi > sd.window_upper()))
    throw std::invalid_argument("spectral decomposition window does not cover the multiplier support");
}

inline Vec spectral_cutoff_apply(const SpectralDecomposition& sd, const FrequencyCutoff& fc, const Vec& u) {
  require_window(sd, fc.lambda_lower(), fc.lambda_upper());
  return sd.apply([&](double l) { return fc(l); }, u);
}

// (H^2 L - z)^{-1} f; requires the full decomposition.
inline CVec resolvent_apply(const SpectralDecomposition& sd, const FrequencyCutoff& fc, std::complex<double> z,
                            const Vec& f) {
  const double H = fc.H;
  if (z.imag() == 0.0) throw std::domain_error("resolvent_apply: z must be off the real axis");
  if (!sd.complete()) throw std::invalid_argument("resolvent_apply: needs the full decomposition");
  return sd.apply_complex([&](double l) { return 1.0 / (H * H * l - z); }, f);
}

}  // namespace morawetz
