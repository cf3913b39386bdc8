#pragma once

// Operator norms by power iteration, and log-log exponent fits.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace morawetz {

struct PowerIterationOptions {
  double tol = 1e-6;  // relative change of the norm estimate
  int max_iter = 10000;
  std::uint64_t seed = 42;
};

struct NormEstimate {
  double norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline Eigen::VectorXd random_start(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Largest eigenvalue of a Hermitian positive semidefinite operator T given
// by its action, via power iteration with Rayleigh quotients.
inline NormEstimate largest_eigenvalue(int n, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& T,
                                       const PowerIterationOptions& opt = {}) {
  NormEstimate est;
  if (n == 0) return est;
  Eigen::VectorXd x = random_start(n, opt.seed);
  x.normalize();
  double prev = -1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd y = T(x);
    const double lambda = x.dot(y);
    const double ny = y.norm();
    est.iterations = it;
    est.norm = lambda;
    if (ny == 0.0) {
      est.norm = 0.0;
      est.converged = true;
      return est;
    }
    if (prev >= 0.0 && std::abs(lambda - prev) <= opt.tol * std::abs(lambda)) {
      est.converged = true;
      return est;
    }
    prev = lambda;
    x = y / ny;
  }
  return est;
}

// Operator norm of B from the action of B^* B (in orthonormal coordinates).
inline NormEstimate operator_norm(int n, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& BtB,
                                  const PowerIterationOptions& opt = {}) {
  NormEstimate est = largest_eigenvalue(n, BtB, opt);
  est.norm = std::sqrt(std::max(est.norm, 0.0));
  return est;
}

// ||P D Y|| for a diagonal (complex) D, given the Gram matrices Gp = P^* P and
// Gy = Y Y^*: the square of the norm is the top eigenvalue of D^* Gp D Gy,
// which is similar to the Hermitian Gy^{1/2} D^* Gp D Gy^{1/2}. The iteration
// works in the Gy-weighted inner product so each step yields a Rayleigh quotient.
// An empty Gy stands for the identity.
inline NormEstimate sandwich_norm(const Eigen::MatrixXd& Gp, const Eigen::VectorXcd& d, const Eigen::MatrixXd& Gy,
                                  const PowerIterationOptions& opt = {}) {
  using CV = Eigen::VectorXcd;
  const int n = static_cast<int>(d.size());
  NormEstimate est;
  if (n == 0 || d.cwiseAbs().maxCoeff() == 0.0) {
    est.converged = true;
    return est;
  }
  const bool identity_y = Gy.size() == 0;
  auto apply_real = [](const Eigen::MatrixXd& G, const CV& x) -> CV {
    const Eigen::VectorXd re = G * x.real();
    const Eigen::VectorXd im = G * x.imag();
    CV out(x.size());
    out.real() = re;
    out.imag() = im;
    return out;
  };
  CV x = random_start(n, opt.seed).cast<std::complex<double>>();
  CV g = identity_y ? x : apply_real(Gy, x);
  double scale = std::sqrt(std::abs(x.dot(g)));
  x /= scale;
  g /= scale;
  double prev = -1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    // y = D^* Gp D (Gy x) = D^* Gp D g
    CV y = d.cwiseProduct(g);
    y = apply_real(Gp, y);
    y = d.conjugate().cwiseProduct(y);
    const double lambda = std::real(g.dot(y));  // <x, T x>_Gy with <x, x>_Gy = 1
    est.iterations = it;
    est.norm = std::sqrt(std::max(lambda, 0.0));
    if (lambda <= 0.0) {
      est.norm = 0.0;
      est.converged = true;
      return est;
    }
    if (prev >= 0.0 && std::abs(lambda - prev) <= opt.tol * lambda) {
      est.converged = true;
      return est;
    }
    prev = lambda;
    CV gy = identity_y ? y : apply_real(Gy, y);
    const double ny = std::sqrt(std::abs(y.dot(gy)));
    x = y / ny;
    g = gy / ny;
  }
  return est;
}

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least-squares line through (log scale, log value).
inline PowerFit fit_decay_exponent(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("fit_decay_exponent: need at least 2 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [scale, value] : samples) {
    if (!(scale > 0.0) || !(value > 0.0))
      throw std::invalid_argument("fit_decay_exponent: samples must be positive");
    const double x = std::log(scale), y = std::log(value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(samples.size());
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_decay_exponent: scales must not all coincide");
  PowerFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace morawetz
