#pragma once

// Weighted L^2 norms in the grid measure. Node quantities are weighted at
// r_j, face gradients at the face radii f * dr.

#include <cmath>
#include <functional>

#include "morawetz/grid.hpp"
#include "morawetz/mode_operator.hpp"

namespace morawetz {

using RadialWeight = std::function<double(double)>;

// sqrt(sum_j weight(r_j)^2 u_j^2 m_j)
inline double weighted_norm(const RadialGrid& grid, const Vec& u, const RadialWeight& weight) {
  const Vec& r = grid.r();
  const Vec& m = grid.measure();
  double s = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const double a = weight(r[j]) * u[j];
    s += a * a * m[j];
  }
  return std::sqrt(s);
}

inline double weighted_norm(const RadialGrid& grid, const Vec& u) {
  return std::sqrt(u.cwiseAbs2().dot(grid.measure()));
}

inline double m_dot(const RadialGrid& grid, const Vec& u, const Vec& v) {
  return u.cwiseProduct(grid.measure()).dot(v);
}

// Squared radial part ||weight * u'||^2 from face gradients.
inline double radial_gradient_norm2(const RadialGrid& grid, const AngularMode& mode, const Vec& u,
                                    const RadialWeight& weight) {
  const FaceGradient fg = ModeOperator::face_gradient(grid, mode, u);
  double s = 0.0;
  for (int f = 0; f <= grid.size(); ++f) {
    if (fg.mass[f] == 0.0) continue;
    const double a = weight(grid.face_r(f)) * fg.g[f];
    s += a * a * fg.mass[f];
  }
  return s;
}

// Squared angular part ||weight * w^{-1} sqrt(mu) u||^2.
inline double angular_gradient_norm2(const RadialGrid& grid, const AngularMode& mode, const Vec& u,
                                     const RadialWeight& weight) {
  if (mode.mu == 0.0) return 0.0;
  const Vec& r = grid.r();
  const Vec& w = grid.w();
  const Vec& m = grid.measure();
  double s = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const double a = weight(r[j]) * u[j] / w[j];
    s += mode.mu * a * a * m[j];
  }
  return s;
}

// Full per-mode gradient norm (radial plus angular).
inline double gradient_norm(const RadialGrid& grid, const AngularMode& mode, const Vec& u,
                            const RadialWeight& weight) {
  return std::sqrt(radial_gradient_norm2(grid, mode, u, weight) +
                   angular_gradient_norm2(grid, mode, u, weight));
}

inline double gradient_norm(const RadialGrid& grid, const AngularMode& mode, const Vec& u) {
  return gradient_norm(grid, mode, u, [](double) { return 1.0; });
}

}  // namespace morawetz
