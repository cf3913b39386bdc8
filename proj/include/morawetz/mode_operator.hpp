#pragma once

// Per-mode discretization of Delta_g + V,
//   L_l u = -(W u')' / W + mu_l u / w^2 + V u,   W = w^{n-1},
// on a RadialGrid. The default assembly is the flux form L = M^{-1} K, where
// K is the stiffness matrix of the face-gradient quadratic form
//   <K u, u> = sum_f face_mass_f g_f^2 + sum_j (mu_l / w_j^2 + V_j) u_j^2 m_j,
// so M L is symmetric up to rounding.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/manifold.hpp"
#include "morawetz/tridiagonal_eigen.hpp"

namespace morawetz {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Face f = 0..N of the grid carries a difference quotient g_f of u and a
// quadrature mass; f = 0 is the axis, f = N the truncation radius.
struct FaceGradient {
  Vec g;     // size N + 1
  Vec mass;  // size N + 1, sum mass * g^2 is the radial Dirichlet energy
};

class ModeOperator {
 public:
  // Tridiagonal bands of L: (L u)_j = lower_j u_{j-1} + diag_j u_j + upper_j u_{j+1}.
  ModeOperator(const RadialGrid& grid, AngularMode mode, Vec lower, Vec diag, Vec upper, bool flux_form,
               Vec k_diag, Vec k_off)
      : grid_(&grid),
        mode_(mode),
        lower_(std::move(lower)),
        diag_(std::move(diag)),
        upper_(std::move(upper)),
        flux_form_(flux_form),
        k_diag_(std::move(k_diag)),
        k_off_(std::move(k_off)) {}

  const RadialGrid& grid() const { return *grid_; }
  const AngularMode& mode() const { return mode_; }
  int size() const { return grid_->size(); }
  bool flux_form() const { return flux_form_; }
  const Vec& mass() const { return grid_->measure(); }

  Vec apply(const Vec& u) const {
    const int N = size();
    Vec out(N);
    for (int j = 0; j < N; ++j) {
      double s = diag_[j] * u[j];
      if (j > 0) s += lower_[j] * u[j - 1];
      if (j + 1 < N) s += upper_[j] * u[j + 1];
      out[j] = s;
    }
    return out;
  }

  SparseMat matrix() const {
    const int N = size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(3 * static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      if (j > 0) t.emplace_back(j, j - 1, lower_[j]);
      t.emplace_back(j, j, diag_[j]);
      if (j + 1 < N) t.emplace_back(j, j + 1, upper_[j]);
    }
    SparseMat L(N, N);
    L.setFromTriplets(t.begin(), t.end());
    return L;
  }

  // S = M^{1/2} L M^{-1/2} = M^{-1/2} K M^{-1/2}; only defined in flux form.
  void symmetric_tridiagonal(Vec& d, Vec& e) const {
    require_flux("symmetric_tridiagonal");
    const Vec& m = mass();
    const int N = size();
    d.resize(N);
    e.resize(N - 1);
    for (int j = 0; j < N; ++j) d[j] = k_diag_[j] / m[j];
    for (int j = 0; j + 1 < N; ++j) e[j] = k_off_[j] / std::sqrt(m[j] * m[j + 1]);
  }

  // <L u, v>_m.
  double form(const Vec& u, const Vec& v) const { return apply(u).cwiseProduct(mass()).dot(v); }

  double max_eigenvalue() const { return extreme_eigenvalue(size()); }
  double min_eigenvalue() const { return extreme_eigenvalue(1); }

  // max_{ij} |m_i L_ij - m_j L_ji| / max_{ij} |m_i L_ij|.
  double relative_asymmetry() const {
    const Vec& m = mass();
    const int N = size();
    double defect = 0.0, scale = 0.0;
    for (int j = 0; j < N; ++j) {
      scale = std::max(scale, std::abs(m[j] * diag_[j]));
      if (j + 1 < N) {
        scale = std::max({scale, std::abs(m[j] * upper_[j]), std::abs(m[j + 1] * lower_[j + 1])});
        defect = std::max(defect, std::abs(m[j] * upper_[j] - m[j + 1] * lower_[j + 1]));
      }
    }
    return scale > 0.0 ? defect / scale : 0.0;
  }

  // Face difference quotients with the closures used by the assembly.
  FaceGradient gradient(const Vec& u) const { return face_gradient(*grid_, mode_, u); }

  static FaceGradient face_gradient(const RadialGrid& grid, const AngularMode& mode, const Vec& u) {
    const int N = grid.size();
    const double dr = grid.dr();
    const Vec& W = grid.W();
    FaceGradient fg;
    fg.g.setZero(N + 1);
    fg.mass.setZero(N + 1);
    if (mode.l > 0) {
      fg.g[0] = 2.0 * u[0] / dr;
      fg.mass[0] = 0.5 * W[0] * dr;
    }
    for (int f = 1; f < N; ++f) {
      fg.g[f] = (u[f] - u[f - 1]) / dr;
      fg.mass[f] = std::sqrt(W[f - 1] * W[f]) * dr;
    }
    const double rho = std::sqrt(W[N - 1] / grid.W_ghost());
    const double c = std::sqrt(W[N - 1] * grid.W_ghost());
    fg.g[N] = -(1.0 + rho) * u[N - 1] / dr;
    fg.mass[N] = c * dr / (1.0 + rho);
    return fg;
  }

  const Vec& stiffness_diag() const { require_flux("stiffness_diag"); return k_diag_; }
  const Vec& stiffness_off() const { require_flux("stiffness_off"); return k_off_; }

 private:
  void require_flux(const char* what) const {
    if (!flux_form_) throw std::logic_error(std::string(what) + ": operator is not in flux form");
  }

  double extreme_eigenvalue(int index) const {
    Vec d, e;
    symmetric_tridiagonal(d, e);
    EigenRequest req;
    req.range = EigenRange::index_window;
    req.first = req.last = index;
    req.values_only = true;
    return tridiagonal_eigen(d, e, req).values[0];
  }

  const RadialGrid* grid_;
  AngularMode mode_;
  Vec lower_, diag_, upper_;
  bool flux_form_;
  Vec k_diag_, k_off_;
};

struct LaplacianOptions {
  // false: differentiate the divergence form directly with centered
  // differences; not symmetric in the grid measure (negative control).
  bool flux_form = true;
};

// The grid must outlive the returned operator.
inline ModeOperator assemble_laplacian(const RadialGrid& grid, const AngularMode& mode,
                                       const LaplacianOptions& opt = {}) {
  const ManifoldSpec& spec = grid.spec();
  const int N = grid.size();
  const double dr = grid.dr();
  const Vec& W = grid.W();
  const Vec& w = grid.w();
  const Vec& r = grid.r();
  const Vec& m = grid.measure();

  Vec zeroth(N);
  for (int j = 0; j < N; ++j) zeroth[j] = mode.mu / (w[j] * w[j]) + spec.potential(r[j]);

  Vec lower = Vec::Zero(N), diag = Vec::Zero(N), upper = Vec::Zero(N);
  if (!opt.flux_form) {
    const int p = spec.n - 1;
    for (int j = 0; j < N; ++j) {
      const WarpValues wv = warp_eval(spec, r[j]);
      const double logW = p * wv.dw / wv.w;  // W'/W
      lower[j] = -1.0 / (dr * dr) + logW / (2.0 * dr);
      upper[j] = -1.0 / (dr * dr) - logW / (2.0 * dr);
      diag[j] = 2.0 / (dr * dr) + zeroth[j];
    }
    // Same ghosts as the flux closures: even/odd at the axis, odd at r_max.
    diag[0] += (mode.l == 0 ? 1.0 : -1.0) * lower[0];
    diag[N - 1] -= std::sqrt(W[N - 1] / grid.W_ghost()) * upper[N - 1];
    lower[0] = upper[N - 1] = 0.0;
    return ModeOperator(grid, mode, lower, diag, upper, false, Vec(), Vec());
  }

  Vec kd = Vec::Zero(N), ko = Vec::Zero(N - 1);
  for (int f = 1; f < N; ++f) {
    const double c = std::sqrt(W[f - 1] * W[f]) / dr;
    kd[f - 1] += c;
    kd[f] += c;
    ko[f - 1] = -c;
  }
  if (mode.l > 0) kd[0] += 2.0 * W[0] / dr;
  const double rho = std::sqrt(W[N - 1] / grid.W_ghost());
  kd[N - 1] += std::sqrt(W[N - 1] * grid.W_ghost()) * (1.0 + rho) / dr;
  for (int j = 0; j < N; ++j) kd[j] += zeroth[j] * m[j];

  for (int j = 0; j < N; ++j) {
    diag[j] = kd[j] / m[j];
    if (j > 0) lower[j] = ko[j - 1] / m[j];
    if (j + 1 < N) upper[j] = ko[j] / m[j];
  }
  return ModeOperator(grid, mode, lower, diag, upper, true, kd, ko);
}

}  // namespace morawetz
