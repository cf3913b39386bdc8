#pragma once

// Staggered radial grid r_j = (j + 1/2) dr, j = 0..N-1, on (0, r_max], r_max = N dr.
//
// Node masses are m_j = W_j dr with W = w^{n-1}. Interior faces carry the
// density sqrt(W_j W_{j+1}) (geometric mean of the adjacent nodes), which makes
// the half-density u * W^{1/2} the natural unknown at the boundaries: the
// Dirichlet closures reflect it oddly, and for n = 3 on a flat grid r*u obeys
// exactly the standard 1-D second difference.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>

#include "morawetz/manifold.hpp"

namespace morawetz {

using Vec = Eigen::VectorXd;

// 64-bit FNV-1a.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& u64(std::uint64_t v) { return bytes(&v, sizeof v); }
  Fnv1a& f64(double v) { return bytes(&v, sizeof v); }
  Fnv1a& str(const std::string& s) { return bytes(s.data(), s.size()); }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class RadialGrid {
 public:
  RadialGrid(const ManifoldSpec& spec, int N, double dr) : spec_(spec), N_(N), dr_(dr) {
    spec_.validate();
    if (N < 4) throw std::invalid_argument("RadialGrid: need at least 4 nodes");
    if (!(dr > 0.0)) throw std::invalid_argument("RadialGrid: dr must be positive");
    if (r_max() < 4.0 * spec_.R)
      throw std::invalid_argument("RadialGrid: r_max = " + std::to_string(r_max()) +
                                  " must be at least 4R = " + std::to_string(4.0 * spec_.R));
    if (dr > spec_.warp_scale() / 8.0)
      throw std::invalid_argument("RadialGrid: dr = " + std::to_string(dr) +
                                  " does not resolve the warp (need dr <= " +
                                  std::to_string(spec_.warp_scale() / 8.0) + ")");
    r_.resize(N);
    w_.resize(N);
    W_.resize(N);
    m_.resize(N);
    const int p = spec_.n - 1;
    for (int j = 0; j < N; ++j) {
      r_[j] = (j + 0.5) * dr;
      w_[j] = spec_.w(r_[j]);
      W_[j] = std::pow(w_[j], p);
      m_[j] = W_[j] * dr;
    }
    W_ghost_ = std::pow(spec_.w((N + 0.5) * dr), p);
  }

  const ManifoldSpec& spec() const { return spec_; }
  int size() const { return N_; }
  int n() const { return spec_.n; }
  double dr() const { return dr_; }
  double r_max() const { return N_ * dr_; }

  const Vec& r() const { return r_; }
  const Vec& w() const { return w_; }
  const Vec& measure() const { return m_; }
  // W = w^{n-1} at the nodes and at the ghost node r_N = (N + 1/2) dr.
  const Vec& W() const { return W_; }
  double W_ghost() const { return W_ghost_; }

  double face_r(int f) const { return f * dr_; }  // face f sits between nodes f-1 and f

  std::uint64_t hash() const {
    Fnv1a h;
    h.u64(static_cast<std::uint64_t>(N_)).f64(dr_).u64(static_cast<std::uint64_t>(spec_.n));
    h.str(to_string(spec_.warp.kind));
    switch (spec_.warp.kind) {
      case WarpKind::euclidean: break;
      case WarpKind::trapped_bump: h.f64(spec_.warp.b).f64(spec_.warp.r0).f64(spec_.warp.sigma); break;
      case WarpKind::cone: h.f64(spec_.warp.aperture); break;
    }
    h.f64(spec_.r_flat);
    return h.digest();
  }

 private:
  ManifoldSpec spec_;
  int N_;
  double dr_;
  Vec r_, w_, W_, m_;
  double W_ghost_ = 0.0;
};

}  // namespace morawetz
