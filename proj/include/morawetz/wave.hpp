#pragma once

// (d_t^2 + L_l) u = f per angular mode: exact propagation in the eigenbasis
// (with Duhamel's formula for the forcing) and a leapfrog cross-check.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/manifold.hpp"
#include "morawetz/mode_operator.hpp"
#include "morawetz/norms.hpp"
#include "morawetz/spectral.hpp"

namespace morawetz {

struct ModeData {
  AngularMode mode;
  Vec u0, v0;
};

struct CauchyData {
  std::vector<ModeData> modes;

  // u0 = exp(-((r - rc) / width)^2), v0 = 0 in mode l.
  static CauchyData gaussian_bump(const RadialGrid& grid, double rc, double width, int l) {
    Vec u(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
      const double x = (grid.r()[j] - rc) / width;
      u[j] = std::exp(-x * x);
    }
    return {{ModeData{angular_mode(grid.n(), l), u, Vec::Zero(grid.size())}}};
  }

  static CauchyData eigenvector(const SpectralDecomposition& sd, int k, bool as_velocity = false) {
    const Vec v = sd.eigenvector(k);
    const Vec z = Vec::Zero(v.size());
    return {{ModeData{sd.op().mode(), as_velocity ? z : v, as_velocity ? v : z}}};
  }

  static CauchyData zero(const RadialGrid& grid, int l) {
    return {{ModeData{angular_mode(grid.n(), l), Vec::Zero(grid.size()), Vec::Zero(grid.size())}}};
  }
};

struct ModeState {
  AngularMode mode;
  Vec u, ud;
};

struct WaveState {
  double t = 0.0;
  std::vector<ModeState> modes;
};

// Separable forcing f_l(t, r) = tau(t) g_l(r), with tau supported in [0, T_f].
struct ForcingSpec {
  double T_f = 0.0;
  std::function<double(double)> tau;
  std::vector<Vec> profiles;  // one per mode, matching the CauchyData order

  bool active() const { return T_f > 0.0 && static_cast<bool>(tau) && !profiles.empty(); }
  double time_factor(double t) const { return (t < 0.0 || t > T_f) ? 0.0 : tau(t); }

  Vec at(std::size_t mode_index, double t) const { return time_factor(t) * profiles.at(mode_index); }

  // ||f(t)|| in L^2(X): modes weighted by multiplicity.
  double norm(const RadialGrid& grid, const std::vector<AngularMode>& modes, double t,
              const RadialWeight& weight = nullptr) const {
    if (!active()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const double a = weight ? weighted_norm(grid, profiles[i], weight) : weighted_norm(grid, profiles[i]);
      s += static_cast<double>(modes.at(i).multiplicity) * a * a;
    }
    return std::abs(time_factor(t)) * std::sqrt(s);
  }

  ForcingSpec scaled(double c) const {
    ForcingSpec f = *this;
    for (auto& p : f.profiles) p *= c;
    return f;
  }
};

// Largest r_j where |u| > threshold max|u| or |ud| > threshold max|ud|.
inline double support_radius(const RadialGrid& grid, const Vec& u, const Vec& ud, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("support_radius: threshold must be positive");
  const double mu = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  const double mv = ud.size() ? ud.cwiseAbs().maxCoeff() : 0.0;
  for (int j = grid.size() - 1; j >= 0; --j) {
    if ((mu > 0.0 && std::abs(u[j]) > threshold * mu) || (mv > 0.0 && std::abs(ud[j]) > threshold * mv))
      return grid.r()[j];
  }
  return 0.0;
}

inline double support_radius(const RadialGrid& grid, const WaveState& s, double threshold) {
  double r = 0.0;
  for (const auto& m : s.modes) r = std::max(r, support_radius(grid, m.u, m.ud, threshold));
  return r;
}

// Finite-speed guard: T_max = r_max - r_support - 2.
inline double guard_time(const RadialGrid& grid, const CauchyData& data, const ForcingSpec* forcing,
                         double threshold) {
  double r = 0.0;
  for (const auto& m : data.modes) r = std::max(r, support_radius(grid, m.u0, m.v0, threshold));
  if (forcing && forcing->active())
    for (const auto& p : forcing->profiles) r = std::max(r, support_radius(grid, p, Vec::Zero(p.size()), threshold));
  return grid.r_max() - r - 2.0;
}

class GuardViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// cos(t sqrt(l)) and sin(t sqrt(l)) / sqrt(l), with the series form near l = 0.
inline std::pair<double, double> wave_kernels(double lambda, double t) {
  if (std::abs(lambda) < 1e-12) return {1.0 - 0.5 * lambda * t * t, t - lambda * t * t * t / 6.0};
  const double w = std::sqrt(lambda);
  return {std::cos(w * t), std::sin(w * t) / w};
}

// Exact modal solution for one mode. The forcing (if any) is folded in by
// Duhamel's formula with composite Simpson quadrature in s.
class SpectralPropagator {
 public:
  SpectralPropagator(const SpectralDecomposition& sd, const Vec& u0, const Vec& v0, double T_max,
                     const ForcingSpec* forcing = nullptr, std::size_t mode_index = 0, double forcing_step = 0.05)
      : sd_(&sd), T_max_(T_max) {
    a_ = sd.coefficients(u0);
    b_ = sd.coefficients(v0);
    if (forcing && forcing->active()) {
      forcing_ = *forcing;
      g_ = sd.coefficients(forcing->profiles.at(mode_index));
      step_ = forcing_step;
      // Free data at T_f absorbs the forcing for all later times.
      duhamel(forcing_.T_f, af_, bf_);
      has_forcing_ = true;
    }
  }

  double T_max() const { return T_max_; }

  // Coefficients of (u, u_t) at time t in the eigenbasis.
  void coefficients_at(double t, Vec& cu, Vec& cv) const {
    if (t > T_max_ + 1e-12)
      throw GuardViolation("propagation to t = " + std::to_string(t) + " exceeds the finite-speed guard T_max = " +
                           std::to_string(T_max_) + " (outer boundary would contaminate the solution)");
    const Vec& lam = sd_->values();
    const int K = sd_->size();
    cu.resize(K);
    cv.resize(K);
    if (has_forcing_ && t >= forcing_.T_f) {
      const double dt = t - forcing_.T_f;
      for (int k = 0; k < K; ++k) {
        const auto [c, s] = wave_kernels(lam[k], dt);
        cu[k] = c * af_[k] + s * bf_[k];
        cv[k] = -lam[k] * s * af_[k] + c * bf_[k];
      }
      return;
    }
    if (has_forcing_ && t > 0.0) {
      duhamel(t, cu, cv);
      return;
    }
    for (int k = 0; k < K; ++k) {
      const auto [c, s] = wave_kernels(lam[k], t);
      cu[k] = c * a_[k] + s * b_[k];
      cv[k] = -lam[k] * s * a_[k] + c * b_[k];
    }
  }

  ModeState state_at(double t) const {
    Vec cu, cv;
    coefficients_at(t, cu, cv);
    return {sd_->op().mode(), sd_->synthesize(cu), sd_->synthesize(cv)};
  }

  // Energy <L u, u>_m + ||u_t||_m^2 straight from the coefficients.
  double energy_at(double t) const {
    Vec cu, cv;
    coefficients_at(t, cu, cv);
    return cu.cwiseAbs2().dot(sd_->values()) + cv.squaredNorm();
  }

 private:
  // Free part plus int_0^t kernels(t - s) tau(s) g ds.
  void duhamel(double t, Vec& cu, Vec& cv) const {
    const Vec& lam = sd_->values();
    const int K = sd_->size();
    cu.resize(K);
    cv.resize(K);
    int n = static_cast<int>(std::ceil(t / step_));
    if (n % 2) ++n;
    n = std::max(n, 2);
    const double h = t / n;
    Vec iu = Vec::Zero(K), iv = Vec::Zero(K);
    for (int i = 0; i <= n; ++i) {
      const double s = i * h;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double tau = forcing_.time_factor(s);
      if (tau == 0.0) continue;
      for (int k = 0; k < K; ++k) {
        const auto [c, sn] = wave_kernels(lam[k], t - s);
        iu[k] += w * tau * sn;
        iv[k] += w * tau * c;
      }
    }
    iu *= h / 3.0;
    iv *= h / 3.0;
    for (int k = 0; k < K; ++k) {
      const auto [c, s] = wave_kernels(lam[k], t);
      cu[k] = c * a_[k] + s * b_[k] + iu[k] * g_[k];
      cv[k] = -lam[k] * s * a_[k] + c * b_[k] + iv[k] * g_[k];
    }
  }

  const SpectralDecomposition* sd_;
  double T_max_;
  Vec a_, b_;
  bool has_forcing_ = false;
  ForcingSpec forcing_;
  Vec g_, af_, bf_;
  double step_ = 0.05;
};

// One-shot spectral propagation of a single mode.
inline ModeState propagate_spectral(const SpectralDecomposition& sd, const ModeData& data, double t, double T_max,
                                    const ForcingSpec* forcing = nullptr, std::size_t mode_index = 0) {
  return SpectralPropagator(sd, data.u0, data.v0, T_max, forcing, mode_index).state_at(t);
}

// Leapfrog: u^{n+1} = 2u^n - u^{n-1} + dt^2 (f^n - L u^n), started with the
// Taylor step u^1 = u^0 + dt v^0 + dt^2/2 (f^0 - L u^0). Velocities are centered.
class Leapfrog {
 public:
  Leapfrog(const ModeOperator& L, const Vec& u0, const Vec& v0, double dt, const ForcingSpec* forcing = nullptr,
           std::size_t mode_index = 0)
      : L_(&L), dt_(dt), forcing_(forcing), mode_index_(mode_index) {
    if (!(dt > 0.0)) throw std::invalid_argument("leapfrog: dt must be positive");
    const double lmax = L.max_eigenvalue();
    // Courant number 1 (dt = dr) sits on the bound up to rounding and is allowed.
    if (!(dt * std::sqrt(std::max(lmax, 0.0)) <= 2.0 * (1.0 + 1e-10)))
      throw std::invalid_argument("leapfrog: dt = " + std::to_string(dt) +
                                  " violates the stability bound dt sqrt(lambda_max) <= 2 (lambda_max = " +
                                  std::to_string(lmax) + ")");
    prev_ = u0;
    cur_ = u0 + dt * v0 + 0.5 * dt * dt * (force(0.0) - L.apply(u0));
    v0_ = v0;
  }

  double t() const { return step_ * dt_; }
  double dt() const { return dt_; }

  // Displacement at the current step (before the first advance: u^0).
  const Vec& u() const { return step_ == 0 ? prev_ : cur_; }

  void advance() {
    if (step_ == 0) {
      step_ = 1;
      return;
    }
    Vec next = 2.0 * cur_ - prev_ + dt_ * dt_ * (force(t()) - L_->apply(cur_));
    prev_ = std::move(cur_);
    cur_ = std::move(next);
    ++step_;
  }

  // Centered velocity at the current step (needs one look-ahead).
  Vec velocity() const {
    if (step_ == 0) return v0_;
    const Vec next = 2.0 * cur_ - prev_ + dt_ * dt_ * (force(t()) - L_->apply(cur_));
    return (next - prev_) / (2.0 * dt_);
  }

  ModeState state() const { return {L_->mode(), u(), velocity()}; }

 private:
  Vec force(double t) const {
    if (!forcing_ || !forcing_->active()) return Vec::Zero(L_->size());
    return forcing_->at(mode_index_, t);
  }

  const ModeOperator* L_;
  double dt_;
  const ForcingSpec* forcing_;
  std::size_t mode_index_;
  long step_ = 0;
  Vec prev_, cur_, v0_;
};

inline ModeState propagate_leapfrog(const ModeOperator& L, const ModeData& data, double dt, double t_end,
                                    const ForcingSpec* forcing = nullptr, std::size_t mode_index = 0) {
  Leapfrog lf(L, data.u0, data.v0, dt, forcing, mode_index);
  const long steps = std::lround(t_end / dt);
  if (std::abs(steps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("propagate_leapfrog: t_end must be a multiple of dt");
  for (long i = 0; i < steps; ++i) lf.advance();
  return lf.state();
}

// Energy of one mode: ||d_r u||^2 + mu ||u / w||^2 + ||sqrt(V) u||^2 + ||u_t||^2 = <L u, u>_m + ||u_t||_m^2.
inline double mode_energy(const ModeOperator& L, const ModeState& s) {
  return L.form(s.u, s.u) + s.ud.cwiseAbs2().dot(L.mass());
}

// Total energy, modes weighted by multiplicity; ops[i] must match state.modes[i].
inline double energy(const std::vector<const ModeOperator*>& ops, const WaveState& state) {
  if (ops.size() != state.modes.size()) throw std::invalid_argument("energy: operator/mode count mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < ops.size(); ++i)
    e += static_cast<double>(state.modes[i].mode.multiplicity) * mode_energy(*ops[i], state.modes[i]);
  return e;
}

struct EnergyFluxReport {
  double residual = 0.0;  // max_t |E(t) - E(0) - int_0^t 2 <u_t, f>| / max(E)
  double gronwall_slack = 0.0;  // E(0)^{1/2} + int ||f|| - E(T)^{1/2}, should be >= 0
  double forcing_l1 = 0.0;      // int ||f|| dt
};

// Energy identity E' = 2 <u_t, f> along a single-mode spectral run, integrated
// with Simpson's rule on the given step.
inline EnergyFluxReport energy_flux_check(const SpectralPropagator& prop, const SpectralDecomposition& sd,
                                          const ForcingSpec* forcing, double T, double step = 0.01) {
  const RadialGrid& grid = sd.grid();
  const AngularMode mode = sd.op().mode();
  const double mult = static_cast<double>(mode.multiplicity);
  int n = static_cast<int>(std::ceil(T / step));
  if (n % 2) ++n;
  const double h = T / n;
  auto power = [&](double t) {
    if (!forcing || !forcing->active()) return 0.0;
    const ModeState s = prop.state_at(t);
    return 2.0 * mult * m_dot(grid, s.ud, forcing->at(0, t));
  };
  auto fnorm = [&](double t) { return forcing ? forcing->norm(grid, {mode}, t) : 0.0; };
  EnergyFluxReport rep;
  const double E0 = mult * prop.energy_at(0.0);
  double scale = E0, work = 0.0, l1 = 0.0, worst = 0.0;
  double p_prev = power(0.0), f_prev = fnorm(0.0);
  for (int i = 2; i <= n; i += 2) {
    const double tm = (i - 1) * h, t1 = i * h;
    const double pm = power(tm), p1 = power(t1);
    const double fm = fnorm(tm), f1 = fnorm(t1);
    work += h / 3.0 * (p_prev + 4.0 * pm + p1);
    l1 += h / 3.0 * (f_prev + 4.0 * fm + f1);
    p_prev = p1;
    f_prev = f1;
    const double E = mult * prop.energy_at(t1);
    scale = std::max(scale, E);
    worst = std::max(worst, std::abs(E - E0 - work));
  }
  rep.residual = scale > 0.0 ? worst / scale : 0.0;
  rep.forcing_l1 = l1;
  rep.gronwall_slack = std::sqrt(E0) + l1 - std::sqrt(mult * prop.energy_at(T));
  return rep;
}

}  // namespace morawetz
