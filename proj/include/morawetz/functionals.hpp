#pragma once

// Space-time weighted norms of a (frequency-localized) solution, integrated in
// time with the trapezoid rule over the sampling cadence.
//
// Everything is built from per-sample densities; an accumulator only ever adds
// trapezoid segments of densities, so chunks of a run merge by summation.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/manifold.hpp"
#include "morawetz/mode_operator.hpp"
#include "morawetz/operator_norm.hpp"
#include "morawetz/wave.hpp"

namespace morawetz {

// Dyadic shells [2^k, 2^{k+1}) for k = k_min..k_max covering [R, r_max).
struct ShellLayout {
  int k_min = 1, k_max = 1;

  static ShellLayout for_grid(const RadialGrid& grid, double R) {
    if (!(R >= 2.0)) throw std::invalid_argument("shell layout needs R >= 2");
    ShellLayout s;
    s.k_min = static_cast<int>(std::floor(std::log2(R)));
    s.k_max = static_cast<int>(std::floor(std::log2(grid.r_max())));
    if (std::ldexp(1.0, s.k_max) >= grid.r_max()) --s.k_max;
    return s;
  }

  int count() const { return k_max - k_min + 1; }
  // Shell index (0-based) of radius r, or -1 outside.
  int index(double r) const {
    if (r < std::ldexp(1.0, k_min)) return -1;
    const int k = static_cast<int>(std::floor(std::log2(r)));
    return k > k_max ? -1 : k - k_min;
  }
  // sum_k k^{-2} / ln(2)^2: bounds the log-weighted norm by the sup over shells.
  double domination_constant() const {
    double s = 0.0;
    for (int k = k_min; k <= k_max; ++k) s += 1.0 / (static_cast<double>(k) * k);
    return s / (std::log(2.0) * std::log(2.0));
  }
};

// Shells for the forcing: [0, 2), then [2^k, 2^{k+1}) for k >= 1.
struct ForcingShells {
  int k_max = 1;

  static ForcingShells for_grid(const RadialGrid& grid) {
    ForcingShells s;
    s.k_max = std::max(1, static_cast<int>(std::ceil(std::log2(grid.r_max()))) - 1);
    return s;
  }
  int count() const { return k_max + 1; }
  int index(double r) const {
    if (r < 2.0) return 0;
    return std::min(k_max, static_cast<int>(std::floor(std::log2(r))));
  }
  // c0 with N_log >= c0 N_shell: on shell k, log(r~^2 + t^2) >= 2 max(k,1) ln 2
  // and (r~^2 + t^2)^{1/2} >= r~; Cauchy-Schwarz over shells gives the rest.
  double log_domination_constant() const {
    const double l2 = std::log(2.0);
    double s = 0.0;
    for (int k = 0; k <= k_max; ++k) {
      const double kk = std::max(k, 1);
      s += 1.0 / (4.0 * kk * kk * l2 * l2);
    }
    return 1.0 / s;
  }
};

// {t > 1/delta, r~/t < delta} with the weight t^{-kappa} (t/r~)^sigma.
struct ConeRegionSpec {
  double delta = 0.2;
  double sigma = 0.1;
  double kappa = 0.51;
  double c = 0.2;  // scale of phi = phi0(. / c) and rho = rho0(. / c)

  void validate() const {
    if (!(delta > 0.0 && delta <= 0.25)) throw std::invalid_argument("cone region: delta must lie in (0, 1/4]");
    if (!(sigma >= 0.0 && sigma < 0.5)) throw std::invalid_argument("cone region: sigma must lie in [0, 1/2)");
    if (!(c > 0.0 && c < 3.0 * delta)) throw std::invalid_argument("cone region: need 0 < c < 3 delta");
  }

  bool active(double t) const { return t > 1.0 / delta; }
  bool inside(double rt, double t) const { return rt / t < delta; }
  double weight(double rt, double t) const { return std::pow(t, -kappa) * std::pow(t / rt, sigma); }

  static double phi0(double x) { return 1.0 - unit_step(std::abs(x) - 1.0); }
  static double rho0(double x) { return 1.0 - unit_step((std::abs(x) - 2.25) / 0.5); }
  double phi(double x) const { return phi0(x / c); }
  double phi_tilde(double x) const { return phi(x / (3.0 * delta)); }
  double rho(double x) const { return rho0(x / c); }

  // supp dphi U supp(rho - phi) = [c, 2.75 c] in r~/t.
  bool in_hypothesis_band(double rt, double t) const {
    const double x = rt / t;
    return x >= c && x <= 2.75 * c;
  }
};

struct ConeTerms {
  double grad = 0.0, fn = 0.0, hypothesis = 0.0;
};

// Instantaneous integrands at one sample time.
struct Density {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // T1 terms
  std::vector<double> shells;                 // ||chi1 r~^{-1/2} d_r u||^2 on each shell
  double f_norm = 0.0;                        // ||f||
  std::vector<double> f_shells;               // ||r~^{1/2} f||^2 on each forcing shell
  double f_log = 0.0;                         // ||(r~^2+t^2)^{1/4} log(r~^2+t^2) f||^2
  std::vector<ConeTerms> cone;
  double compact = 0.0;  // spacetime gradient squared on r <= K
};

struct MorawetzAccumulator {
  double T = 0.0;
  double T1_a = 0.0, T1_b = 0.0, T1_c = 0.0, T1_d = 0.0;
  ShellLayout layout;
  ForcingShells f_layout;
  std::vector<double> S;  // per-shell S_k(T)
  double f_l1 = 0.0;      // int ||f|| dt
  std::vector<double> f_shell;
  double N_log = 0.0;
  std::vector<ConeTerms> cone;
  std::vector<double> blocks;  // B_j = int_{2^j}^{2^{j+1}} (...) dt

  MorawetzAccumulator() = default;
  MorawetzAccumulator(ShellLayout l, ForcingShells fl, std::size_t cone_count, int block_count)
      : layout(l), f_layout(fl), S(l.count(), 0.0), f_shell(fl.count(), 0.0), cone(cone_count),
        blocks(block_count, 0.0) {}

  double N_L1() const { return f_l1 * f_l1; }
  double N_shell() const {
    double s = 0.0;
    for (double x : f_shell) s += std::sqrt(x);
    return s * s;
  }
  double shell_sup() const {
    double m = 0.0;
    for (double x : S) m = std::max(m, x);
    return m;
  }

  // Integrals over disjoint time intervals add; T is the total length.
  MorawetzAccumulator& merge(const MorawetzAccumulator& o) {
    if (o.S.size() != S.size() || o.f_shell.size() != f_shell.size() || o.cone.size() != cone.size() ||
        o.blocks.size() != blocks.size())
      throw std::invalid_argument("merge: accumulator layouts differ");
    T += o.T;
    T1_a += o.T1_a;
    T1_b += o.T1_b;
    T1_c += o.T1_c;
    T1_d += o.T1_d;
    for (std::size_t i = 0; i < S.size(); ++i) S[i] += o.S[i];
    f_l1 += o.f_l1;
    for (std::size_t i = 0; i < f_shell.size(); ++i) f_shell[i] += o.f_shell[i];
    N_log += o.N_log;
    for (std::size_t i = 0; i < cone.size(); ++i) {
      cone[i].grad += o.cone[i].grad;
      cone[i].fn += o.cone[i].fn;
      cone[i].hypothesis += o.cone[i].hypothesis;
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] += o.blocks[i];
    return *this;
  }
};

// Theorem-1 densities of a filtered state.
inline void thm1_density(const RadialGrid& grid, const WeightFunctions& wf, const ShellLayout& layout,
                         const WaveState& state, Density& d) {
  d.a = d.b = d.c = d.d = 0.0;
  d.shells.assign(layout.count(), 0.0);
  const Vec& r = grid.r();
  const Vec& w = grid.w();
  const Vec& m = grid.measure();
  for (const auto& ms : state.modes) {
    const double mult = static_cast<double>(ms.mode.multiplicity);
    const FaceGradient fg = ModeOperator::face_gradient(grid, ms.mode, ms.u);
    for (int j = 0; j < grid.size(); ++j) {
      const double rt = WeightFunctions::r_tilde(r[j]);
      const double u2 = ms.u[j] * ms.u[j] * m[j];
      const double c1 = wf.chi1_exterior(r[j]), c0 = wf.chi0_interior(r[j]);
      d.a += mult * u2 / (rt * rt * rt);
      // |grad_Y u|^2 on the unit sphere is mu |u|^2.
      d.c += mult * c1 * c1 * ms.mode.mu * u2 / (rt * rt * rt);
      d.d += mult * c0 * c0 * ms.mode.mu * u2 / (w[j] * w[j]);
    }
    for (int f = 0; f <= grid.size(); ++f) {
      if (fg.mass[f] == 0.0) continue;
      const double rf = grid.face_r(f);
      const double rt = WeightFunctions::r_tilde(rf);
      const double g2 = fg.g[f] * fg.g[f] * fg.mass[f];
      const double c1 = wf.chi1_exterior(rf), c0 = wf.chi0_interior(rf);
      const double shell_term = mult * c1 * c1 * g2 / rt;
      const double lg = std::log(rt);
      d.b += shell_term / (lg * lg);
      d.d += mult * c0 * c0 * g2;
      const int k = layout.index(rf);
      if (k >= 0) d.shells[k] += shell_term;
    }
  }
}

inline void forcing_density(const RadialGrid& grid, const ForcingShells& fs, const ForcingSpec* forcing,
                            const std::vector<AngularMode>& modes, double t, Density& d) {
  d.f_norm = 0.0;
  d.f_log = 0.0;
  d.f_shells.assign(fs.count(), 0.0);
  if (!forcing || !forcing->active()) return;
  const double tau = forcing->time_factor(t);
  if (tau == 0.0) return;
  const Vec& r = grid.r();
  const Vec& m = grid.measure();
  double n2 = 0.0;
  for (std::size_t i = 0; i < forcing->profiles.size(); ++i) {
    const double mult = static_cast<double>(modes.at(i).multiplicity);
    const Vec& g = forcing->profiles[i];
    for (int j = 0; j < grid.size(); ++j) {
      const double f2 = mult * tau * tau * g[j] * g[j] * m[j];
      const double rt = WeightFunctions::r_tilde(r[j]);
      const double q = rt * rt + t * t;
      const double lq = std::log(q);
      n2 += f2;
      d.f_shells[fs.index(r[j])] += rt * f2;
      d.f_log += std::sqrt(q) * lq * lq * f2;
    }
  }
  d.f_norm = std::sqrt(n2);
}

// Cone-region densities; zero while t <= 1/delta.
inline void cone_density(const RadialGrid& grid, const std::vector<ConeRegionSpec>& specs, const WaveState& state,
                         double t, Density& d) {
  d.cone.assign(specs.size(), ConeTerms{});
  const Vec& r = grid.r();
  const Vec& w = grid.w();
  const Vec& m = grid.measure();
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const ConeRegionSpec& cr = specs[s];
    if (!cr.active(t)) continue;
    ConeTerms& ct = d.cone[s];
    const double tk = std::pow(t, -2.0 * cr.kappa);
    for (const auto& ms : state.modes) {
      const double mult = static_cast<double>(ms.mode.multiplicity);
      const FaceGradient fg = ModeOperator::face_gradient(grid, ms.mode, ms.u);
      for (int j = 0; j < grid.size(); ++j) {
        const double rt = WeightFunctions::r_tilde(r[j]);
        const double u2 = ms.u[j] * ms.u[j] * m[j];
        const double node_grad = ms.ud[j] * ms.ud[j] * m[j] + ms.mode.mu * u2 / (w[j] * w[j]);
        if (cr.inside(rt, t)) {
          const double wt = cr.weight(rt, t);
          ct.grad += mult * wt * wt * node_grad;
          ct.fn += mult * wt * wt * u2 / (rt * rt);
        }
        if (cr.in_hypothesis_band(rt, t)) ct.hypothesis += mult * tk * (node_grad + u2 / (t * t));
      }
      for (int f = 0; f <= grid.size(); ++f) {
        if (fg.mass[f] == 0.0) continue;
        const double rt = WeightFunctions::r_tilde(grid.face_r(f));
        const double g2 = fg.g[f] * fg.g[f] * fg.mass[f];
        if (cr.inside(rt, t)) {
          const double wt = cr.weight(rt, t);
          ct.grad += mult * wt * wt * g2;
        }
        if (cr.in_hypothesis_band(rt, t)) ct.hypothesis += mult * tk * g2;
      }
    }
  }
}

// |u_t|^2 + |grad u|^2 integrated over r <= K.
inline double compact_gradient_density(const RadialGrid& grid, const WaveState& state, double K_radius) {
  const Vec& r = grid.r();
  const Vec& w = grid.w();
  const Vec& m = grid.measure();
  double s = 0.0;
  for (const auto& ms : state.modes) {
    const double mult = static_cast<double>(ms.mode.multiplicity);
    const FaceGradient fg = ModeOperator::face_gradient(grid, ms.mode, ms.u);
    for (int j = 0; j < grid.size() && r[j] <= K_radius; ++j)
      s += mult * (ms.ud[j] * ms.ud[j] + ms.mode.mu * ms.u[j] * ms.u[j] / (w[j] * w[j])) * m[j];
    for (int f = 0; f <= grid.size() && grid.face_r(f) <= K_radius; ++f) s += mult * fg.g[f] * fg.g[f] * fg.mass[f];
  }
  return s;
}

// Trapezoid segment [t0, t1] of the Theorem-1 and forcing terms.
inline void accumulate_thm1(MorawetzAccumulator& acc, const Density& d0, const Density& d1, double dt) {
  const double h = 0.5 * dt;
  acc.T1_a += h * (d0.a + d1.a);
  acc.T1_b += h * (d0.b + d1.b);
  acc.T1_c += h * (d0.c + d1.c);
  acc.T1_d += h * (d0.d + d1.d);
  for (std::size_t k = 0; k < acc.S.size(); ++k) acc.S[k] += h * (d0.shells.at(k) + d1.shells.at(k));
  acc.f_l1 += h * (d0.f_norm + d1.f_norm);
  for (std::size_t k = 0; k < acc.f_shell.size(); ++k) acc.f_shell[k] += h * (d0.f_shells.at(k) + d1.f_shells.at(k));
  acc.N_log += h * (d0.f_log + d1.f_log);
}

inline void accumulate_cone(MorawetzAccumulator& acc, const Density& d0, const Density& d1, double dt) {
  const double h = 0.5 * dt;
  for (std::size_t s = 0; s < acc.cone.size(); ++s) {
    acc.cone[s].grad += h * (d0.cone.at(s).grad + d1.cone.at(s).grad);
    acc.cone[s].fn += h * (d0.cone.at(s).fn + d1.cone.at(s).fn);
    acc.cone[s].hypothesis += h * (d0.cone.at(s).hypothesis + d1.cone.at(s).hypothesis);
  }
}

// Adds the segment to the dyadic block containing it; segments must not
// straddle a power of two (true for cadences dividing 1).
inline void compact_set_decay(MorawetzAccumulator& acc, double t0, double t1, const Density& d0, const Density& d1) {
  if (t0 < 1.0 - 1e-12) return;
  const int j = static_cast<int>(std::floor(std::log2(t0) + 1e-12));
  if (j < 0 || j >= static_cast<int>(acc.blocks.size())) return;
  acc.blocks[j] += 0.5 * (t1 - t0) * (d0.compact + d1.compact);
}

// Slope of log2 B_j against j; blocks that are exactly zero are skipped.
inline PowerFit block_slope(const std::vector<double>& blocks) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < blocks.size(); ++j)
    if (blocks[j] > 0.0) pts.emplace_back(std::ldexp(1.0, static_cast<int>(j)), blocks[j]);
  return fit_decay_exponent(pts);
}

struct ShellNorms {
  std::vector<double> per_shell;  // sqrt(S_k)
  double linf = 0.0;              // sup_k sqrt(S_k)
  double forcing_l1 = 0.0;        // sum_k ||r~^{1/2} f||_{L^2([0,T] x shell k)}
  double comparison = 0.0;        // sum_k k^{-2} ln(2)^{-2} sup_k S_k
};

inline ShellNorms shell_norms(const MorawetzAccumulator& acc) {
  ShellNorms s;
  for (double x : acc.S) {
    s.per_shell.push_back(std::sqrt(x));
    s.linf = std::max(s.linf, std::sqrt(x));
  }
  s.forcing_l1 = std::sqrt(acc.N_shell());
  s.comparison = acc.layout.domination_constant() * s.linf * s.linf;
  return s;
}

struct RatioReport {
  double denom_energy = 0.0;  // E0 + N_L1
  double denom_shell = 0.0;   // E0 + N_L1 + N_shell
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // T1_i / (E0 + N_L1)
  double shell_linf2 = 0.0;                   // sup_k S_k / (E0 + N_L1 + N_shell)
};

inline RatioReport ratio_report(const MorawetzAccumulator& acc, double E0) {
  RatioReport r;
  r.denom_energy = E0 + acc.N_L1();
  r.denom_shell = r.denom_energy + acc.N_shell();
  if (!(r.denom_energy > 0.0)) throw std::invalid_argument("ratio_report: degenerate run (zero data and forcing)");
  r.a = acc.T1_a / r.denom_energy;
  r.b = acc.T1_b / r.denom_energy;
  r.c = acc.T1_c / r.denom_energy;
  r.d = acc.T1_d / r.denom_energy;
  r.shell_linf2 = acc.shell_sup() / r.denom_shell;
  return r;
}

// Drives the densities along a run sampled at a fixed cadence.
class MorawetzRun {
 public:
  struct Options {
    bool thm1 = true;
    std::vector<ConeRegionSpec> cones;
    double K_radius = 0.0;  // compact set r <= K; 0 disables blocks
    int blocks = 0;
  };

  MorawetzRun(const RadialGrid& grid, const WeightFunctions& wf, Options opt, const ForcingSpec* forcing = nullptr,
              std::vector<AngularMode> modes = {})
      : grid_(&grid), wf_(wf), opt_(std::move(opt)), forcing_(forcing), modes_(std::move(modes)),
        acc_(ShellLayout::for_grid(grid, wf.R), ForcingShells::for_grid(grid), opt_.cones.size(),
             opt_.K_radius > 0.0 ? opt_.blocks : 0) {
    for (const auto& c : opt_.cones) c.validate();
  }

  // Feed the filtered state at time t (times must increase).
  void sample(double t, const WaveState& state) {
    Density d;
    if (opt_.thm1) {
      thm1_density(*grid_, wf_, acc_.layout, state, d);
      forcing_density(*grid_, acc_.f_layout, forcing_, modes_, t, d);
    } else {
      d.shells.assign(acc_.layout.count(), 0.0);
      d.f_shells.assign(acc_.f_layout.count(), 0.0);
    }
    cone_density(*grid_, opt_.cones, state, t, d);
    if (opt_.K_radius > 0.0) d.compact = compact_gradient_density(*grid_, state, opt_.K_radius);
    if (has_prev_) {
      if (!(t > t_prev_)) throw std::invalid_argument("MorawetzRun: sample times must increase");
      const double dt = t - t_prev_;
      accumulate_thm1(acc_, prev_, d, dt);
      accumulate_cone(acc_, prev_, d, dt);
      compact_set_decay(acc_, t_prev_, t, prev_, d);
      acc_.T += dt;
    }
    prev_ = std::move(d);
    t_prev_ = t;
    has_prev_ = true;
  }

  const MorawetzAccumulator& accumulator() const { return acc_; }

 private:
  const RadialGrid* grid_;
  WeightFunctions wf_;
  Options opt_;
  const ForcingSpec* forcing_;
  std::vector<AngularMode> modes_;
  MorawetzAccumulator acc_;
  Density prev_;
  double t_prev_ = 0.0;
  bool has_prev_ = false;
};

}  // namespace morawetz
