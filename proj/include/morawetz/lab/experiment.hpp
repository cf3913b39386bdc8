#pragma once

// A frequency-localized wave run shared by run-decay and run-local: per-mode
// operators and windowed eigenbases, filtered data, spectral propagators, and
// a sampling loop that feeds a MorawetzRun.

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "morawetz/functionals.hpp"
#include "morawetz/lab/common.hpp"
#include "morawetz/lab/config.hpp"
#include "morawetz/spectral.hpp"
#include "morawetz/wave.hpp"

namespace morawetz::lab {

struct DataConfig {
  std::string kind = "bump";  // bump | eigenmode
  double rc = 20.0, width = 4.0, amplitude = 1.0;
  double lambda = 1.0;  // eigenmode: target eigenvalue (mode l = 0)
};

struct ForcingConfig {
  bool enabled = false;
  double rc = 30.0, width = 4.0, T_f = 20.0, omega = 0.2, amplitude = 0.01;
};

struct CutoffConfig {
  bool enabled = true;
  WindowFamily family = WindowFamily::psi;
  double H = 8.0;
};

inline DataConfig parse_data(StrictObject o) {
  DataConfig d;
  d.kind = o.string("kind");
  if (d.kind == "bump") {
    d.rc = o.number("rc");
    d.width = o.number("width");
    d.amplitude = o.number("amplitude", 1.0);
    require_positive(d.width, o, "width");
  } else if (d.kind == "eigenmode") {
    d.lambda = o.number("lambda");
    require_positive(d.lambda, o, "lambda");
  } else {
    throw ConfigError(o.field_path("kind"), "unknown data kind '" + d.kind + "' (expected bump or eigenmode)");
  }
  o.finish();
  return d;
}

inline ForcingConfig parse_forcing(StrictObject o) {
  ForcingConfig f;
  f.enabled = true;
  f.rc = o.number("rc");
  f.width = o.number("width");
  f.T_f = o.number("T_f");
  f.omega = o.number("omega");
  f.amplitude = o.number("amplitude");
  require_positive(f.width, o, "width");
  require_positive(f.T_f, o, "T_f");
  o.finish();
  return f;
}

inline CutoffConfig parse_cutoff(StrictObject o) {
  CutoffConfig c;
  c.family = parse_family(o.string("family", "psi"), o.field_path("family"));
  std::vector<double> H{o.number("H")};
  const double k = std::log2(H[0]);
  if (!(H[0] >= 1.0) || std::abs(k - std::round(k)) > 1e-12)
    throw ConfigError(o.field_path("H"), "must be a power of two >= 1");
  c.H = H[0];
  o.finish();
  return c;
}

class FilteredRun {
 public:
  FilteredRun(const ManifoldSpec& spec, const GridConfig& gc, int l_max, const CutoffConfig& cut,
              const DataConfig& data, const ForcingConfig& forcing, double guard_threshold)
      : grid_(std::make_unique<RadialGrid>(gc.make(spec))), wf_(spec) {
    const RadialGrid& g = *grid_;
    const bool eigen = data.kind == "eigenmode";
    const int lm = eigen ? 0 : l_max;
    CauchyData raw;
    const FrequencyCutoff fc{cut.H, cut.family, 1.0};
    for (int l = 0; l <= lm; ++l) {
      ops_.push_back(std::make_unique<ModeOperator>(assemble_laplacian(g, angular_mode(spec.n, l))));
      const ModeOperator& L = *ops_.back();
      modes_.push_back(L.mode());
      if (eigen) {
        sds_.push_back(std::make_unique<SpectralDecomposition>(L, 0.5 * data.lambda, 2.0 * data.lambda));
        const SpectralDecomposition& sd = *sds_.back();
        if (sd.size() == 0) throw ConfigError("data.lambda", "no eigenvalue near the requested value");
        int best = 0;
        for (int k = 1; k < sd.size(); ++k)
          if (std::abs(sd.values()[k] - data.lambda) < std::abs(sd.values()[best] - data.lambda)) best = k;
        lambda_ = sd.values()[best];
        const ModeData md = CauchyData::eigenvector(sd, best).modes[0];
        filtered_.modes.push_back(md);
        continue;
      }
      const FrequencyCutoff fe = fc.enlarged();
      sds_.push_back(std::make_unique<SpectralDecomposition>(L, fe.lambda_lower(), fe.lambda_upper()));
      ModeData md = CauchyData::gaussian_bump(g, data.rc, data.width, l).modes[0];
      md.u0 *= data.amplitude;
      raw.modes.push_back(md);
      ModeData fd = md;
      fd.u0 = spectral_cutoff_apply(*sds_.back(), fc, md.u0);
      filtered_.modes.push_back(fd);
    }
    // Forcing: separable, tau(t) = amplitude sin(omega t) on [0, T_f], bump
    // profile in mode 0 only, filtered like the data.
    ForcingSpec raw_f;
    if (forcing.enabled) {
      if (eigen) throw ConfigError("forcing", "eigenmode runs take no forcing");
      raw_f.T_f = forcing.T_f;
      const double a = forcing.amplitude, om = forcing.omega;
      raw_f.tau = [a, om](double t) { return a * std::sin(om * t); };
      for (int l = 0; l <= lm; ++l) {
        Vec p = Vec::Zero(g.size());
        if (l == 0) p = CauchyData::gaussian_bump(g, forcing.rc, forcing.width, 0).modes[0].u0;
        raw_f.profiles.push_back(p);
      }
      forcing_ = raw_f;
      for (std::size_t i = 0; i < forcing_.profiles.size(); ++i)
        forcing_.profiles[i] = spectral_cutoff_apply(*sds_[i], fc, raw_f.profiles[i]);
      has_forcing_ = true;
    }
    // Finite speed acts on the unfiltered problem, so the guard is computed
    // from the unfiltered data and forcing. An eigenmode fills the truncated
    // domain by construction and is run unguarded.
    T_max_ = eigen ? std::numeric_limits<double>::infinity()
                   : guard_time(g, raw, has_forcing_ ? &raw_f : nullptr, guard_threshold);
    if (!eigen && !(T_max_ > 0.0))
      throw ConfigError("data", "data support reaches the outer boundary; enlarge grid.r_max");
    double step = 0.05;
    if (has_forcing_) step = std::min({step, forcing.T_f / 64.0, 2.0 * M_PI / std::max(forcing.omega, 1e-12) / 32.0});
    for (std::size_t i = 0; i < sds_.size(); ++i)
      props_.emplace_back(*sds_[i], filtered_.modes[i].u0, filtered_.modes[i].v0, T_max_,
                          has_forcing_ ? &forcing_ : nullptr, i, step);
    // Energy at t = 0 in the H^1 sense: ||u0||^2 + ||grad u0||^2 + ||v0||^2.
    for (const auto& md : filtered_.modes) {
      const double mult = static_cast<double>(md.mode.multiplicity);
      const double a = weighted_norm(g, md.u0), b = gradient_norm(g, md.mode, md.u0), c = weighted_norm(g, md.v0);
      E0_ += mult * (a * a + b * b + c * c);
    }
  }

  const RadialGrid& grid() const { return *grid_; }
  const WeightFunctions& weights() const { return wf_; }
  const std::vector<AngularMode>& modes() const { return modes_; }
  const ForcingSpec* forcing() const { return has_forcing_ ? &forcing_ : nullptr; }
  double T_max() const { return T_max_; }
  double E0() const { return E0_; }
  double eigenvalue() const { return lambda_; }

  WaveState state_at(double t) const {
    WaveState s;
    s.t = t;
    for (const auto& p : props_) s.modes.push_back(p.state_at(t));
    return s;
  }

  double energy_at(double t) const {
    double e = 0.0;
    for (std::size_t i = 0; i < props_.size(); ++i) e += modes_[i].multiplicity * props_[i].energy_at(t);
    return e;
  }

 private:
  std::unique_ptr<RadialGrid> grid_;
  WeightFunctions wf_;
  std::vector<std::unique_ptr<ModeOperator>> ops_;
  std::vector<std::unique_ptr<SpectralDecomposition>> sds_;
  std::vector<AngularMode> modes_;
  CauchyData filtered_;
  ForcingSpec forcing_;
  bool has_forcing_ = false;
  std::vector<SpectralPropagator> props_;
  double T_max_ = 0.0, E0_ = 0.0, lambda_ = 0.0;
};

// Samples t = 0, cadence, ..., T_end into `run`; snapshots the accumulator
// at each time in `marks` (multiples of the cadence). `on_sample` sees every
// sample after it has been accumulated.
template <typename OnSample>
std::vector<MorawetzAccumulator> drive(const FilteredRun& fr, MorawetzRun& run, double cadence, double T_end,
                                       const std::vector<double>& marks, OnSample&& on_sample) {
  const long n = std::lround(T_end / cadence);
  if (std::abs(n * cadence - T_end) > 1e-9 * T_end)
    throw ConfigError("time", "T_end must be a multiple of the cadence");
  std::vector<MorawetzAccumulator> snaps(marks.size());
  for (long i = 0; i <= n; ++i) {
    const double t = i * cadence;
    const WaveState s = fr.state_at(t);
    run.sample(t, s);
    for (std::size_t k = 0; k < marks.size(); ++k)
      if (std::abs(t - marks[k]) < 0.5 * cadence) snaps[k] = run.accumulator();
    on_sample(i, t, s);
  }
  return snaps;
}

inline nlohmann::json accumulator_json(const MorawetzAccumulator& a) {
  nlohmann::json S = nlohmann::json::array();
  for (double x : a.S) S.push_back(jnum(x));
  return {{"T", jnum(a.T)},     {"T1_a", jnum(a.T1_a)}, {"T1_b", jnum(a.T1_b)},   {"T1_c", jnum(a.T1_c)},
          {"T1_d", jnum(a.T1_d)}, {"shells", S},        {"shell_k_min", a.layout.k_min},
          {"N_L1", jnum(a.N_L1())}, {"N_shell", jnum(a.N_shell())}, {"N_log", jnum(a.N_log)}};
}

// Relative increment over a doubled horizon.
inline double plateau_increment(double at_T0, double at_2T0) {
  if (!(at_T0 > 0.0)) return at_2T0 > 0.0 ? INFINITY : 0.0;
  return (at_2T0 - at_T0) / at_T0;
}

}  // namespace morawetz::lab
