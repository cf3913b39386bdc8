#pragma once

// Rotationally symmetric model manifolds g = dr^2 + w(r)^2 g_{S^{n-1}} with a
// smooth cap at the axis and an exactly conic end, plus the nonnegative
// short-range potential, the cutoff/weight functions and the angular spectrum.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "morawetz/jet.hpp"
#include "morawetz/json_fields.hpp"
#include "morawetz/smooth.hpp"

namespace morawetz {

enum class WarpKind { euclidean, trapped_bump, cone };

inline std::string to_string(WarpKind k) {
  switch (k) {
    case WarpKind::euclidean: return "euclidean";
    case WarpKind::trapped_bump: return "trapped_bump";
    case WarpKind::cone: return "cone";
  }
  return "?";
}

struct Warp {
  WarpKind kind = WarpKind::euclidean;
  double b = 0.0;         // trapped_bump amplitude
  double r0 = 0.0;        // trapped_bump center
  double sigma = 1.0;     // trapped_bump half-width
  double aperture = 1.0;  // cone: w = aperture * r on the end

  static Warp euclidean() { return {}; }
  static Warp trapped_bump(double b, double r0, double sigma) {
    Warp w;
    w.kind = WarpKind::trapped_bump;
    w.b = b;
    w.r0 = r0;
    w.sigma = sigma;
    return w;
  }
  static Warp cone(double aperture) {
    Warp w;
    w.kind = WarpKind::cone;
    w.aperture = aperture;
    return w;
  }

  // Slope of w on the conic end.
  double end_slope() const { return kind == WarpKind::cone ? aperture : 1.0; }
};

struct Potential {
  double V0 = 0.0;
  double delta = 1.0;

  // V(r) = V0 (1 + r^2)^{-(2 + delta)/2}
  template <int K>
  Jet<K> eval(const Jet<K>& r) const {
    if (V0 == 0.0) return Jet<K>(0.0);
    return V0 * pow(1.0 + r * r, -(2.0 + delta) / 2.0);
  }
  double operator()(double r) const { return eval(Jet<0>(r)).value(); }
};

struct ManifoldSpec {
  int n = 4;
  Warp warp;
  double r_flat = 0.0;
  Potential potential;
  double R = 10.0;

  double decay() const { return potential.delta; }

  // w as a Taylor jet in r; exactly end_slope * r for r >= r_flat.
  template <int K>
  Jet<K> warp_jet(const Jet<K>& r) const {
    const double a = warp.end_slope();
    if (r.value() >= r_flat) return a * r;
    switch (warp.kind) {
      case WarpKind::euclidean:
        return r;
      case WarpKind::trapped_bump: {
        const Jet<K> x = (r - warp.r0) / warp.sigma;
        if (std::abs(x.value()) >= 1.0) return r;
        const Jet<K> bump = exp(1.0 - 1.0 / (1.0 - x * x));
        return r * (1.0 + warp.b * bump);
      }
      case WarpKind::cone: {
        const Jet<K> s = unit_step((r - 0.1 * r_flat) / (0.8 * r_flat));
        return r * (1.0 + (a - 1.0) * s);
      }
    }
    return r;
  }

  double w(double r) const { return warp_jet(Jet<0>(r)).value(); }

  // Smallest length scale of the warp profile; grids must resolve it.
  double warp_scale() const {
    switch (warp.kind) {
      case WarpKind::euclidean: return std::numeric_limits<double>::infinity();
      case WarpKind::trapped_bump: return warp.sigma;
      case WarpKind::cone: return 0.8 * r_flat;
    }
    return std::numeric_limits<double>::infinity();
  }

  void validate() const {
    if (n < 3) throw ConfigError("n", "dimension must be at least 3");
    if (!(r_flat >= 0.0)) throw ConfigError("r_flat", "must be nonnegative");
    if (!(R > 0.0) || R < r_flat) throw ConfigError("R", "cutoff radius must be positive and >= r_flat");
    if (!(potential.V0 >= 0.0)) throw ConfigError("potential.V0", "potential must be nonnegative");
    if (!(potential.delta > 0.0)) throw ConfigError("potential.delta", "decay must be positive");
    switch (warp.kind) {
      case WarpKind::euclidean:
        break;
      case WarpKind::trapped_bump:
        if (!(warp.sigma > 0.0)) throw ConfigError("warp.sigma", "must be positive");
        if (!(warp.b > -1.0)) throw ConfigError("warp.b", "must exceed -1 so that w > 0");
        if (warp.r0 - warp.sigma <= 0.0) throw ConfigError("warp.r0", "bump must stay away from the axis");
        if (warp.r0 + warp.sigma > r_flat) throw ConfigError("warp.r0", "bump must end before r_flat");
        break;
      case WarpKind::cone:
        if (!(warp.aperture > 0.0)) throw ConfigError("warp.aperture", "must be positive");
        if (!(r_flat > 0.0)) throw ConfigError("r_flat", "cone warp needs a positive transition radius");
        break;
    }
  }
};

struct WarpValues {
  double w, dw, d2w;
};

// (w, w', w'') at r > 0.
inline WarpValues warp_eval(const ManifoldSpec& spec, double r) {
  if (!(r > 0.0)) throw std::domain_error("warp_eval: r must be positive");
  const Jet<2> j = spec.warp_jet(Jet<2>::variable(r));
  return {j.derivative(0), j.derivative(1), j.derivative(2)};
}

// Sign changes of w' on (0, r_flat), each located by bisection.
inline std::vector<double> trapping_report(const ManifoldSpec& spec, double tol = 1e-10) {
  std::vector<double> roots;
  if (spec.r_flat <= 0.0 || spec.warp.kind == WarpKind::euclidean) return roots;
  auto dw = [&](double r) { return spec.warp_jet(Jet<1>::variable(r)).derivative(1); };
  const int samples = 200000;
  const double h = spec.r_flat / samples;
  double a = 0.5 * h;
  double fa = dw(a);
  for (int i = 1; i < samples; ++i) {
    const double b = (i + 0.5) * h;
    const double fb = dw(b);
    if ((fa < 0.0) != (fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = dw(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

// Smoothed global radius r~ = sqrt(r^2 + 4) >= 2, and the cutoffs built on R.
struct WeightFunctions {
  double R = 10.0;

  explicit WeightFunctions(double R_) : R(R_) {
    if (!(R > 0.0)) throw std::invalid_argument("WeightFunctions: R must be positive");
  }
  explicit WeightFunctions(const ManifoldSpec& spec) : WeightFunctions(spec.R) {}

  static double r_tilde(double r) { return std::sqrt(r * r + 4.0); }
  template <int K>
  static Jet<K> r_tilde(const Jet<K>& r) { return sqrt(r * r + 4.0); }

  // chi(r) = chi_0(r / R): 0 for r <= R, 1 for r >= 2R.
  double chi(double r) const { return morawetz::chi0(r / R); }
  template <int K>
  Jet<K> chi(const Jet<K>& r) const { return morawetz::chi0(r / R); }

  double chi1_exterior(double r) const { return chi(r); }
  double chi0_interior(double r) const { return 1.0 - chi(r); }
};

struct AngularMode {
  int l = 0;
  double mu = 0.0;
  std::uint64_t multiplicity = 1;
};

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline AngularMode angular_mode(int n, int l) {
  if (l < 0) throw std::invalid_argument("angular_mode: l must be nonnegative");
  AngularMode m;
  m.l = l;
  m.mu = static_cast<double>(l) * (l + n - 2);
  const auto N = static_cast<std::uint64_t>(n);
  const auto L = static_cast<std::uint64_t>(l);
  m.multiplicity = binomial(L + N - 1, N - 1) - (L >= 2 ? binomial(L + N - 3, N - 1) : 0);
  return m;
}

inline std::vector<AngularMode> mode_spectrum(const ManifoldSpec& spec, int l_max) {
  if (l_max < 0) throw std::invalid_argument("mode_spectrum: l_max must be nonnegative");
  std::vector<AngularMode> modes;
  for (int l = 0; l <= l_max; ++l) modes.push_back(angular_mode(spec.n, l));
  return modes;
}

// ---------------------------------------------------------------------------
// JSON

inline ManifoldSpec manifold_from_json(const nlohmann::json& j, const std::string& path = "") {
  StrictObject o(j, path);
  ManifoldSpec s;
  s.n = static_cast<int>(o.integer("n"));
  {
    StrictObject w = o.object("warp");
    const std::string kind = w.string("kind");
    if (kind == "euclidean") {
      s.warp = Warp::euclidean();
    } else if (kind == "trapped_bump") {
      s.warp = Warp::trapped_bump(w.number("b"), w.number("r0"), w.number("sigma"));
    } else if (kind == "cone") {
      s.warp = Warp::cone(w.number("aperture"));
    } else {
      throw ConfigError(w.field_path("kind"), "unknown warp kind '" + kind + "'");
    }
    w.finish();
  }
  s.r_flat = o.number("r_flat");
  {
    StrictObject p = o.object("potential");
    s.potential.V0 = p.number("V0");
    s.potential.delta = p.number("delta");
    p.finish();
  }
  s.R = o.number("R");
  o.finish();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.path() : path + "." + e.path(), e.message());
  }
  return s;
}

inline nlohmann::json to_json(const ManifoldSpec& s) {
  nlohmann::json w{{"kind", to_string(s.warp.kind)}};
  if (s.warp.kind == WarpKind::trapped_bump) {
    w["b"] = s.warp.b;
    w["r0"] = s.warp.r0;
    w["sigma"] = s.warp.sigma;
  } else if (s.warp.kind == WarpKind::cone) {
    w["aperture"] = s.warp.aperture;
  }
  return {{"n", s.n},
          {"warp", w},
          {"r_flat", s.r_flat},
          {"potential", {{"V0", s.potential.V0}, {"delta", s.potential.delta}}},
          {"R", s.R}};
}

}  // namespace morawetz
