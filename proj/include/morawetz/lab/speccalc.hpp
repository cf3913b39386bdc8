#pragma once

// verify-speccalc: H-sweeps of weighted spectral cutoffs and resolvents,
// localized cutoff decay in t, Hardy and interpolation ratios.

#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "morawetz/estimates.hpp"
#include "morawetz/lab/common.hpp"
#include "morawetz/lab/config.hpp"
#include "morawetz/test_functions.hpp"

namespace morawetz::lab {

struct SRho {
  double s = 0.0, rho = 0.0;
};

struct LocalizedCase {
  int m = 0;
  DerivativeKind L = DerivativeKind::id;
};

struct SpeccalcConfig {
  std::vector<Geometry> geometries;
  GridConfig grid{512.0, 0.125};
  int l = 0;
  std::uint64_t seed = 42;
  std::vector<double> H = default_H_list();
  std::vector<SRho> cutoff_cases;
  std::vector<double> resolvent_s;
  std::vector<SRho> conjugated_resolvent;
  std::vector<double> scattering_s;
  bool bare_comparison = true;
  PowerIterationOptions power;
  double time_limit_s = 600.0;

  GridConfig localized_grid{768.0, 0.125};
  std::vector<double> localized_t{8, 16, 32, 64, 128, 256};
  std::vector<LocalizedCase> localized_cases;
  double separation_wavelengths = 8.0;
  double noise_floor = 1e-12;

  GridConfig hardy_grid{16384.0, 0.5};
  double hardy_a = 4.0;
  std::vector<double> hardy_T{4, 6, 8};
  GridConfig random_grid{128.0, 0.125};
  int random_count = 50;
  int interpolation_count = 200;
};

inline SpeccalcConfig parse_speccalc_config(const nlohmann::json& j) {
  StrictObject root(j, "");
  SpeccalcConfig c;
  c.geometries = parse_geometries(root.at("geometries"), "geometries");
  c.grid = parse_grid(root.object("grid"));
  c.seed = static_cast<std::uint64_t>(root.integer("seed", 42));
  for (const auto& g : c.geometries)
    if (g.spec.n != c.geometries.front().spec.n) throw ConfigError("geometries", "all geometries must share n");
  const int n = c.geometries.front().spec.n;
  auto srho_list = [&](StrictObject& o, const std::string& key) {
    std::vector<SRho> out;
    const auto& arr = o.at(key);
    if (!arr.is_array()) throw ConfigError(o.field_path(key), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      StrictObject e(arr[i], o.field_path(key) + "[" + std::to_string(i) + "]");
      SRho v{e.number("s"), e.number("rho")};
      e.finish();
      try {
        check_conjugation_range(n, v.s, v.rho);
      } catch (const std::invalid_argument& err) {
        throw ConfigError(e.field_path("s"), err.what());
      }
      out.push_back(v);
    }
    return out;
  };
  {
    StrictObject o = root.object("speccalc");
    c.l = static_cast<int>(o.integer("l", 0));
    c.H = parse_dyadic(o, "H");
    if (c.H.size() < 3) throw ConfigError(o.field_path("H"), "need at least 3 values for a slope fit");
    c.cutoff_cases = srho_list(o, "conjugated_cutoff");
    c.resolvent_s = o.numbers("resolvent_weight_s");
    for (double s : c.resolvent_s)
      if (!(s >= 0.0 && s < std::min(2.0, 0.5 * n)))
        throw ConfigError(o.field_path("resolvent_weight_s"),
                          "weighted resolvent bound requires 0 <= s < min(2, n/2)");
    c.conjugated_resolvent = srho_list(o, "conjugated_resolvent");
    c.scattering_s = o.numbers("scattering_derivative_s");
    c.bare_comparison = o.boolean("bare_radius_comparison", true);
    c.power.tol = o.number("power_tol", 1e-6);
    c.power.max_iter = static_cast<int>(o.integer("power_max_iter", 10000));
    c.power.seed = c.seed;
    c.time_limit_s = o.number("time_limit_s", 600.0);
    o.finish();
  }
  {
    StrictObject o = root.object("localized");
    c.localized_grid = parse_grid(o.object("grid"));
    c.localized_t = parse_dyadic(o, "t");
    const auto& arr = o.at("cases");
    if (!arr.is_array() || arr.empty()) throw ConfigError(o.field_path("cases"), "expected a nonempty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      StrictObject e(arr[i], o.field_path("cases") + "[" + std::to_string(i) + "]");
      LocalizedCase lc;
      lc.m = static_cast<int>(e.integer("m"));
      const std::string L = e.string("L");
      if (L == "id") lc.L = DerivativeKind::id;
      else if (L == "scat_deriv") lc.L = DerivativeKind::scat_deriv;
      else throw ConfigError(e.field_path("L"), "expected id or scat_deriv");
      if (lc.m < 0) throw ConfigError(e.field_path("m"), "must be >= 0");
      e.finish();
      c.localized_cases.push_back(lc);
    }
    c.separation_wavelengths = o.number("separation_wavelengths", 8.0);
    c.noise_floor = o.number("noise_floor", 1e-12);
    o.finish();
  }
  {
    StrictObject o = root.object("hardy");
    c.hardy_grid = parse_grid(o.object("grid"));
    c.hardy_a = o.number("a", 4.0);
    c.hardy_T = o.numbers("T");
    c.random_grid = parse_grid(o.object("random_grid"));
    c.random_count = static_cast<int>(o.integer("random_count", 50));
    c.interpolation_count = static_cast<int>(o.integer("interpolation_count", 200));
    o.finish();
  }
  root.finish();
  return c;
}

namespace detail {

struct SweepRow {
  std::string module, check_id;
  int n = 0, l = 0;
  double s = 0.0, rho = 0.0, H = 0.0;
  std::complex<double> z{0.0, 0.0};
  bool has_z = false;
  double norm = 0.0, slope = 0.0;
};

inline std::vector<std::string> cells(const SweepRow& r) {
  return {r.module,
          r.check_id,
          std::to_string(r.n),
          std::to_string(r.l),
          num(r.s),
          num(r.rho),
          num(r.H),
          r.has_z ? num(r.z.real()) : "",
          r.has_z ? num(r.z.imag()) : "",
          num(r.norm),
          num(r.slope)};
}

struct GeometryResult {
  std::vector<SweepRow> rows;
  std::vector<Measurement> measurements;
  std::string grid_hash;
};

inline std::string z_tag(std::complex<double> z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "z=%+g%+gi", z.real(), z.imag());
  return buf;
}

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string srho_tag(double s, double rho) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "s=%g;rho=%g", s, rho);
  return buf;
}

// One resolvent sweep over H for every z on the contour. Conjugate pairs give
// identical norms (the operators are real), so only Im z > 0 is computed.
inline void resolvent_sweep(const SpeccalcConfig& c, const SpectralDecomposition& sd, const LeftFactor& left,
                            const Vec& right, const std::string& module, const std::string& id, double s,
                            double rho, double bound, bool informational, const std::string& geo,
                            GeometryResult& out) {
  const ResolventNormSweep sweep(sd, left, right);
  std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> cache;
  for (std::complex<double> z : default_z_contour()) {
    const std::pair<double, double> key(z.real(), std::abs(z.imag()));
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<std::pair<double, double>> pts;
      for (double H : c.H) pts.emplace_back(H, sweep.norm(H, {key.first, key.second}, c.power).norm);
      it = cache.emplace(key, std::move(pts)).first;
    }
    const auto& pts = it->second;
    const double slope = fit_decay_exponent(pts).slope;
    for (const auto& [H, v] : pts) {
      SweepRow r{module, id, sd.grid().n(), c.l, s, rho, H, z, true, v, slope};
      out.rows.push_back(r);
    }
    const std::string name = geo + "." + id + "." + z_tag(z) + ".slope";
    if (informational) out.measurements.push_back(info(name, slope));
    else out.measurements.push_back(at_most(name, slope, bound));
  }
}

inline GeometryResult speccalc_geometry(const SpeccalcConfig& c, const Geometry& geo) {
  GeometryResult out;
  const RadialGrid grid = c.grid.make(geo.spec);
  out.grid_hash = hex64(grid.hash());
  const int n = geo.spec.n;
  const ModeOperator L = assemble_laplacian(grid, angular_mode(n, c.l));
  const SpectralDecomposition sd(L);
  out.measurements.push_back(at_most(geo.name + ".eigen_residual", sd.max_relative_residual(), 1e-10));
  out.measurements.push_back(at_most(geo.name + ".eigen_orthonormality", sd.orthonormality_defect(), 1e-12));

  // Conjugated cutoffs ||x^{s+rho} Psi_H x^{-s}||.
  for (const SRho& sr : c.cutoff_cases) {
    for (RadiusConvention rc : {RadiusConvention::smoothed, RadiusConvention::bare}) {
      if (rc == RadiusConvention::bare && (!c.bare_comparison || sr.rho == 0.0)) continue;
      std::vector<std::pair<double, double>> pts;
      for (double H : c.H) {
        const FrequencyCutoff fc{H};
        pts.emplace_back(H, conjugated_cutoff_norm(sd, fc, DerivativeKind::id, sr.s, sr.rho, c.power, rc).norm);
      }
      const double slope = fit_decay_exponent(pts).slope;
      const std::string id = std::string(rc == RadiusConvention::bare ? "conjugated_cutoff_bare_r" : "conjugated_cutoff") +
                             "[" + srho_tag(sr.s, sr.rho) + "]";
      for (const auto& [H, v] : pts) out.rows.push_back({"spectral_calculus", id, n, c.l, sr.s, sr.rho, H, {}, false, v, slope});
      if (rc == RadiusConvention::bare) {
        out.measurements.push_back(info(geo.name + "." + id + ".slope", slope, "x = 1/r instead of 1/r~"));
      } else {
        out.measurements.push_back(at_most(geo.name + "." + id + ".slope", slope, -sr.rho + 0.1));
        if (sr.s == 0.0 && sr.rho == 0.0) {
          double worst = 0.0;
          for (const auto& p : pts) worst = std::max(worst, std::abs(p.second - 1.0));
          out.measurements.push_back(at_most(geo.name + "." + id + ".norm_minus_one", worst, 1e-4,
                                             "sup of psi on the spectrum is 1"));
        }
      }
    }
  }
  // Informational: the same with the scattering derivative in front.
  {
    const SRho sr{1.0, 0.5};
    std::vector<std::pair<double, double>> pts;
    for (double H : c.H)
      pts.emplace_back(H, conjugated_cutoff_norm(sd, FrequencyCutoff{H}, DerivativeKind::scat_deriv, sr.s, sr.rho,
                                                 c.power).norm);
    const double slope = fit_decay_exponent(pts).slope;
    const std::string id = "conjugated_cutoff_scat_deriv[" + srho_tag(sr.s, sr.rho) + "]";
    for (const auto& [H, v] : pts) out.rows.push_back({"spectral_calculus", id, n, c.l, sr.s, sr.rho, H, {}, false, v, slope});
    out.measurements.push_back(info(geo.name + "." + id + ".slope", slope));
  }
  // ||x^s R(z)||.
  for (double s : c.resolvent_s) {
    resolvent_sweep(c, sd, LeftFactor{x_power(grid, s), DerivativeKind::id, Vec()}, Vec(), "spectral_calculus",
                    "weighted_resolvent[s=" + fmt_g(s) + "]", s, 0.0, -s + 0.1, false, geo.name, out);
    if (c.bare_comparison)
      resolvent_sweep(c, sd, LeftFactor{x_power(grid, s, RadiusConvention::bare), DerivativeKind::id, Vec()}, Vec(),
                      "spectral_calculus", "weighted_resolvent_bare_r[s=" + fmt_g(s) + "]", s, 0.0, 0.0, true,
                      geo.name, out);
  }
  // ||x^s d_r R(z)||, informational.
  for (double s : c.scattering_s)
    resolvent_sweep(c, sd, LeftFactor{Vec::Ones(grid.size()), DerivativeKind::scat_deriv, face_x_power(grid, s)},
                    Vec(), "spectral_calculus", "derivative_resolvent[s=" + fmt_g(s) + "]", s, 0.0, -s + 0.1, true,
                    geo.name, out);
  // ||x^{s+rho} R(z) x^{-s}||.
  for (const SRho& sr : c.conjugated_resolvent) {
    resolvent_sweep(c, sd, LeftFactor{x_power(grid, sr.s + sr.rho), DerivativeKind::id, Vec()}, x_power(grid, -sr.s),
                    "spectral_calculus", "conjugated_resolvent[" + srho_tag(sr.s, sr.rho) + "]", sr.s, sr.rho,
                    -sr.rho + 0.1, false, geo.name, out);
    if (c.bare_comparison) {
      const auto bare = RadiusConvention::bare;
      resolvent_sweep(c, sd, LeftFactor{x_power(grid, sr.s + sr.rho, bare), DerivativeKind::id, Vec()},
                      x_power(grid, -sr.s, bare), "spectral_calculus",
                      "conjugated_resolvent_bare_r[" + srho_tag(sr.s, sr.rho) + "]", sr.s, sr.rho, 0.0, true,
                      geo.name, out);
    }
  }
  return out;
}

// Localized cutoff decay on its own (larger) grid with H = 1.
inline GeometryResult localized_geometry(const SpeccalcConfig& c, const Geometry& geo) {
  GeometryResult out;
  const RadialGrid grid = c.localized_grid.make(geo.spec);
  out.grid_hash = hex64(grid.hash());
  const int n = geo.spec.n;
  const ModeOperator L = assemble_laplacian(grid, angular_mode(n, c.l));
  const FrequencyCutoff fc{1.0};
  const SpectralDecomposition sd(L, fc.lambda_lower(), fc.lambda_upper());
  // Longest wavelength in the window, 2 pi / sqrt(lambda_lower).
  const double wavelength = 2.0 * M_PI / std::sqrt(fc.lambda_lower());
  const double t_sep = c.separation_wavelengths * wavelength;
  for (const LocalizedCase& lc : c.localized_cases) {
    const auto samples = localized_cutoff_decay(sd, fc, lc.L, lc.m, c.localized_t, localized_phi, localized_chi, c.power);
    const std::string id = "localized_cutoff[m=" + std::to_string(lc.m) + ";L=" + to_string(lc.L) + "]";
    double worst = -INFINITY;
    int counted = 0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      const double a = std::max(samples[i].norm, c.noise_floor), b = std::max(samples[i + 1].norm, c.noise_floor);
      const double slope = std::log(b / a) / std::log(samples[i + 1].t / samples[i].t);
      out.rows.push_back({"spectral_calculus", id, n, c.l, static_cast<double>(lc.m), 0.0, samples[i].t, {}, false,
                          samples[i].norm, slope});
      if (samples[i].t >= t_sep && a > c.noise_floor) {
        worst = std::max(worst, slope);
        ++counted;
      }
    }
    out.rows.push_back({"spectral_calculus", id, n, c.l, static_cast<double>(lc.m), 0.0, samples.back().t, {}, false,
                        samples.back().norm, 0.0});
    if (counted == 0) {
      out.measurements.push_back(info(geo.name + "." + id + ".max_slope_beyond_separation", NAN,
                                      "no dyadic interval beyond the separation scale above the noise floor"));
    } else {
      out.measurements.push_back(at_most(geo.name + "." + id + ".max_slope_beyond_separation", worst, -2.0,
                                         "t >= " + num(t_sep)));
    }
  }
  return out;
}

// Optimizing sequence u = r^{-(n-2)/2} sin(pi log(r/a) / T) on [a, a e^T].
inline Vec hardy_profile(const RadialGrid& grid, double a, double T) {
  Vec u = Vec::Zero(grid.size());
  const double p = 0.5 * (grid.n() - 2);
  for (int j = 0; j < grid.size(); ++j) {
    const double r = grid.r()[j];
    const double x = std::log(r / a) / T;
    if (x > 0.0 && x < 1.0) u[j] = std::pow(r, -p) * std::sin(M_PI * x);
  }
  return u;
}

}  // namespace detail

inline Check hardy_poincare(const SpeccalcConfig& c, Manifest& man, Csv& csv) {
  Check chk{"hardy_poincare", "sharp Hardy constant approached by the optimizing family; stable random ratios", {}};
  ManifoldSpec flat;
  flat.n = c.geometries.front().spec.n;
  flat.R = c.geometries.front().spec.R;
  if (flat.n != 4) throw ConfigError("geometries", "the Hardy check is calibrated for n = 4");
  const RadialGrid grid = c.hardy_grid.make(flat);
  man.grid_hashes.insert(hex64(grid.hash()));
  const AngularMode m0 = angular_mode(flat.n, 0);
  const double sharp = 2.0 / (flat.n - 2);
  double last = 0.0;
  for (double T : c.hardy_T) {
    if (c.hardy_a * std::exp(T) > grid.r_max() - 2.0)
      throw ConfigError("hardy.T", "profile support a e^T exceeds the Hardy grid");
    const double ratio = hardy_ratio(grid, m0, detail::hardy_profile(grid, c.hardy_a, T), 0.0, 1.0);
    csv.row({"hardy", "optimizing_family", std::to_string(flat.n), "0", num(0.0), num(1.0), num(T), "", "", num(ratio),
             num(sharp)});
    chk.add(info("optimizing_family.T=" + num(T) + ".ratio_over_sharp", ratio / sharp));
    last = ratio / sharp;
  }
  chk.add(within("optimizing_family.best_ratio_over_sharp", last, 0.9, 1.05));
  // Random compactly supported functions, s = 1/2, theta = 1/2, under refinement.
  GaussianSumFamily fam{2.0, c.random_grid.r_max / 2.0, 2.0, 1.0, 6.0, 3};
  const auto funcs = make_gaussian_sums(fam, c.random_count, c.seed);
  double cemp[2];
  for (int k = 0; k < 2; ++k) {
    const double dr = c.random_grid.dr / (k + 1);
    const RadialGrid g(flat, static_cast<int>(std::lround(c.random_grid.r_max / dr)), dr);
    man.grid_hashes.insert(hex64(g.hash()));
    double worst = 0.0;
    for (const auto& f : funcs) worst = std::max(worst, hardy_ratio(g, m0, f.sample(g), 0.5, 0.5));
    cemp[k] = worst;
    csv.row({"hardy", "random_max", std::to_string(flat.n), "0", num(0.5), num(0.5), num(dr), "", "", num(worst), ""});
  }
  chk.add(info("random.C_emp", cemp[1]));
  chk.add(at_most("random.relative_change_under_refinement", std::abs(cemp[1] / cemp[0] - 1.0), 0.05));
  return chk;
}

inline Check interpolation_bounds(const SpeccalcConfig& c, Manifest& man, Csv& csv) {
  Check chk{"interpolation_bounds", "gradient interpolation between the operator and L^2 norms", {}};
  const Geometry& geo = c.geometries.front();
  GaussianSumFamily fam{2.0, c.random_grid.r_max / 2.0, 2.0, 1.0, 6.0, 3};
  const auto funcs = make_gaussian_sums(fam, c.interpolation_count, c.seed + 1);
  double at_half[2] = {0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    const double dr = c.random_grid.dr / (k + 1);
    ManifoldSpec spec = geo.spec;
    const RadialGrid g(spec, static_cast<int>(std::lround(c.random_grid.r_max / dr)), dr);
    man.grid_hashes.insert(hex64(g.hash()));
    const ModeOperator L = assemble_laplacian(g, angular_mode(spec.n, 0));
    double worst0 = 0.0;
    for (const auto& f : funcs) {
      const Vec u = f.sample(g);
      worst0 = std::max(worst0, interpolation_bound_ratio(L, u, 0.0));
      at_half[k] = std::max(at_half[k], interpolation_bound_ratio(L, u, 0.5));
    }
    if (k == 0) chk.add(at_most(geo.name + ".s=0.max_ratio", worst0, 1.0 + 1e-12));
    csv.row({"interpolation", "random_max", std::to_string(spec.n), "0", num(0.5), "", num(dr), "", "",
             num(at_half[k]), ""});
  }
  chk.add(info(geo.name + ".s=0.5.max_ratio", at_half[1]));
  chk.add(at_most(geo.name + ".s=0.5.relative_change_under_refinement", std::abs(at_half[1] / at_half[0] - 1.0), 0.1));
  return chk;
}

inline int run_verify_speccalc(const nlohmann::json& cfg, RunDir& out, int threads, Manifest& man) {
  const SpeccalcConfig c = parse_speccalc_config(cfg);
  Stopwatch sw;
  man.suite = "verify-speccalc";
  man.config_hash = config_hash(cfg);
  const int G = static_cast<int>(c.geometries.size());
  const auto results = parallel_map<detail::GeometryResult>(threads, 2 * G, [&](int i) {
    return i < G ? detail::speccalc_geometry(c, c.geometries[i]) : detail::localized_geometry(c, c.geometries[i - G]);
  });
  Check exps{"spectral_exponents", "H-decay of weighted cutoffs and resolvents; t-decay of localized cutoffs", {}};
  const std::vector<std::string> cols{"module", "check_id", "n", "l", "s", "rho", "H", "z_re", "z_im", "norm",
                                      "fitted_slope"};
  for (int g = 0; g < G; ++g) {
    Csv csv(cols);
    for (int part : {g, g + G}) {
      for (const auto& r : results[part].rows) csv.row(detail::cells(r));
      for (const auto& m : results[part].measurements) exps.add(m);
      man.grid_hashes.insert(results[part].grid_hash);
    }
    out.write("verify_" + results[g].grid_hash + ".csv", csv.str());
  }
  exps.add(at_most("runtime_s", sw.seconds(), c.time_limit_s));
  man.checks.push_back(exps);
  Csv hcsv(cols);
  man.checks.push_back(hardy_poincare(c, man, hcsv));
  man.checks.push_back(interpolation_bounds(c, man, hcsv));
  out.write("verify_hardy.csv", hcsv.str());
  man.wall_time_s = sw.seconds();
  out.write_json("manifest.json", man.to_json());
  return man.passed() ? 0 : 1;
}

}  // namespace morawetz::lab
