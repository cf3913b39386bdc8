#pragma once

// run-local: forward-cone functionals and compact-set dyadic blocks (n >= 3).

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "morawetz/lab/common.hpp"
#include "morawetz/lab/config.hpp"
#include "morawetz/lab/experiment.hpp"

namespace morawetz::lab {

struct LocalConfig {
  std::vector<Geometry> geometries;
  GridConfig grid;
  int l_max = 1;
  std::uint64_t seed = 42;
  double cadence = 0.1;
  double T0 = 0.0;
  double guard_threshold = 1e-6;
  CutoffConfig cutoff;
  DataConfig data;
  double delta = 0.2, kappa = 0.51;
  std::vector<double> sigma{0.1, 0.4};
  double monotonicity_sigma = 0.49;
  double nesting_delta = 0.1;
  double K_radius = 10.0;
  int blocks = 7;
  std::string control_geometry;
  double control_lambda = 1.0;
};

inline LocalConfig parse_local_config(const nlohmann::json& j) {
  StrictObject root(j, "");
  LocalConfig c;
  c.geometries = parse_geometries(root.at("geometries"), "geometries");
  c.grid = parse_grid(root.object("grid"));
  {
    StrictObject m = root.object("modes");
    c.l_max = static_cast<int>(m.integer("l_max"));
    m.finish();
    if (c.l_max < 0 || c.l_max > 15) throw ConfigError(m.field_path("l_max"), "must lie in [0, 15]");
  }
  c.seed = static_cast<std::uint64_t>(root.integer("seed", 42));
  {
    StrictObject t = root.object("time");
    c.cadence = t.number("cadence", 0.1);
    c.T0 = t.number("T0", c.grid.r_max / 4.0);
    require_positive(c.cadence, t, "cadence");
    require_positive(c.T0, t, "T0");
    t.finish();
  }
  c.guard_threshold = root.number("guard_threshold", 1e-6);
  c.cutoff = parse_cutoff(root.object("cutoff"));
  c.data = parse_data(root.object("data"));
  if (c.data.kind != "bump") throw ConfigError("data.kind", "local runs take bump data");
  {
    StrictObject o = root.object("cones");
    c.delta = o.number("delta");
    if (!(c.delta > 0.0 && c.delta < 0.25)) throw ConfigError(o.field_path("delta"), "delta must lie in (0, 1/4)");
    c.kappa = o.number("kappa");
    if (!(c.kappa > 0.5)) throw ConfigError(o.field_path("kappa"), "kappa must exceed 1/2");
    c.sigma = o.numbers("sigma");
    for (double s : c.sigma)
      if (!(s >= 0.0 && s < 0.5)) throw ConfigError(o.field_path("sigma"), "sigma must lie in [0, 1/2)");
    c.monotonicity_sigma = o.number("monotonicity_sigma", 0.49);
    if (!(c.monotonicity_sigma >= 0.0 && c.monotonicity_sigma < 0.5))
      throw ConfigError(o.field_path("monotonicity_sigma"), "sigma must lie in [0, 1/2)");
    c.nesting_delta = o.number("nesting_delta", 0.5 * c.delta);
    if (!(c.nesting_delta > 0.0 && c.nesting_delta < c.delta))
      throw ConfigError(o.field_path("nesting_delta"), "must lie in (0, delta)");
    o.finish();
  }
  {
    StrictObject o = root.object("compact");
    c.K_radius = o.number("K_radius");
    c.blocks = static_cast<int>(o.integer("blocks"));
    require_positive(c.K_radius, o, "K_radius");
    if (c.blocks < 3) throw ConfigError(o.field_path("blocks"), "need at least 3 blocks for a slope");
    if (std::ldexp(1.0, c.blocks) > 2.0 * c.T0 + 1e-9)
      throw ConfigError(o.field_path("blocks"), "last block ends past 2 T0");
    o.finish();
    for (const auto& g : c.geometries)
      if (c.K_radius > g.spec.R)
        throw ConfigError(o.field_path("K_radius"), "must not exceed R of geometry '" + g.name + "'");
  }
  {
    StrictObject o = root.object("negative_control");
    c.control_geometry = o.string("geometry");
    c.control_lambda = o.number("lambda");
    require_positive(c.control_lambda, o, "lambda");
    o.finish();
    bool found = false;
    for (const auto& g : c.geometries) found = found || g.name == c.control_geometry;
    if (!found) throw ConfigError("negative_control.geometry", "unknown geometry '" + c.control_geometry + "'");
  }
  root.finish();
  return c;
}

namespace detail {

struct LocalOutcome {
  std::string grid_hash;
  double E0 = 0.0, T_max = 0.0, lambda = 0.0;
  MorawetzAccumulator at_T0, at_2T0;
  std::string series;
};

inline std::vector<ConeRegionSpec> cone_list(const LocalConfig& c) {
  std::vector<ConeRegionSpec> out;
  auto mk = [&](double delta, double sigma) {
    ConeRegionSpec s;
    s.delta = delta;
    s.sigma = sigma;
    s.kappa = c.kappa;
    s.c = delta;
    return s;
  };
  for (double s : c.sigma) out.push_back(mk(c.delta, s));
  out.push_back(mk(c.delta, c.monotonicity_sigma));
  out.push_back(mk(c.nesting_delta, c.sigma.front()));
  return out;
}

inline LocalOutcome local_run(const LocalConfig& c, const Geometry& geo) {
  const FilteredRun fr(geo.spec, c.grid, c.l_max, c.cutoff, c.data, ForcingConfig{}, c.guard_threshold);
  const double T_end = 2.0 * c.T0;
  if (T_end > fr.T_max())
    throw ConfigError("time.T0", "t = 2 T0 = " + num(T_end) + " lies beyond the finite-speed guard T_max = " +
                                     num(fr.T_max()) + " on geometry '" + geo.name + "'");
  MorawetzRun::Options opt;
  opt.thm1 = false;
  opt.cones = cone_list(c);
  opt.K_radius = c.K_radius;
  opt.blocks = c.blocks;
  MorawetzRun run(fr.grid(), fr.weights(), opt, nullptr, fr.modes());
  LocalOutcome out;
  out.grid_hash = hex64(fr.grid().hash());
  out.E0 = fr.E0();
  out.T_max = fr.T_max();
  std::vector<std::string> cols{"t"};
  for (const auto& s : opt.cones) {
    char tag[64];
    std::snprintf(tag, sizeof tag, "delta=%g;sigma=%g", s.delta, s.sigma);
    cols.push_back(std::string("cone_grad[") + tag + "]");
    cols.push_back(std::string("cone_fn[") + tag + "]");
    cols.push_back(std::string("hypothesis[") + tag + "]");
  }
  cols.push_back("compact_energy");
  Csv csv(cols);
  const long every = std::max(1L, std::lround(1.0 / c.cadence));
  const auto snaps = drive(fr, run, c.cadence, T_end, {c.T0, T_end}, [&](long i, double t, const WaveState& s) {
    if (i % every) return;
    std::vector<std::string> row{num(t)};
    for (const auto& ct : run.accumulator().cone) {
      row.push_back(num(ct.grad));
      row.push_back(num(ct.fn));
      row.push_back(num(ct.hypothesis));
    }
    row.push_back(num(compact_gradient_density(fr.grid(), s, c.K_radius)));
    csv.row(row);
  });
  out.at_T0 = snaps[0];
  out.at_2T0 = snaps[1];
  out.series = csv.str();
  return out;
}

// Standing eigenmode on the truncated grid: no decay mechanism, so the
// compact-set blocks grow like the block length.
inline LocalOutcome control_run(const LocalConfig& c, const Geometry& geo) {
  DataConfig d;
  d.kind = "eigenmode";
  d.lambda = c.control_lambda;
  const FilteredRun fr(geo.spec, c.grid, 0, c.cutoff, d, ForcingConfig{}, c.guard_threshold);
  MorawetzRun::Options opt;
  opt.thm1 = false;
  opt.K_radius = c.K_radius;
  opt.blocks = c.blocks;
  MorawetzRun run(fr.grid(), fr.weights(), opt, nullptr, fr.modes());
  const double T_end = std::ldexp(1.0, c.blocks);
  drive(fr, run, c.cadence, T_end, {}, [](long, double, const WaveState&) {});
  LocalOutcome out;
  out.grid_hash = hex64(fr.grid().hash());
  out.E0 = fr.E0();
  out.lambda = fr.eigenvalue();
  out.at_2T0 = run.accumulator();
  return out;
}

}  // namespace detail

inline int run_local(const nlohmann::json& cfg, RunDir& out, int threads, Manifest& man) {
  const LocalConfig c = parse_local_config(cfg);
  Stopwatch sw;
  man.suite = "run-local";
  man.config_hash = config_hash(cfg);
  const int G = static_cast<int>(c.geometries.size());
  const auto results = parallel_map<detail::LocalOutcome>(threads, G + 1, [&](int i) {
    if (i < G) return detail::local_run(c, c.geometries[i]);
    for (const auto& g : c.geometries)
      if (g.name == c.control_geometry) return detail::control_run(c, g);
    throw ConfigError("negative_control.geometry", "unknown geometry");
  });

  Check chk{"local_cone_decay", "cone functionals bounded (plateau); compact-set blocks do not grow", {}};
  const auto cones = detail::cone_list(c);
  const std::size_t n_sigma = c.sigma.size();
  for (int g = 0; g < G; ++g) {
    const detail::LocalOutcome& o = results[g];
    const std::string p = c.geometries[g].name + ".";
    man.grid_hashes.insert(o.grid_hash);
    man.max_sampled_t_over_guard = std::max(man.max_sampled_t_over_guard, 2.0 * c.T0 / o.T_max);
    nlohmann::json cj = nlohmann::json::array();
    for (std::size_t s = 0; s < cones.size(); ++s) {
      const ConeTerms& a = o.at_T0.cone[s];
      const ConeTerms& b = o.at_2T0.cone[s];
      char tag[64];
      std::snprintf(tag, sizeof tag, "cone[delta=%g,sigma=%g].", cones[s].delta, cones[s].sigma);
      const double gi = plateau_increment(a.grad, b.grad), fi = plateau_increment(a.fn, b.fn);
      if (s < n_sigma) {
        chk.add(at_most(p + tag + "grad.plateau_increment", gi, 0.1));
        chk.add(at_most(p + tag + "fn.plateau_increment", fi, 0.1));
      } else {
        chk.add(info(p + tag + "grad.plateau_increment", gi));
        chk.add(info(p + tag + "fn.plateau_increment", fi));
      }
      chk.add(info(p + tag + "grad_over_E0", b.grad / o.E0));
      chk.add(info(p + tag + "hypothesis_over_E0", b.hypothesis / o.E0, "kappa-weighted energy on the band"));
      cj.push_back({{"delta", jnum(cones[s].delta)},
                    {"sigma", jnum(cones[s].sigma)},
                    {"kappa", jnum(cones[s].kappa)},
                    {"grad", jnum(b.grad)},
                    {"fn", jnum(b.fn)},
                    {"hypothesis", jnum(b.hypothesis)},
                    {"grad_plateau_increment", jnum(gi)},
                    {"fn_plateau_increment", jnum(fi)}});
    }
    // Pointwise weight monotonicity in sigma, and region nesting in delta.
    const double g_lo = o.at_2T0.cone[0].grad, g_hi = o.at_2T0.cone[n_sigma].grad;
    chk.add(at_least(p + "sigma_monotonicity", g_hi - g_lo, 0.0,
                     "C_grad(sigma=" + num(c.monotonicity_sigma) + ") - C_grad(sigma=" + num(c.sigma.front()) + ")"));
    chk.add(at_most(p + "delta_nesting", o.at_2T0.cone[n_sigma + 1].grad / g_lo, 1.0,
                    "C_grad(delta=" + num(c.nesting_delta) + ") / C_grad(delta=" + num(c.delta) + ")"));
    const PowerFit fit = block_slope(o.at_2T0.blocks);
    chk.add(at_most(p + "compact_block_slope", fit.slope, 0.3, "slope of log2 B_j against j"));
    nlohmann::json blocks = nlohmann::json::array();
    for (double b : o.at_2T0.blocks) blocks.push_back(jnum(b));
    nlohmann::json rep;
    rep["run_id"] = c.geometries[g].name;
    rep["grid_hash"] = o.grid_hash;
    rep["H"] = jnum(c.cutoff.H);
    rep["E0"] = jnum(o.E0);
    rep["T_max"] = jnum(o.T_max);
    rep["thm1"] = nullptr;
    rep["thm1prime"] = nullptr;
    rep["thm2"] = {{"T0", jnum(c.T0)}, {"cones", cj}, {"K_radius", jnum(c.K_radius)}, {"blocks", blocks}};
    rep["slopes"] = {{"compact_blocks", jnum(fit.slope)}};
    out.write_json("report_" + c.geometries[g].name + ".json", rep);
    out.write("series_" + c.geometries[g].name + ".csv", o.series);
  }
  {
    const detail::LocalOutcome& o = results[G];
    man.grid_hashes.insert(o.grid_hash);
    const PowerFit fit = block_slope(o.at_2T0.blocks);
    chk.add(within("negative_control.standing_mode_block_slope", fit.slope, 0.95, 1.05,
                   "eigenvalue " + num(o.lambda) + " on the truncated grid, no guard"));
    nlohmann::json blocks = nlohmann::json::array();
    for (double b : o.at_2T0.blocks) blocks.push_back(jnum(b));
    nlohmann::json rep{{"run_id", "negative_control"},
                       {"grid_hash", o.grid_hash},
                       {"H", nullptr},
                       {"E0", jnum(o.E0)},
                       {"T_max", nullptr},
                       {"thm1", nullptr},
                       {"thm1prime", nullptr},
                       {"thm2", {{"eigenvalue", jnum(o.lambda)}, {"K_radius", jnum(c.K_radius)}, {"blocks", blocks}}},
                       {"slopes", {{"compact_blocks", jnum(fit.slope)}}}};
    out.write_json("report_negative_control.json", rep);
  }
  man.checks.push_back(chk);
  man.wall_time_s = sw.seconds();
  out.write_json("manifest.json", man.to_json());
  return man.passed() ? 0 : 1;
}

}  // namespace morawetz::lab
