#pragma once

// verify-operators: operator algebra, commutator identities, solver oracles.

#include <nlohmann/json.hpp>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "morawetz/lab/common.hpp"
#include "morawetz/lab/config.hpp"
#include "morawetz/multiplier.hpp"
#include "morawetz/operator_norm.hpp"
#include "morawetz/spectral.hpp"
#include "morawetz/test_functions.hpp"
#include "morawetz/wave.hpp"

namespace morawetz::lab {

struct SolverConfig {
  double r_max = 200.0, dr = 0.05;
  double rc = 20.0, width = 1.0;
  double reversal_T = 50.0;
  double cross_T = 20.0;    // leapfrog vs spectral comparison time
  double drift_T = 50.0;
  double speed_t = 5.0;
  double forcing_T = 10.0;  // resonant forcing duration
};

struct OperatorsConfig {
  std::vector<Geometry> geometries;
  GridConfig grid;
  int l_max = 3;
  std::uint64_t seed = 42;
  std::vector<double> refinement_dr{0.4, 0.2, 0.1};
  double refinement_r_max = 400.0;
  int vector_count = 100;
  GaussianSumFamily family{0.0, 0.0, 4.0, 3.0, 10.0, 3};
  double kappa = 0.125;
  int comm_l_max = 2;
  double time_limit_s = 60.0;
  SolverConfig solver;
};

inline OperatorsConfig parse_operators_config(const nlohmann::json& j) {
  StrictObject root(j, "");
  OperatorsConfig c;
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
    StrictObject o = root.object("operators");
    c.refinement_dr = o.numbers("refinement_dr");
    if (c.refinement_dr.size() < 3) throw ConfigError(o.field_path("refinement_dr"), "need at least 3 grids");
    for (std::size_t i = 1; i < c.refinement_dr.size(); ++i)
      if (std::abs(c.refinement_dr[i - 1] / c.refinement_dr[i] - 2.0) > 1e-12)
        throw ConfigError(o.field_path("refinement_dr"), "successive grids must halve dr");
    c.refinement_r_max = o.number("refinement_r_max", 400.0);
    c.kappa = o.number("kappa", 0.125);
    if (!(c.kappa > 0.0 && c.kappa <= kKappaMax))
      throw ConfigError(o.field_path("kappa"), "must lie in (0, 1/8]");
    c.comm_l_max = static_cast<int>(o.integer("comm_l_max", 2));
    c.time_limit_s = o.number("time_limit_s", 60.0);
    StrictObject tv = o.object("test_vectors");
    c.vector_count = static_cast<int>(tv.integer("count"));
    c.family.ramp = tv.number("ramp");
    c.family.min_width = tv.number("min_width");
    c.family.max_width = tv.number("max_width");
    c.family.terms = static_cast<int>(tv.integer("terms", 3));
    tv.finish();
    o.finish();
  }
  {
    StrictObject s = root.object("solver");
    c.solver.r_max = s.number("r_max");
    c.solver.dr = s.number("dr");
    c.solver.rc = s.number("rc");
    c.solver.width = s.number("width");
    c.solver.reversal_T = s.number("reversal_T", c.solver.reversal_T);
    c.solver.cross_T = s.number("cross_T", c.solver.cross_T);
    c.solver.drift_T = s.number("drift_T", c.solver.drift_T);
    c.solver.speed_t = s.number("speed_t", c.solver.speed_t);
    c.solver.forcing_T = s.number("forcing_T", c.solver.forcing_T);
    s.finish();
  }
  root.finish();
  return c;
}

namespace detail {

inline const Geometry* find_flat(const std::vector<Geometry>& gs, int n) {
  for (const auto& g : gs)
    if (g.spec.n == n && g.spec.warp.kind == WarpKind::euclidean && g.spec.potential.V0 == 0.0) return &g;
  return nullptr;
}

struct NamedMultiplier {
  std::string name;
  MultiplierSpec spec;
};

// Dyadic Lambda with 2R <= Lambda <= r_max / 4.
inline std::vector<double> lambda_range(double R, double r_max) {
  std::vector<double> out;
  for (double L = 1.0; L <= r_max / 4.0; L *= 2.0)
    if (L >= 2.0 * R) out.push_back(L);
  return out;
}

// Least-squares order of residual ~ dr^p.
inline double refinement_order(const std::vector<double>& dr, const std::vector<double>& res) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < dr.size(); ++i) pts.emplace_back(dr[i], std::max(res[i], 1e-300));
  return fit_decay_exponent(pts).slope;
}

}  // namespace detail

inline Check operator_algebra(const OperatorsConfig& c, Manifest& man, Csv& csv, int threads) {
  Check chk{"operator_algebra", "self-adjoint nonnegative mode operators and skew-adjoint multipliers", {}};
  Stopwatch sw;
  struct Row {
    double asym, lmin_rel, skew, broken_asym, broken_skew;
  };
  double worst_broken_asym = 0.0;
  for (const auto& geo : c.geometries) {
    const RadialGrid grid = c.grid.make(geo.spec);
    man.grid_hashes.insert(hex64(grid.hash()));
    const WeightFunctions wf(geo.spec);
    const std::vector<double> lambdas = detail::lambda_range(geo.spec.R, grid.r_max());
    std::vector<detail::NamedMultiplier> mults{
        {"power_0", MultiplierSpec::power(0.0)},          {"power_0.5", MultiplierSpec::power(0.5)},
        {"power_1", MultiplierSpec::power(1.0)},          {"power_0.5_nocutoff", MultiplierSpec::power(0.5, false)},
        {"log_pA", MultiplierSpec::log_pA()},
    };
    for (double L : lambdas)
      mults.push_back({"log_bump_ppA_" + std::to_string(static_cast<int>(L)), MultiplierSpec::log_bump_ppA(c.kappa, L)});
    const auto rows = parallel_map<Row>(threads, c.l_max + 1, [&](int l) {
      const AngularMode mode = angular_mode(geo.spec.n, l);
      const ModeOperator L = assemble_laplacian(grid, mode);
      Row r{};
      r.asym = L.relative_asymmetry();
      const double lmax = L.max_eigenvalue();
      r.lmin_rel = -L.min_eigenvalue() / lmax;
      for (const auto& m : mults)
        r.skew = std::max(r.skew, relative_skew_defect(assemble_multiplier(grid, mode, wf, m.spec), grid.measure()));
      r.broken_asym = assemble_laplacian(grid, mode, LaplacianOptions{false}).relative_asymmetry();
      MultiplierOptions off;
      off.antisymmetrize = false;
      r.broken_skew =
          relative_skew_defect(assemble_multiplier(grid, mode, wf, MultiplierSpec::power(0.5), off), grid.measure());
      return r;
    });
    Row worst{};
    double broken_asym = 0.0, broken_skew = INFINITY;
    for (int l = 0; l <= c.l_max; ++l) {
      const Row& r = rows[l];
      worst.asym = std::max(worst.asym, r.asym);
      worst.lmin_rel = std::max(worst.lmin_rel, r.lmin_rel);
      worst.skew = std::max(worst.skew, r.skew);
      broken_asym = std::max(broken_asym, r.broken_asym);
      broken_skew = std::min(broken_skew, r.broken_skew);
      const std::string hash = hex64(grid.hash());
      csv.row({"operator_algebra", geo.name, std::to_string(geo.spec.n), std::to_string(l), "asymmetry", "",
               num(c.grid.dr), num(r.asym)});
      csv.row({"operator_algebra", geo.name, std::to_string(geo.spec.n), std::to_string(l), "neg_lambda_min_rel", "",
               num(c.grid.dr), num(r.lmin_rel)});
      csv.row({"operator_algebra", geo.name, std::to_string(geo.spec.n), std::to_string(l), "skew_defect", "",
               num(c.grid.dr), num(r.skew)});
      csv.row({"operator_algebra", geo.name, std::to_string(geo.spec.n), std::to_string(l),
               "negative_control_asymmetry", "", num(c.grid.dr), num(r.broken_asym)});
    }
    chk.add(at_most(geo.name + ".max_relative_asymmetry", worst.asym, 1e-13));
    chk.add(at_most(geo.name + ".max_neg_lambda_min_over_norm", worst.lmin_rel, 1e-10));
    chk.add(at_most(geo.name + ".max_multiplier_skew_defect", worst.skew, 1e-13));
    // The broken assemblies must be caught by the same tests.
    // On flat n = 3 the direct stencil coincides with the flux form, so the
    // asymmetry control is judged over all geometries below.
    chk.add(info(geo.name + ".negative_control.direct_stencil_asymmetry", broken_asym));
    worst_broken_asym = std::max(worst_broken_asym, broken_asym);
    chk.add(at_least(geo.name + ".negative_control.unsymmetrized_multiplier_skew", broken_skew, 1e-10,
                     "symmetrize-off multiplier must fail the skew test"));
  }
  chk.add(at_least("negative_control.direct_stencil_asymmetry", worst_broken_asym, 1e-10,
                   "non-flux assembly must fail the self-adjointness test"));
  chk.add(at_most("runtime_s", sw.seconds(), c.time_limit_s, "wall time of the algebra checks"));
  return chk;
}

inline Check commutator_identities(const OperatorsConfig& c, Manifest& man, Csv& csv, int threads) {
  Check chk{"commutator_identities", "discrete commutator identities converge at second order on the flat end", {}};
  const Geometry* flat = detail::find_flat(c.geometries, 4);
  if (!flat) throw ConfigError("geometries", "commutator checks need a flat n = 4 geometry without potential");
  const ManifoldSpec& spec = flat->spec;
  const WeightFunctions wf(spec);
  const double r_max = c.refinement_r_max;
  GaussianSumFamily fam = c.family;
  fam.lo = 2.0 * spec.R + fam.ramp;
  fam.hi = r_max - 20.0;
  const auto vectors = make_gaussian_sums(fam, c.vector_count, c.seed);
  const std::vector<double> lambdas = detail::lambda_range(spec.R, r_max);
  std::vector<detail::NamedMultiplier> kinds{{"power_0.5", MultiplierSpec::power(0.5)},
                                             {"power_1", MultiplierSpec::power(1.0)},
                                             {"log_pA", MultiplierSpec::log_pA()}};
  for (double L : lambdas)
    kinds.push_back({"log_bump_ppA_" + std::to_string(static_cast<int>(L)), MultiplierSpec::log_bump_ppA(c.kappa, L)});

  // residual[kind][grid], max over modes l = 0..comm_l_max.
  const int G = static_cast<int>(c.refinement_dr.size());
  const int K = static_cast<int>(kinds.size());
  const int lcount = c.comm_l_max + 1;
  const auto flat_res = parallel_map<double>(threads, G * K * lcount, [&](int idx) {
    const int g = idx / (K * lcount), k = (idx / lcount) % K, l = idx % lcount;
    const double dr = c.refinement_dr[g];
    const RadialGrid grid(spec, static_cast<int>(std::lround(r_max / dr)), dr);
    const ModeOperator L = assemble_laplacian(grid, angular_mode(4, l));
    return max_commutator_residual(L, wf, kinds[k].spec, vectors);
  });
  std::vector<std::vector<double>> res(K, std::vector<double>(G, 0.0));
  for (int g = 0; g < G; ++g) {
    const double dr = c.refinement_dr[g];
    man.grid_hashes.insert(hex64(RadialGrid(spec, static_cast<int>(std::lround(r_max / dr)), dr).hash()));
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < lcount; ++l) res[k][g] = std::max(res[k][g], flat_res[(g * K + k) * lcount + l]);
  }
  for (int k = 0; k < K; ++k)
    for (int g = 0; g < G; ++g)
      csv.row({"commutator_residual", flat->name, "4", "0.." + std::to_string(c.comm_l_max), kinds[k].name,
               num(kinds[k].spec.kind == MultiplierKind::power ? kinds[k].spec.s : kinds[k].spec.Lambda),
               num(c.refinement_dr[g]), num(res[k][g])});
  for (int k = 0; k < 3; ++k) {
    chk.add(at_least(kinds[k].name + ".order", detail::refinement_order(c.refinement_dr, res[k]), 1.8));
    chk.add(info(kinds[k].name + ".finest_residual", res[k].back()));
  }
  if (K > 3) {
    // Uniformity in Lambda: the largest residual across Lambda vs the smallest Lambda.
    std::vector<double> worst(G, 0.0);
    double spread = 0.0;
    for (int g = 0; g < G; ++g) {
      for (int k = 3; k < K; ++k) worst[g] = std::max(worst[g], res[k][g]);
      spread = std::max(spread, worst[g] / res[3][g]);
    }
    chk.add(at_least("log_bump_ppA.max_over_Lambda.order", detail::refinement_order(c.refinement_dr, worst), 1.8));
    chk.add(at_most("log_bump_ppA.max_over_Lambda_over_single", spread, 2.0,
                    "single Lambda = " + std::to_string(static_cast<int>(lambdas.front()))));
  }
  // Absorption of the e_i remainders for the log families beyond 2R.
  {
    const RadialGrid grid(spec, static_cast<int>(std::lround(r_max / c.refinement_dr.back())), c.refinement_dr.back());
    for (int k = 2; k < K; ++k) {
      const AbsorptionReport a = absorption_report(grid, wf, kinds[k].spec, 2.0 * spec.R);
      chk.add(info(kinds[k].name + ".absorption.max_e3", a.max_e3, "|e_i| < 1/2 expected"));
      if (a.e4_defined) chk.add(info(kinds[k].name + ".absorption.max_e4", a.max_e4, "|e_i| < 1/2 expected"));
    }
  }
  // Other geometries: residual of the same vectors on the finest shared grid,
  // relative to the flat value (identical geometry where the vectors live).
  for (const auto& geo : c.geometries) {
    if (&geo == flat || geo.spec.n != 4 || geo.spec.warp.end_slope() != 1.0) continue;
    const double dr = std::min(c.refinement_dr.back(), geo.spec.warp_scale() / 8.0);
    const RadialGrid grid(geo.spec, static_cast<int>(std::lround(r_max / dr)), dr);
    const RadialGrid fgrid(spec, static_cast<int>(std::lround(r_max / dr)), dr);
    man.grid_hashes.insert(hex64(grid.hash()));
    const WeightFunctions gwf(geo.spec);
    const MultiplierSpec ms = MultiplierSpec::power(0.5);
    const double r_geo = max_commutator_residual(assemble_laplacian(grid, angular_mode(4, 0)), gwf, ms, vectors);
    const double r_flat = max_commutator_residual(assemble_laplacian(fgrid, angular_mode(4, 0)), wf, ms, vectors);
    chk.add(info(geo.name + ".far_residual_over_flat", r_geo / r_flat,
                 "vectors supported beyond 2R, where the geometries coincide"));
    csv.row({"commutator_residual_far", geo.name, "4", "0", "power_0.5", num(0.5), num(dr), num(r_geo)});
  }
  return chk;
}

inline Check solver_oracle(const OperatorsConfig& c, Manifest& man, Csv& csv) {
  Check chk{"solver_oracle", "wave propagation against d'Alembert, conservation, reversal and cross-solver order", {}};
  const SolverConfig& sc = c.solver;
  ManifoldSpec spec;
  spec.n = 3;
  spec.R = 2.0;
  const RadialGrid grid(spec, static_cast<int>(std::lround(sc.r_max / sc.dr)), sc.dr);
  man.grid_hashes.insert(hex64(grid.hash()));
  const ModeOperator L = assemble_laplacian(grid, angular_mode(3, 0));
  const CauchyData data = CauchyData::gaussian_bump(grid, sc.rc, sc.width, 0);
  const ModeData& md = data.modes[0];
  const double T_max = guard_time(grid, data, nullptr, 1e-6);
  const double T_oracle = 0.5 * grid.r_max();
  auto guard = [&](double t) { man.max_sampled_t_over_guard = std::max(man.max_sampled_t_over_guard, t / T_max); };

  // (r u)_tt = (r u)_rr with odd reflection at r = 0.
  const double rc = sc.rc, wd = sc.width;
  auto phi = [rc, wd](double x) {
    const double a = (std::abs(x) - rc) / wd;
    return x * std::exp(-a * a);
  };
  {
    Leapfrog lf(L, md.u0, md.v0, grid.dr());
    double worst = 0.0;
    const long steps = std::lround(T_oracle / grid.dr());
    for (long i = 0; i <= steps; ++i) {
      if (i) lf.advance();
      if (i % std::max(1L, std::lround(1.0 / grid.dr())) && i != steps) continue;
      const double t = lf.t();
      guard(t);
      for (int j = 0; j < grid.size(); ++j) {
        const double r = grid.r()[j];
        worst = std::max(worst, std::abs(r * lf.u()[j] - 0.5 * (phi(r - t) + phi(r + t))));
      }
    }
    chk.add(at_most("dalembert_sup_error", worst, 1e-6, "leapfrog at Courant number 1, sampled every unit time"));
  }
  const SpectralDecomposition sd(L);
  const SpectralPropagator prop(sd, md.u0, md.v0, T_max);
  {
    const double E0 = prop.energy_at(0.0);
    double worst = 0.0;
    for (double t = 0.0; t <= T_max; t += 1.0) worst = std::max(worst, std::abs(prop.energy_at(t) - E0) / E0);
    guard(std::floor(T_max));
    chk.add(at_most("energy_conservation", worst, 1e-9, "spectral propagator, sup over unit-time samples to T_max"));
    chk.add(info("T_max", T_max));
    const double E_direct = mode_energy(L, prop.state_at(0.0));
    chk.add(at_most("energy_form_consistency", std::abs(E_direct - E0) / E0, 1e-12));
  }
  {
    const double T = sc.reversal_T;
    guard(2.0 * T);
    const ModeState s = prop.state_at(T);
    const SpectralPropagator back(sd, s.u, -s.ud, T_max - T);
    const ModeState r = back.state_at(T);
    const double scale = std::sqrt(md.u0.squaredNorm() + md.v0.squaredNorm());
    const double err = std::sqrt((r.u - md.u0).squaredNorm() + (r.ud + md.v0).squaredNorm()) / scale;
    chk.add(at_most("time_reversal", err, 1e-8));
  }
  {
    const double T = sc.cross_T;
    guard(T);
    const Vec ref = prop.state_at(T).u;
    std::vector<double> err;
    for (double f : {0.5, 0.25, 0.125}) {
      const ModeState s = propagate_leapfrog(L, md, f * grid.dr(), T);
      err.push_back((s.u - ref).cwiseAbs().maxCoeff());
      csv.row({"leapfrog_vs_spectral", "flat_n3", "3", "0", "dt_over_dr", num(f), num(grid.dr()), num(err.back())});
    }
    chk.add(within("leapfrog_vs_spectral_ratio_1", err[0] / err[1], 3.5, 4.5));
    chk.add(within("leapfrog_vs_spectral_ratio_2", err[1] / err[2], 3.5, 4.5));
  }
  {
    const double T = sc.drift_T;
    guard(T);
    std::vector<double> drift;
    for (double f : {0.5, 0.25}) {
      Leapfrog lf(L, md.u0, md.v0, f * grid.dr());
      const double E0 = mode_energy(L, lf.state());
      double worst = 0.0;
      const long steps = std::lround(T / lf.dt());
      for (long i = 0; i < steps; ++i) {
        lf.advance();
        worst = std::max(worst, std::abs(mode_energy(L, lf.state()) - E0) / E0);
      }
      drift.push_back(worst);
    }
    chk.add(at_least("leapfrog_drift_halving_ratio", drift[0] / drift[1], 3.5));
  }
  {
    // Energy identity with and without forcing.
    const double T = sc.forcing_T + 10.0;
    guard(T);
    const EnergyFluxReport free = energy_flux_check(prop, sd, nullptr, T, 0.05);
    chk.add(at_most("energy_flux_residual_unforced", free.residual, 1e-9));
    int k = 0;
    while (k + 1 < sd.size() && sd.values()[k] < 1.0) ++k;
    const double w = std::sqrt(sd.values()[k]);
    ForcingSpec f;
    f.T_f = sc.forcing_T;
    f.tau = [w](double t) { return std::cos(w * t); };
    f.profiles = {sd.eigenvector(k)};
    const SpectralPropagator forced(sd, md.u0, md.v0, T_max, &f, 0, std::min(0.05, sc.width / 8.0));
    const EnergyFluxReport rep = energy_flux_check(forced, sd, &f, T, 0.01);
    chk.add(info("energy_flux_residual_resonant", rep.residual, "Duhamel Simpson step min(0.05, width/8)"));
    chk.add(at_least("gronwall_slack_resonant", rep.gronwall_slack, 0.0));
    chk.add(at_least("resonant_energy_growth", forced.energy_at(T) / prop.energy_at(0.0), 1.0));
    const ForcingSpec f2 = f.scaled(2.0);
    const EnergyFluxReport rep2 = energy_flux_check(forced, sd, &f2, T, 0.01);
    chk.add(at_most("forcing_norm_linearity", std::abs(rep2.forcing_l1 / rep.forcing_l1 - 2.0), 1e-12));
  }
  {
    // Additivity of the solution map in the data.
    const CauchyData other = CauchyData::gaussian_bump(grid, sc.rc + 7.0, 2.0 * sc.width, 0);
    const ModeData& mo = other.modes[0];
    const double T = 15.0;
    guard(T);
    const Vec a = SpectralPropagator(sd, md.u0, md.v0, T_max).state_at(T).u;
    const Vec b = SpectralPropagator(sd, mo.u0, md.v0, T_max).state_at(T).u;
    const Vec ab = SpectralPropagator(sd, md.u0 + mo.u0, md.v0, T_max).state_at(T).u;
    chk.add(at_most("linearity", (ab - a - b).norm() / ab.norm(), 1e-12));
  }
  {
    const double t = sc.speed_t;
    guard(t);
    const double r0 = support_radius(grid, md.u0, md.v0, 1e-8);
    // Leapfrog at Courant number 1 has an exact discrete domain of dependence.
    const ModeState s = propagate_leapfrog(L, md, grid.dr(), t);
    const double r1 = support_radius(grid, s.u, Vec::Zero(grid.size()), 1e-8);
    chk.add(at_most("support_radius_t0_minus_rc_over_width", (r0 - sc.rc) / sc.width, 8.0));
    chk.add(at_most("finite_speed_excess", (r1 - r0) / t - 1.0, 0.05, "leapfrog, dt = dr"));
  }
  return chk;
}

inline int run_verify_operators(const nlohmann::json& cfg, RunDir& out, int threads, Manifest& man) {
  const OperatorsConfig c = parse_operators_config(cfg);
  Stopwatch sw;
  man.suite = "verify-operators";
  man.config_hash = config_hash(cfg);
  Csv csv({"check_id", "geometry", "n", "l", "quantity", "param", "dr", "value"});
  man.checks.push_back(operator_algebra(c, man, csv, threads));
  man.checks.push_back(commutator_identities(c, man, csv, threads));
  man.checks.push_back(solver_oracle(c, man, csv));
  out.write("verify_operators.csv", csv.str());
  man.wall_time_s = sw.seconds();
  out.write_json("manifest.json", man.to_json());
  return man.passed() ? 0 : 1;
}

}  // namespace morawetz::lab
