#pragma once

// run-decay: global space-time functionals of frequency-localized waves (n >= 4).

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "morawetz/lab/common.hpp"
#include "morawetz/lab/config.hpp"
#include "morawetz/lab/experiment.hpp"

namespace morawetz::lab {

struct DecayRunConfig {
  std::string name;
  std::string geometry;
  CutoffConfig cutoff;
  DataConfig data;
  ForcingConfig forcing;
  bool informational = false;
};

struct DecayConfig {
  std::vector<Geometry> geometries;
  GridConfig grid;
  int l_max = 1;
  std::uint64_t seed = 42;
  double cadence = 0.1;
  double T0 = 0.0;  // plateau horizon; the run ends at 2 T0
  double guard_threshold = 1e-6;
  double refinement_dr = 0.0;  // 0 disables the refinement rerun
  std::vector<DecayRunConfig> runs;
  std::vector<double> H_scan;

  const Geometry& geometry(const std::string& name) const {
    for (const auto& g : geometries)
      if (g.name == name) return g;
    throw ConfigError("runs", "unknown geometry '" + name + "'");
  }
};

inline DecayConfig parse_decay_config(const nlohmann::json& j) {
  StrictObject root(j, "");
  DecayConfig c;
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
  c.refinement_dr = root.number("refinement_dr", 0.0);
  if (c.refinement_dr < 0.0) throw ConfigError("refinement_dr", "must be nonnegative");
  const auto& runs = root.at("runs");
  if (!runs.is_array() || runs.empty()) throw ConfigError("runs", "expected a nonempty array");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    StrictObject o(runs[i], "runs[" + std::to_string(i) + "]");
    DecayRunConfig r;
    r.name = o.string("name");
    r.geometry = o.string("geometry");
    r.cutoff = parse_cutoff(o.object("cutoff"));
    r.data = parse_data(o.object("data"));
    if (r.data.kind != "bump") throw ConfigError(o.field_path("data"), "decay runs take bump data");
    if (o.has("forcing")) r.forcing = parse_forcing(o.object("forcing"));
    r.informational = o.boolean("informational", false);
    o.finish();
    const Geometry& g = c.geometry(r.geometry);
    if (g.spec.n < 4)
      throw ConfigError(o.field_path("geometry"),
                        "the global decay functionals require n >= 4 (geometry '" + g.name + "' has n = " +
                            std::to_string(g.spec.n) + "); use run-local for n = 3");
    for (const auto& prev : c.runs)
      if (prev.name == r.name) throw ConfigError(o.field_path("name"), "duplicate run name '" + r.name + "'");
    c.runs.push_back(std::move(r));
  }
  if (root.has("H_scan")) {
    c.H_scan = parse_dyadic(root, "H_scan");
  }
  root.finish();
  return c;
}

namespace detail {

struct DecayOutcome {
  std::string grid_hash;
  double E0 = 0.0, T_max = 0.0, log_c0 = 0.0;
  MorawetzAccumulator at_T0, at_2T0;
  std::string series;  // CSV text, empty when not requested
};

inline DecayOutcome decay_run(const DecayConfig& c, const DecayRunConfig& rc, double dr, bool series) {
  const Geometry& geo = c.geometry(rc.geometry);
  GridConfig gc = c.grid;
  gc.dr = dr;
  const FilteredRun fr(geo.spec, gc, c.l_max, rc.cutoff, rc.data, rc.forcing, c.guard_threshold);
  const double T_end = 2.0 * c.T0;
  if (T_end > fr.T_max())
    throw ConfigError("time.T0", "run '" + rc.name + "' needs t = 2 T0 = " + num(T_end) +
                                     " beyond the finite-speed guard T_max = " + num(fr.T_max()));
  MorawetzRun::Options opt;
  MorawetzRun run(fr.grid(), fr.weights(), opt, fr.forcing(), fr.modes());
  DecayOutcome out;
  out.grid_hash = hex64(fr.grid().hash());
  out.E0 = fr.E0();
  out.T_max = fr.T_max();
  out.log_c0 = run.accumulator().f_layout.log_domination_constant();
  Csv csv({"t", "T1_a", "T1_b", "T1_c", "T1_d", "shell_sup", "N_L1", "energy"});
  const long every = std::max(1L, std::lround(1.0 / c.cadence));
  const auto snaps = drive(fr, run, c.cadence, T_end, {c.T0, T_end}, [&](long i, double t, const WaveState&) {
    if (!series || i % every) return;
    const MorawetzAccumulator& a = run.accumulator();
    csv.row({num(t), num(a.T1_a), num(a.T1_b), num(a.T1_c), num(a.T1_d), num(a.shell_sup()), num(a.N_L1()),
             num(fr.energy_at(t))});
  });
  out.at_T0 = snaps[0];
  out.at_2T0 = snaps[1];
  if (series) out.series = csv.str();
  return out;
}

}  // namespace detail

inline int run_decay(const nlohmann::json& cfg, RunDir& out, int threads, Manifest& man) {
  const DecayConfig c = parse_decay_config(cfg);
  Stopwatch sw;
  man.suite = "run-decay";
  man.config_hash = config_hash(cfg);

  // Jobs: every run on the base grid, gating runs again on the refined grid,
  // and the H scan on each geometry used by a gating run.
  struct Job {
    DecayRunConfig rc;
    double dr;
    bool series;
    int kind;  // 0 base, 1 refined, 2 scan
  };
  std::vector<Job> jobs;
  for (const auto& r : c.runs) jobs.push_back({r, c.grid.dr, true, 0});
  if (c.refinement_dr > 0.0)
    for (const auto& r : c.runs)
      if (!r.informational) jobs.push_back({r, c.refinement_dr, false, 1});
  for (const auto& r : c.runs) {
    if (r.informational || r.forcing.enabled) continue;
    for (double H : c.H_scan) {
      if (H == r.cutoff.H) continue;
      DecayRunConfig s = r;
      s.cutoff.H = H;
      s.name = r.name + "@H" + std::to_string(static_cast<int>(H));
      jobs.push_back({s, c.grid.dr, false, 2});
    }
  }
  const auto results = parallel_map<detail::DecayOutcome>(threads, static_cast<int>(jobs.size()), [&](int i) {
    return detail::decay_run(c, jobs[i].rc, jobs[i].dr, jobs[i].series);
  });

  Check chk{"global_decay", "bounded space-time functionals (plateau), shell sup and refinement stability", {}};
  const double T_end = 2.0 * c.T0;
  auto ratios = [](const detail::DecayOutcome& o) {
    const RatioReport r = ratio_report(o.at_2T0, o.E0);
    return std::vector<double>{r.a, r.b, r.c, r.d};
  };
  const char* term_names[4] = {"T1_a", "T1_b", "T1_c", "T1_d"};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    const detail::DecayOutcome& o = results[i];
    man.grid_hashes.insert(o.grid_hash);
    man.max_sampled_t_over_guard = std::max(man.max_sampled_t_over_guard, T_end / o.T_max);
    if (job.kind == 1) continue;
    const bool gate = job.kind == 0 && !job.rc.informational;
    const std::string p = job.rc.name + ".";
    auto add = [&](const std::string& name, double v, double hi, const std::string& note = "") {
      chk.add(gate ? at_most(p + name, v, hi, note) : info(p + name, v, note));
    };
    const double a0[4] = {o.at_T0.T1_a, o.at_T0.T1_b, o.at_T0.T1_c, o.at_T0.T1_d};
    const double a1[4] = {o.at_2T0.T1_a, o.at_2T0.T1_b, o.at_2T0.T1_c, o.at_2T0.T1_d};
    for (int k = 0; k < 4; ++k)
      add(std::string(term_names[k]) + ".plateau_increment", plateau_increment(a0[k], a1[k]), 0.1,
          "(Q(2T0) - Q(T0)) / Q(T0), T0 = " + num(c.T0));
    if (job.kind == 2) continue;
    add("shell_sup.plateau_increment", plateau_increment(o.at_T0.shell_sup(), o.at_2T0.shell_sup()), 0.1);
    const ShellNorms sn = shell_norms(o.at_2T0);
    add("shell_domination_defect", (o.at_2T0.T1_b - sn.comparison) / sn.comparison, 1e-8,
        "log-weighted term vs sum_k k^-2 ln(2)^-2 sup_k S_k");
    if (job.rc.forcing.enabled) {
      const double c0 = o.log_c0;
      const double defect = (c0 * o.at_2T0.N_shell() - o.at_2T0.N_log) / std::max(o.at_2T0.N_log, 1e-300);
      add("log_forcing_domination_defect", defect, 1e-12, "c0 N_shell - N_log, relative");
    }
    const auto r = ratios(o);
    for (int k = 0; k < 4; ++k) chk.add(info(p + term_names[k] + ".ratio", r[k], "T1 / (E0 + N_L1) at 2 T0"));
    chk.add(info(p + "shell_sup.ratio", ratio_report(o.at_2T0, o.E0).shell_linf2));
    chk.add(info(p + "E0", o.E0));
    if (gate && c.refinement_dr > 0.0) {
      for (std::size_t m = 0; m < jobs.size(); ++m) {
        if (jobs[m].kind != 1 || jobs[m].rc.name != job.rc.name) continue;
        const auto rf = ratios(results[m]);
        for (int k = 0; k < 4; ++k)
          chk.add(at_most(p + term_names[k] + ".ratio_refinement_change", std::abs(rf[k] / r[k] - 1.0), 0.1,
                          "dr " + num(c.grid.dr) + " -> " + num(c.refinement_dr)));
      }
    }
    // Per-run report.
    nlohmann::json rep;
    rep["run_id"] = job.rc.name;
    rep["grid_hash"] = o.grid_hash;
    rep["H"] = jnum(job.rc.cutoff.H);
    rep["E0"] = jnum(o.E0);
    rep["T_max"] = jnum(o.T_max);
    rep["thm1"] = {{"T0", jnum(c.T0)},
                   {"at_T0", accumulator_json(o.at_T0)},
                   {"at_2T0", accumulator_json(o.at_2T0)},
                   {"ratios", {{"T1_a", jnum(r[0])}, {"T1_b", jnum(r[1])}, {"T1_c", jnum(r[2])}, {"T1_d", jnum(r[3])}}}};
    rep["thm1prime"] = {{"shell_linf", jnum(sn.linf)},
                        {"comparison", jnum(sn.comparison)},
                        {"forcing_shell_l1", jnum(sn.forcing_l1)},
                        {"shell_sup_ratio", jnum(ratio_report(o.at_2T0, o.E0).shell_linf2)}};
    rep["thm2"] = nullptr;
    nlohmann::json slopes = nlohmann::json::object();
    for (int k = 0; k < 4; ++k) slopes[std::string(term_names[k]) + "_plateau_increment"] = jnum(plateau_increment(a0[k], a1[k]));
    rep["slopes"] = slopes;
    out.write_json("report_" + job.rc.name + ".json", rep);
    out.write("series_" + job.rc.name + ".csv", o.series);
  }
  man.checks.push_back(chk);
  man.wall_time_s = sw.seconds();
  out.write_json("manifest.json", man.to_json());
  return man.passed() ? 0 : 1;
}

}  // namespace morawetz::lab
