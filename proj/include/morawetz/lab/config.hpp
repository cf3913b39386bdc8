#pragma once

// Experiment configs: strict JSON, every unknown field rejected with its path.

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/json_fields.hpp"
#include "morawetz/manifold.hpp"
#include "morawetz/spectral.hpp"

namespace morawetz::lab {

struct Geometry {
  std::string name;
  ManifoldSpec spec;
};

struct GridConfig {
  double r_max = 400.0;
  double dr = 0.125;

  int N() const { return static_cast<int>(std::lround(r_max / dr)); }
  RadialGrid make(const ManifoldSpec& spec) const { return RadialGrid(spec, N(), dr); }
};

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

inline GridConfig parse_grid(StrictObject o) {
  GridConfig g;
  g.r_max = o.number("r_max");
  g.dr = o.number("dr");
  o.finish();
  if (!(g.dr > 0.0)) throw ConfigError(o.field_path("dr"), "must be positive");
  if (!(g.r_max > 0.0)) throw ConfigError(o.field_path("r_max"), "must be positive");
  const double ratio = g.r_max / g.dr;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError(o.field_path("r_max"), "must be an integer multiple of dr");
  return g;
}

inline std::vector<Geometry> parse_geometries(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of geometries");
  std::vector<Geometry> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    StrictObject o(j[i], p);
    Geometry g;
    g.name = o.string("name");
    g.spec = manifold_from_json(o.at("manifold"), o.field_path("manifold"));
    o.finish();
    for (const auto& prev : out)
      if (prev.name == g.name) throw ConfigError(o.field_path("name"), "duplicate geometry name '" + g.name + "'");
    out.push_back(std::move(g));
  }
  return out;
}

inline WindowFamily parse_family(const std::string& s, const std::string& path) {
  if (s == "psi") return WindowFamily::psi;
  if (s == "psi_tilde") return WindowFamily::psi_tilde;
  throw ConfigError(path, "unknown window family '" + s + "' (expected psi or psi_tilde)");
}

// H values must be powers of two >= 1.
inline std::vector<double> parse_dyadic(StrictObject& o, const std::string& key) {
  std::vector<double> v = o.numbers(key);
  if (v.empty()) throw ConfigError(o.field_path(key), "must not be empty");
  for (double h : v) {
    const double k = std::log2(h);
    if (!(h >= 1.0) || std::abs(k - std::round(k)) > 1e-12)
      throw ConfigError(o.field_path(key), "values must be powers of two >= 1");
  }
  return v;
}

inline void require_positive(double v, StrictObject& o, const std::string& key) {
  if (!(v > 0.0)) throw ConfigError(o.field_path(key), "must be positive");
}

}  // namespace morawetz::lab
