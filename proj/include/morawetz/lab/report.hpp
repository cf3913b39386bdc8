#pragma once

// report: standalone SVG line plots from a finished run directory.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "morawetz/lab/common.hpp"

namespace morawetz::lab {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw ReportError(path.filename().string() + ": missing header");
  t.columns = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.columns.size())
      throw ReportError(path.filename().string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " cells, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// Empty cells and nan read as NaN; anything else unparsable is corruption.
inline double cell_value(const std::string& s, const std::string& where) {
  if (s.empty() || s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ReportError(where + ": not a number: '" + s + "'");
  return v;
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

struct Plot {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

}  // namespace detail

inline std::string render_svg(const Plot& p) {
  constexpr double W = 720, Hh = 440, L = 80, R = 180, T = 40, B = 56;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  auto tx = [&](double v) { return p.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.logy ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  std::vector<std::vector<std::pair<double, double>>> clean;
  for (const auto& s : p.series) {
    std::vector<std::pair<double, double>> c;
    for (const auto& [x, y] : s.pts) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((p.logx && x <= 0.0) || (p.logy && y <= 0.0)) continue;
      c.emplace_back(tx(x), ty(y));
      x0 = std::min(x0, c.back().first);
      x1 = std::max(x1, c.back().first);
      y0 = std::min(y0, c.back().second);
      y1 = std::max(y1, c.back().second);
    }
    clean.push_back(std::move(c));
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300 * std::max(1.0, std::abs(y0))) y0 -= 0.5, y1 += 0.5;
  const double pw = W - L - R, ph = Hh - T - B;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return T + ph - (v - y0) / (y1 - y0) * ph; };
  using detail::fmt;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\" viewBox=\"0 0 " << W
    << ' ' << Hh << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"24\" font-size=\"14\">" << detail::xml_escape(p.title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    const double xl = p.logx ? std::pow(10.0, xv) : xv, yl = p.logy ? std::pow(10.0, yv) : yv;
    o << "<line x1=\"" << fmt("%.2f", px(xv)) << "\" y1=\"" << T + ph << "\" x2=\"" << fmt("%.2f", px(xv))
      << "\" y2=\"" << T + ph + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt("%.2f", px(xv)) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
      << fmt("%.3g", xl) << "</text>\n";
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << fmt("%.2f", py(yv)) << "\" x2=\"" << L << "\" y2=\""
      << fmt("%.2f", py(yv)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << L - 8 << "\" y=\"" << fmt("%.2f", py(yv) + 4) << "\" text-anchor=\"end\">"
      << fmt("%.3g", yl) << "</text>\n";
  }
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << Hh - 16 << "\" text-anchor=\"middle\">"
    << detail::xml_escape(p.xlabel + (p.logx ? " (log)" : "")) << "</text>\n";
  o << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2
    << ")\">" << detail::xml_escape(p.ylabel + (p.logy ? " (log)" : "")) << "</text>\n";
  for (std::size_t s = 0; s < clean.size(); ++s) {
    const char* color = palette[s % (sizeof palette / sizeof *palette)];
    if (!clean[s].empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < clean[s].size(); ++i)
        o << (i ? " " : "") << fmt("%.2f", px(clean[s][i].first)) << ',' << fmt("%.2f", py(clean[s][i].second));
      o << "\"/>\n";
    }
    const double ly = T + 12 + 16.0 * static_cast<double>(s);
    o << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 28 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << L + pw + 32 << "\" y=\"" << ly + 4 << "\">" << detail::xml_escape(p.series[s].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline std::string sanitize(const std::string& s) {
  std::string o;
  for (char ch : s) o += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_') ? ch : '_';
  while (o.find("__") != std::string::npos) o.replace(o.find("__"), 2, "_");
  while (!o.empty() && o.back() == '_') o.pop_back();
  return o;
}

struct ReportResult {
  std::vector<std::string> svgs;
  std::string summary;
};

namespace detail {

// series_*.csv: one plot per functional column against t.
inline void plot_series(const std::string& stem, const Table& t, const std::string& file,
                        std::vector<std::pair<std::string, std::string>>& out) {
  const int tc = t.col("t");
  if (tc < 0) throw ReportError(file + ": no 't' column");
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (static_cast<int>(c) == tc) continue;
    Plot p;
    p.title = stem + ": " + t.columns[c];
    p.xlabel = "T";
    p.ylabel = t.columns[c];
    PlotSeries s{t.columns[c], {}};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string where = file + ":" + std::to_string(r + 2);
      s.pts.emplace_back(cell_value(t.rows[r][tc], where), cell_value(t.rows[r][c], where));
    }
    p.series.push_back(std::move(s));
    out.emplace_back(sanitize(stem + "_" + t.columns[c]) + ".svg", render_svg(p));
  }
}

// Sweep tables (check_id, H, norm, optional z): one log-log plot per check id.
inline void plot_sweeps(const std::string& stem, const Table& t, const std::string& file,
                        std::vector<std::pair<std::string, std::string>>& out) {
  const int ci = t.col("check_id"), hi = t.col("H"), ni = t.col("norm"), zr = t.col("z_re"), zi = t.col("z_im");
  if (ci < 0 || hi < 0 || ni < 0) throw ReportError(file + ": expected columns check_id, H, norm");
  std::vector<std::string> order;
  std::map<std::string, std::vector<PlotSeries>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = file + ":" + std::to_string(r + 2);
    const std::string id = row[ci];
    if (!groups.count(id)) order.push_back(id);
    auto& g = groups[id];
    std::string label = "norm";
    if (zr >= 0 && zi >= 0 && !row[zr].empty())
      label = "z = " + fmt("%g", cell_value(row[zr], where)) + fmt("%+gi", cell_value(row[zi], where));
    auto it = std::find_if(g.begin(), g.end(), [&](const PlotSeries& s) { return s.label == label; });
    if (it == g.end()) {
      g.push_back({label, {}});
      it = std::prev(g.end());
    }
    it->pts.emplace_back(cell_value(row[hi], where), cell_value(row[ni], where));
  }
  for (const auto& id : order) {
    Plot p;
    p.title = id;
    p.xlabel = id.rfind("localized", 0) == 0 ? "t" : id == "optimizing_family" ? "T" : id == "random_max" ? "dr" : "H";
    p.ylabel = "norm";
    p.logx = p.logy = true;
    p.series = groups[id];
    out.emplace_back(sanitize(stem + "_" + id) + ".svg", render_svg(p));
  }
}

// verify_operators.csv: commutator residual against dr, one curve per kind.
inline void plot_operators(const std::string& stem, const Table& t, const std::string& file,
                           std::vector<std::pair<std::string, std::string>>& out) {
  const int ci = t.col("check_id"), qi = t.col("quantity"), di = t.col("dr"), vi = t.col("value");
  if (ci < 0 || qi < 0 || di < 0 || vi < 0) throw ReportError(file + ": expected columns check_id, quantity, dr, value");
  Plot p;
  p.title = "commutator residual under refinement";
  p.xlabel = "dr";
  p.ylabel = "max residual";
  p.logx = p.logy = true;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row[ci] != "commutator_residual") continue;
    const std::string where = file + ":" + std::to_string(r + 2);
    auto it = std::find_if(p.series.begin(), p.series.end(), [&](const PlotSeries& s) { return s.label == row[qi]; });
    if (it == p.series.end()) {
      p.series.push_back({row[qi], {}});
      it = std::prev(p.series.end());
    }
    it->pts.emplace_back(cell_value(row[di], where), cell_value(row[vi], where));
  }
  if (!p.series.empty()) out.emplace_back(sanitize(stem + "_commutator_residual") + ".svg", render_svg(p));
}

}  // namespace detail

inline ReportResult build_report(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ReportError("run directory " + dir.string() + " does not exist");
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".csv" && (name.rfind("series_", 0) == 0 || name.rfind("verify_", 0) == 0))
      csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  const bool has_manifest = fs::exists(dir / "manifest.json");
  if (!has_manifest || csvs.empty())
    throw ReportError("run directory " + dir.string() + " is incomplete: expected manifest.json and at least one " +
                      "series_*.csv or verify_*.csv (written by run-decay, run-local, verify-operators or " +
                      "verify-speccalc)");
  nlohmann::json man;
  {
    std::ifstream in(dir / "manifest.json");
    try {
      man = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ReportError("manifest.json is corrupt: " + std::string(e.what()));
    }
  }
  std::vector<std::pair<std::string, std::string>> svgs;
  for (const auto& path : csvs) {
    const std::string file = path.filename().string();
    const std::string stem = path.stem().string();
    const Table t = read_csv(path);
    if (file.rfind("series_", 0) == 0) detail::plot_series(stem, t, file, svgs);
    else if (t.col("quantity") >= 0) detail::plot_operators(stem, t, file, svgs);
    else detail::plot_sweeps(stem, t, file, svgs);
  }
  ReportResult res;
  std::ostringstream os;
  os << "report for " << man.value("suite", std::string("?")) << " (" << (man.value("passed", false) ? "PASS" : "FAIL")
     << ")\n";
  if (man.contains("checks"))
    for (const auto& c : man["checks"]) {
      int fails = 0;
      for (const auto& m : c["measurements"])
        if (m.contains("passed") && !m["passed"].get<bool>()) ++fails;
      os << "  [" << (c.value("passed", false) ? "pass" : "FAIL") << "] " << c.value("id", std::string("?"));
      if (fails) os << " (" << fails << " failing)";
      os << "\n";
    }
  RunDir out(dir);
  for (const auto& [name, svg] : svgs) {
    out.write(name, svg);
    res.svgs.push_back(name);
  }
  os << "  wrote " << svgs.size() << " SVG plot" << (svgs.size() == 1 ? "" : "s") << "\n";
  res.summary = os.str();
  return res;
}

}  // namespace morawetz::lab
