#pragma once

// Shared plumbing for the experiment suites: checks and manifests, CSV/JSON
// output with fixed number formatting, and a small deterministic parallel map.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "morawetz/grid.hpp"
#include "morawetz/json_fields.hpp"

namespace morawetz::lab {

inline constexpr const char* kVersion = "0.1.0";

// Numbers in every CSV/JSON report go through here so reruns are byte-identical.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

// JSON numbers are emitted as rounded doubles (10 significant digits).
inline nlohmann::json jnum(double v) {
  if (!std::isfinite(v)) return num(v);
  return std::stod(num(v));
}

enum class Relation { le, ge, within };

struct Measurement {
  std::string name;
  double value = 0.0;
  Relation rel = Relation::le;
  double lo = 0.0, hi = 0.0;  // threshold (le: hi, ge: lo, within: [lo, hi])
  bool informational = false;
  std::string note;

  bool passed() const {
    if (informational) return true;
    if (std::isnan(value)) return false;
    switch (rel) {
      case Relation::le: return value <= hi;
      case Relation::ge: return value >= lo;
      case Relation::within: return value >= lo && value <= hi;
    }
    return false;
  }

  std::string threshold_text() const {
    switch (rel) {
      case Relation::le: return "<= " + num(hi);
      case Relation::ge: return ">= " + num(lo);
      case Relation::within: return "in [" + num(lo) + ", " + num(hi) + "]";
    }
    return "";
  }
};

inline Measurement at_most(std::string name, double v, double hi, std::string note = "") {
  return {std::move(name), v, Relation::le, 0.0, hi, false, std::move(note)};
}
inline Measurement at_least(std::string name, double v, double lo, std::string note = "") {
  return {std::move(name), v, Relation::ge, lo, 0.0, false, std::move(note)};
}
inline Measurement within(std::string name, double v, double lo, double hi, std::string note = "") {
  return {std::move(name), v, Relation::within, lo, hi, false, std::move(note)};
}
inline Measurement info(std::string name, double v, std::string note = "") {
  Measurement m{std::move(name), v, Relation::le, 0.0, 0.0, true, std::move(note)};
  return m;
}

struct Check {
  std::string id;
  std::string description;
  std::vector<Measurement> measurements;

  bool passed() const {
    return std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed(); });
  }
  int failures() const {
    return static_cast<int>(
        std::count_if(measurements.begin(), measurements.end(), [](const Measurement& m) { return !m.passed(); }));
  }
  void add(Measurement m) { measurements.push_back(std::move(m)); }
};

inline nlohmann::json to_json(const Measurement& m) {
  nlohmann::json j{{"name", m.name}, {"value", jnum(m.value)}};
  if (m.informational) {
    j["informational"] = true;
  } else {
    j["threshold"] = m.threshold_text();
    j["passed"] = m.passed();
  }
  if (!m.note.empty()) j["note"] = m.note;
  return j;
}

struct Manifest {
  std::string suite;
  std::string config_hash;
  std::set<std::string> grid_hashes;
  std::vector<Check> checks;
  double wall_time_s = 0.0;
  double max_sampled_t_over_guard = 0.0;  // < = 1 means the guard was respected

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
  }

  nlohmann::json to_json() const {
    nlohmann::json cj = nlohmann::json::array();
    for (const auto& c : checks) {
      nlohmann::json ms = nlohmann::json::array();
      for (const auto& m : c.measurements) ms.push_back(lab::to_json(m));
      cj.push_back({{"id", c.id}, {"description", c.description}, {"passed", c.passed()}, {"measurements", ms}});
    }
    nlohmann::json j{{"suite", suite},
                     {"version", kVersion},
                     {"config_hash", config_hash},
                     {"grid_hashes", std::vector<std::string>(grid_hashes.begin(), grid_hashes.end())},
                     {"checks", cj},
                     {"passed", passed()},
                     {"wall_time_s", jnum(wall_time_s)}};
    if (max_sampled_t_over_guard > 0.0)
      j["guard"] = {{"max_t_over_T_max", jnum(max_sampled_t_over_guard)},
                    {"respected", max_sampled_t_over_guard <= 1.0}};
    return j;
  }
};

// FNV-1a of the canonical dump (object keys sorted, no whitespace).
inline std::string config_hash(const nlohmann::json& j) { return hex64(Fnv1a().str(j.dump()).digest()); }

class Csv {
 public:
  explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  Csv& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("csv row has the wrong number of cells");
    for (const auto& c : cells)
      if (c.find_first_of(",\n") != std::string::npos) throw std::logic_error("csv cell contains a separator: " + c);
    rows_.push_back(cells);
    return *this;
  }

  std::string str() const {
    std::ostringstream os;
    write_line(os, columns_);
    for (const auto& r : rows_) write_line(os, r);
    return os.str();
  }

  bool empty() const { return rows_.empty(); }

 private:
  static void write_line(std::ostringstream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// The single writer for a run directory.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path root) : root_(std::move(root)) { std::filesystem::create_directories(root_); }

  const std::filesystem::path& path() const { return root_; }

  void write(const std::string& name, const std::string& content) {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(root_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root_ / name).string());
    out << content;
    written_.push_back(name);
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::mutex mu_;
  std::vector<std::string> written_;
};

// Thread count: explicit value, else MORAWETZ_LAB_THREADS, else 1.
inline int resolve_threads(std::optional<int> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("MORAWETZ_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    throw ConfigError("MORAWETZ_LAB_THREADS", "expected a positive integer, got '" + std::string(env) + "'");
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; results keep index
// order so output never depends on scheduling. The first exception is rethrown.
template <typename R>
std::vector<R> parallel_map(int threads, int n, const std::function<R(int)>& fn) {
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        slots[static_cast<std::size_t>(i)].emplace(fn(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int k = std::max(1, std::min(threads, n));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  std::vector<R> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace morawetz::lab
