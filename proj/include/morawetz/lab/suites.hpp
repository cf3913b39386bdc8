#pragma once

// Command dispatch for the morawetz-lab driver.

#include <nlohmann/json.hpp>

#include <optional>
#include <sstream>
#include <string>

#include "morawetz/lab/common.hpp"
#include "morawetz/lab/config.hpp"
#include "morawetz/lab/decay.hpp"
#include "morawetz/lab/local.hpp"
#include "morawetz/lab/operators.hpp"
#include "morawetz/lab/report.hpp"
#include "morawetz/lab/speccalc.hpp"

namespace morawetz::lab {

struct SuiteResult {
  int exit_code = 0;
  std::string summary;
};

inline std::string summarize(const Manifest& man) {
  std::ostringstream os;
  os << man.suite << ": " << (man.passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& c : man.checks) {
    os << "  [" << (c.passed() ? "pass" : "FAIL") << "] " << c.id;
    if (!c.passed()) os << " (" << c.failures() << " failing measurement" << (c.failures() == 1 ? "" : "s") << ")";
    os << "\n";
    for (const auto& m : c.measurements)
      if (!m.passed()) os << "      " << m.name << " = " << num(m.value) << ", want " << m.threshold_text() << "\n";
  }
  return os.str();
}

inline SuiteResult run_command(const std::string& command, const std::string& config_path, const std::string& out_dir,
                               std::optional<int> threads_opt) {
  const int threads = resolve_threads(threads_opt);
  if (command == "report") {
    const ReportResult r = build_report(out_dir);
    return {0, r.summary};
  }
  const nlohmann::json cfg = load_json(config_path);
  using Runner = int (*)(const nlohmann::json&, RunDir&, int, Manifest&);
  Runner run = nullptr;
  if (command == "verify-operators") run = run_verify_operators;
  else if (command == "verify-speccalc") run = run_verify_speccalc;
  else if (command == "run-decay") run = run_decay;
  else if (command == "run-local") run = run_local;
  else throw ConfigError("command", "unknown command '" + command + "'");
  RunDir out(out_dir);
  out.write_json("config.json", cfg);
  Manifest man;
  const int rc = run(cfg, out, threads, man);
  return {rc, summarize(man)};
}

}  // namespace morawetz::lab
