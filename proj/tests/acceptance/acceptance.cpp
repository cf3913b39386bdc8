// End-to-end acceptance run: drives the CLI over the shipped configs and
// prints one PASS/FAIL line per criterion.
//
//   acceptance <morawetz-lab> <configs dir> <work dir> [--expect-fail AC5,AC6]
//
// Exit status is 0 when the failing criteria are exactly the expected ones
// (known, documented failures); any other outcome exits 1.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Criterion {
  std::string id;
  std::string what;
  bool pass = false;
  std::string detail;
};

int run_cli(const std::string& exe, const std::string& cmd, const fs::path& cfg, const fs::path& out, int threads) {
  fs::create_directories(out);
  std::ostringstream s;
  s << '"' << exe << "\" " << cmd << " --config \"" << cfg.string() << "\" --out \"" << out.string()
    << "\" --threads " << threads << " > \"" << (out / "stdout.log").string() << "\" 2>&1";
  const int rc = std::system(s.str().c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_report(const std::string& exe, const fs::path& out) {
  const std::string s = '"' + exe + "\" report --out \"" + out.string() + "\" > \"" +
                        (out / "report.log").string() + "\" 2>&1";
  const int rc = std::system(s.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return json();
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return json();
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Check `id` from a manifest: passed flag plus the first few failing measurements.
Criterion from_check(const std::string& ac, const std::string& what, const json& man, const std::string& id) {
  Criterion c{ac, what, false, "check '" + id + "' missing"};
  if (!man.is_object() || !man.contains("checks")) return c;
  for (const auto& ch : man["checks"]) {
    if (ch.value("id", "") != id) continue;
    c.pass = ch.value("passed", false);
    int shown = 0, failed = 0;
    std::string d;
    for (const auto& m : ch["measurements"]) {
      if (!m.contains("passed") || m["passed"].is_null() || m["passed"].get<bool>()) continue;
      ++failed;
      if (shown++ < 3) {
        d += (d.empty() ? "" : "; ") + m.value("name", std::string("?")) + " = ";
        d += m["value"].is_number() ? std::to_string(m["value"].get<double>()) : m["value"].dump();
      }
    }
    c.detail = c.pass ? std::to_string(ch["measurements"].size()) + " measurements"
                      : std::to_string(failed) + " failing: " + d + (failed > 3 ? "; ..." : "");
    return c;
  }
  return c;
}

// Byte comparison of two run directories; manifests are compared without wall_time_s.
std::string compare_dirs(const fs::path& a, const fs::path& b, int& files) {
  std::set<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.insert(e.path().filename().string());
  na.erase("stdout.log");
  nb.erase("stdout.log");
  na.erase("report.log");
  nb.erase("report.log");
  if (na != nb) return "file sets differ in " + a.filename().string();
  for (const auto& n : na) {
    ++files;
    if (n == "manifest.json") {
      json ja = read_json(a / n), jb = read_json(b / n);
      ja.erase("wall_time_s");
      jb.erase("wall_time_s");
      if (ja.dump() != jb.dump()) return n + " differs";
    } else if (slurp(a / n) != slurp(b / n)) {
      return n + " differs";
    }
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr, "usage: acceptance <morawetz-lab> <configs dir> <work dir> [--expect-fail AC5,AC6]\n");
    return 2;
  }
  const std::string exe = argv[1];
  const fs::path cfg = argv[2], work = argv[3];
  std::set<std::string> expected_fail;
  for (int i = 4; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) != "--expect-fail") continue;
    std::stringstream ss(argv[i + 1]);
    for (std::string t; std::getline(ss, t, ',');)
      if (!t.empty()) expected_fail.insert(t);
  }
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::string>> suites{
      {"verify-operators", "operators"}, {"verify-speccalc", "speccalc"}, {"run-decay", "decay"}, {"run-local", "local"}};
  std::map<std::string, json> man;
  for (const auto& [cmd, stem] : suites) {
    const int rc = run_cli(exe, cmd, cfg / (stem + ".json"), work / stem, 1);
    man[stem] = read_json(work / stem / "manifest.json");
    const bool ok = man[stem].is_object() && man[stem].value("passed", false);
    std::printf("# %-16s exit %d (%s)\n", cmd.c_str(), rc, ok ? "all checks pass" : "some checks fail");
    if ((rc == 0) != ok || rc == 2) std::printf("# warning: exit code %d inconsistent with manifest\n", rc);
    std::fflush(stdout);
  }

  std::vector<Criterion> acs;
  acs.push_back(from_check("AC1", "operator algebra", man["operators"], "operator_algebra"));
  acs.push_back(from_check("AC2", "commutator identities", man["operators"], "commutator_identities"));
  acs.push_back(from_check("AC3", "solver oracles", man["operators"], "solver_oracle"));
  acs.push_back(from_check("AC4", "Hardy-Poincare sharpness", man["speccalc"], "hardy_poincare"));
  acs.push_back(from_check("AC5", "spectral exponents", man["speccalc"], "spectral_exponents"));
  acs.push_back(from_check("AC6", "global decay functionals", man["decay"], "global_decay"));
  acs.push_back(from_check("AC7", "local cone decay", man["local"], "local_cone_decay"));

  // Determinism: rerun decay and local with a different thread count, then
  // render reports for both copies and compare everything byte for byte.
  Criterion det{"AC8", "byte-identical reruns", true, ""};
  int files = 0;
  for (const std::string stem : {"decay", "local"}) {
    const std::string cmd = stem == "decay" ? "run-decay" : "run-local";
    const fs::path again = work / (stem + "_rerun");
    run_cli(exe, cmd, cfg / (stem + ".json"), again, 2);
    if (run_report(exe, work / stem) != 0 || run_report(exe, again) != 0) {
      det.pass = false;
      det.detail = "report failed for " + stem;
      break;
    }
    const std::string diff = compare_dirs(work / stem, again, files);
    if (!diff.empty()) {
      det.pass = false;
      det.detail = diff;
      break;
    }
  }
  if (det.pass) det.detail = std::to_string(files) + " files identical (threads 1 vs 2)";
  acs.push_back(det);

  std::set<std::string> failed;
  for (const auto& c : acs) {
    std::printf("%s %s: %s (%s)\n", c.id.c_str(), c.pass ? "PASS" : "FAIL", c.what.c_str(), c.detail.c_str());
    if (!c.pass) failed.insert(c.id);
  }
  if (failed == expected_fail) {
    if (!failed.empty()) std::printf("# failing criteria match the documented known failures\n");
    return 0;
  }
  for (const auto& f : failed)
    if (!expected_fail.count(f)) std::printf("# unexpected failure: %s\n", f.c_str());
  for (const auto& f : expected_fail)
    if (!failed.count(f)) std::printf("# expected failure now passes: %s (update the registration)\n", f.c_str());
  return 1;
}
