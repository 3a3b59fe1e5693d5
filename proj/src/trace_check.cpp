#include "rcons/trace_check.hpp"

#include <map>
#include <optional>
#include <set>

#include "json.hpp"

namespace rcons {

namespace {

using nlohmann::json;

struct RunTrace {
  std::optional<json> config;
  std::map<int, int> init;          // agent -> value
  std::map<int, json> decisions;    // agent -> last decide payload
  std::vector<json> machinery;
  std::optional<json> invariants;
};

const json& field(const json& rec, const char* key, int line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw TraceFormatError("line " + std::to_string(line) + ": missing \"" + key + "\"");
  return *it;
}

int as_int(const json& j, const char* what, int line) {
  if (!j.is_number_integer()) throw TraceFormatError("line " + std::to_string(line) + ": " + what + " is not an integer");
  return j.get<int>();
}

void check_run(const std::string& id, const RunTrace& run, std::vector<std::string>& out) {
  auto fail = [&](const std::string& msg) { out.push_back(id + ": " + msg); };
  if (!run.config) {
    fail("no config record");
    return;
  }
  const json& cfg = *run.config;
  const int n = cfg.value("n", 0);
  const int t = cfg.value("t", 0);
  const int last = t + 4;
  const bool honest = !cfg.contains("deviation") || cfg["deviation"].is_null();

  std::set<int> initial;
  for (const auto& [a, v] : run.init) initial.insert(v);

  std::set<int> decided;
  std::map<int, std::string> kind;
  for (int a = 1; a <= n; ++a) {
    auto it = run.decisions.find(a);
    if (it == run.decisions.end()) {
      fail("agent " + std::to_string(a) + " never decided");
      continue;
    }
    const json& d = it->second;
    const std::string s = d.value("decision", "");
    const int r = d.value("round", 0);
    if (s == "undecided" || s.empty()) fail("agent " + std::to_string(a) + " undecided");
    if (r > last) fail("agent " + std::to_string(a) + " decided after round " + std::to_string(last));
    if (s == "bottom" && honest) fail("agent " + std::to_string(a) + " decided bottom in an honest run");
    if (s.rfind("value:", 0) == 0) {
      const int v = d.value("value", -1);
      decided.insert(v);
      if (!initial.empty() && !initial.count(v)) fail("agent " + std::to_string(a) + " decided a value nobody proposed");
    }
    kind[a] = s;
  }
  if (decided.size() > 1) fail("agents decided " + std::to_string(decided.size()) + " distinct values");

  for (std::size_t k = 1; k < run.machinery.size(); ++k) {
    const json& a = run.machinery[0];
    const json& b = run.machinery[k];
    if (a["m_star"] != b["m_star"] || a["D"] != b["D"]) fail("machinery records disagree on m* or D");
    if (!a["elected"].is_null() && !b["elected"].is_null() && a["elected"]["value"] != b["elected"]["value"]) {
      fail("machinery records elect different values");
    }
  }
  for (const json& m : run.machinery) {
    if (!m["m_star"].is_null() && m["m_star"].get<int>() > t + 2) fail("decision round after t+2");
  }

  if (!run.invariants) {
    fail("no invariant report (trace truncated?)");
    return;
  }
  const json& inv = *run.invariants;
  for (const char* key : {"agreement", "validity", "termination", "no_bottom", "message_bound", "hs_agreement",
                          "clean_rounds", "machinery_agreement"}) {
    if (!inv.contains(key)) continue;
    if (key == std::string("no_bottom") && !honest) continue;
    if (!inv[key].get<bool>()) fail(std::string("recorded invariant ") + key + " is false");
  }

  if (inv.contains("utilities") && cfg.contains("beta") && cfg["beta"].size() == 3 &&
      static_cast<int>(inv["utilities"].size()) == n) {
    const double b0 = cfg["beta"][0], b1 = cfg["beta"][1], b2 = cfg["beta"][2];
    bool none = false;
    for (const auto& [a, s] : kind) none = none || s == "bottom" || s == "undecided";
    for (int a = 1; a <= n; ++a) {
      double expect = b2;
      if (!none && decided.size() == 1 && run.init.count(a)) expect = run.init.at(a) == *decided.begin() ? b0 : b1;
      if (inv["utilities"][static_cast<std::size_t>(a - 1)].get<double>() != expect) {
        fail("utility of agent " + std::to_string(a) + " does not follow from the decisions");
        break;
      }
    }
  }
}

}  // namespace

TraceVerdict check_trace(std::istream& in) {
  std::map<std::string, RunTrace> runs;
  std::vector<std::string> order;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) throw TraceFormatError("line " + std::to_string(lineno) + ": not a JSON object");
    const json& id_j = field(rec, "run_id", lineno);
    if (!id_j.is_string()) throw TraceFormatError("line " + std::to_string(lineno) + ": run_id is not a string");
    as_int(field(rec, "round", lineno), "round", lineno);
    const int agent = as_int(field(rec, "agent", lineno), "agent", lineno);
    if (!field(rec, "phase", lineno).is_string()) throw TraceFormatError("line " + std::to_string(lineno) + ": bad phase");
    const json& ev = field(rec, "event", lineno);
    if (!ev.is_string()) throw TraceFormatError("line " + std::to_string(lineno) + ": bad event");
    const json& payload = field(rec, "payload", lineno);

    const std::string id = id_j.get<std::string>();
    if (!runs.count(id)) order.push_back(id);
    RunTrace& run = runs[id];
    const std::string e = ev.get<std::string>();
    try {
      if (e == "config") {
        run.config = payload;
        if (!payload.at("n").is_number_integer() || !payload.at("t").is_number_integer()) {
          throw TraceFormatError("line " + std::to_string(lineno) + ": config lacks n or t");
        }
      } else if (e == "init") {
        run.init[agent] = payload.at("value").get<int>();
      } else if (e == "decide") {
        payload.at("decision").get<std::string>();
        run.decisions[agent] = payload;
      } else if (e == "machinery") {
        payload.at("m_star");
        payload.at("D");
        payload.at("elected");
        run.machinery.push_back(payload);
      } else if (e == "invariants") {
        run.invariants = payload;
      }
    } catch (const json::exception& ex) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (runs.empty()) throw TraceFormatError("empty trace");

  TraceVerdict verdict;
  for (const std::string& id : order) {
    ++verdict.runs;
    check_run(id, runs[id], verdict.failures);
  }
  return verdict;
}

}  // namespace rcons
