#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <atomic>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rcons/experiment.hpp"
#include "rcons/simulator.hpp"
#include "rcons/trace_check.hpp"

using namespace rcons;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kPropertyFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path out_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("RCONS_OUT_DIR"); dir != nullptr && *dir != '\0') path = fs::path(dir) / path;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

void write_file(const std::string& p, const std::string& content) {
  std::ofstream f(out_path(p), std::ios::binary);
  if (!f) throw UsageError("cannot write " + p);
  f << content;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

// Common run options shared by run and batch.
struct RunOptions {
  int n = 0;
  int t = 0;
  std::optional<std::uint64_t> seed;
  std::string values;
  int domain = 0;
  std::string pattern_file;
  bool sample = false;
  std::string beta;
  std::uint64_t modulus = PrimeField::kDefaultModulus;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--n", o.n, "number of agents")->required();
  cmd->add_option("--t", o.t, "omission failure bound")->required();
  cmd->add_option("--seed", o.seed, "random seed")->required();
  cmd->add_option("--values", o.values, "comma-separated initial values, one label per agent");
  cmd->add_option("--domain", o.domain, "size of the value domain when values are sampled");
  cmd->add_option("--pattern", o.pattern_file, "failure pattern file (JSON)");
  cmd->add_flag("--sample-pattern", o.sample, "sample a blind failure pattern from the seed");
  cmd->add_option("--beta", o.beta, "utilities b0,b1,b2");
  cmd->add_option("--modulus", o.modulus, "prime field modulus");
}

struct Labels {
  std::vector<std::string> names;  // index = value
  std::string name(int v) const {
    return v >= 0 && v < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(v)] : std::to_string(v);
  }
};

RunConfig base_config(const RunOptions& o, Labels& labels) {
  RunConfig cfg;
  cfg.n = o.n;
  cfg.t = o.t;
  cfg.seed = *o.seed;
  cfg.modulus = o.modulus;
  if (!o.values.empty()) {
    std::map<std::string, int> index;
    for (const std::string& v : split(o.values, ',')) {
      if (v.empty()) throw UsageError("empty value label");
      auto [it, fresh] = index.emplace(v, static_cast<int>(labels.names.size()));
      if (fresh) labels.names.push_back(v);
      cfg.values.push_back(it->second);
    }
    cfg.domain_size = std::max(static_cast<int>(labels.names.size()), o.domain);
  } else {
    cfg.domain_size = o.domain;
  }
  if (!o.beta.empty()) {
    const auto parts = split(o.beta, ',');
    if (parts.size() != 3) throw UsageError("--beta needs three numbers");
    try {
      cfg.beta = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
    } catch (const std::exception&) {
      throw UsageError("--beta needs three numbers");
    }
  }
  if (!o.pattern_file.empty() && o.sample) throw UsageError("--pattern and --sample-pattern are exclusive");
  if (!o.pattern_file.empty()) {
    std::ifstream f(o.pattern_file);
    if (!f) throw UsageError("cannot read " + o.pattern_file);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded()) throw UsageError(o.pattern_file + " is not JSON");
    cfg.pattern = pattern_from_json(j);
  }
  return cfg;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

std::string describe_decision(const Decision& d, const Labels& labels) {
  switch (d.outcome) {
    case Outcome::Value: return labels.name(d.value);
    case Outcome::Bottom: return "bottom";
    case Outcome::NoDecision: return "none";
    case Outcome::Undecided: return "undecided";
  }
  return "?";
}

void print_run_summary(std::ostream& os, const RunConfig& cfg, const RunResult& res, const Labels& labels) {
  os << "n=" << cfg.n << " t=" << cfg.t << " seed=" << cfg.seed << "\n";
  os << "faulty agents:";
  for (AgentId a : res.pattern.faulty_agents()) os << " " << a;
  os << (res.pattern.faulty_agents().empty() ? " none\n" : "\n");
  for (std::size_t k = 0; k < res.decisions.size(); ++k) {
    os << "  agent " << (k + 1) << "  value " << labels.name(res.values[k]) << "  decision "
       << describe_decision(res.decisions[k], labels) << " (round " << res.decisions[k].round << ")  utility "
       << res.utilities[k];
    if (res.inconsistencies[k]) {
      os << "  [" << to_string(res.inconsistencies[k]->category) << "/" << to_string(res.inconsistencies[k]->rule)
         << "]";
    }
    os << "\n";
  }
  if (res.machinery) {
    const Machinery& m = *res.machinery;
    os << "m* = " << (m.m_star ? std::to_string(*m.m_star) : "-") << "  D = {";
    std::vector<std::string> ids;
    for (AgentId a : m.decision_set) ids.push_back(std::to_string(a));
    os << join(ids) << "}  elected = "
       << (m.elected ? labels.name(m.elected->value) + " (agent " + std::to_string(m.elected->winner) + ")" : "-")
       << "\n";
  }
  os << "outcome: " << to_string(res.outcome);
  if (res.consensus_value) os << " " << labels.name(*res.consensus_value);
  os << "\n";
  const InvariantReport& inv = res.invariants;
  os << "invariants: agreement=" << inv.agreement << " validity=" << inv.validity << " termination=" << inv.termination
     << " no_bottom=" << inv.no_bottom << " message_bound=" << inv.message_bound << " hs_agreement=" << inv.hs_agreement
     << " clean_rounds=" << inv.clean_rounds << " machinery_agreement=" << inv.machinery_agreement << "\n";
  for (const std::string& f : inv.failures) os << "  failure: " << f << "\n";
}

nlohmann::json run_summary_json(const RunConfig& cfg, const RunResult& res, const Labels& labels) {
  nlohmann::json j;
  j["n"] = cfg.n;
  j["t"] = cfg.t;
  j["seed"] = cfg.seed;
  j["values"] = nlohmann::json::array();
  j["decisions"] = nlohmann::json::array();
  for (std::size_t k = 0; k < res.decisions.size(); ++k) {
    j["values"].push_back(labels.name(res.values[k]));
    nlohmann::json d = to_json(res.decisions[k]);
    if (res.decisions[k].outcome == Outcome::Value) d["label"] = labels.name(res.decisions[k].value);
    if (res.inconsistencies[k]) d["inconsistency"] = to_json(*res.inconsistencies[k]);
    j["decisions"].push_back(d);
  }
  j["utilities"] = res.utilities;
  j["outcome"] = to_string(res.outcome);
  j["consensus"] = res.consensus_value ? nlohmann::json(labels.name(*res.consensus_value)) : nlohmann::json(nullptr);
  if (res.machinery) {
    const Machinery& m = *res.machinery;
    j["m_star"] = m.m_star ? nlohmann::json(*m.m_star) : nlohmann::json(nullptr);
    j["D"] = m.decision_set;
    j["elected"] = m.elected ? nlohmann::json(labels.name(m.elected->value)) : nlohmann::json(nullptr);
  }
  j["pattern"] = to_json(res.pattern);
  j["invariants"] = to_json(res.invariants);
  return j;
}

// Deviation options for run.
struct DevOptions {
  int type = 0;
  AgentId agent = 1;
  Round round = 0;
  int sub_case = 1;
  std::uint64_t proposal = 0;
  double quantile = -1;
  bool no_guess = false;
};

void add_dev_options(CLI::App* cmd, DevOptions& d, bool required) {
  auto* type = cmd->add_option("--type", d.type, "deviation type 1..10");
  if (required) type->required();
  cmd->add_option("--agent", d.agent, "deviant agent id");
  cmd->add_option("--round", d.round, "deviation round (default depends on type)");
  cmd->add_option("--sub-case", d.sub_case, "link lie sub-case 1..8 (type 6)");
  cmd->add_option("--proposal", d.proposal, "fixed proposal field element (type 3)");
  cmd->add_option("--proposal-quantile", d.quantile, "fixed proposal as a fraction of the field (type 3)");
  cmd->add_flag("--no-guess", d.no_guess, "type 5 keeps running without guessing randoms");
}

Deviation make_deviation(const DevOptions& o, std::uint64_t modulus) {
  Deviation d;
  d.type = o.type;
  d.agent = o.agent;
  d.round = o.round;
  d.sub_case = o.sub_case;
  d.guess = !o.no_guess;
  d.proposal = o.proposal;
  if (o.quantile >= 0) {
    if (o.quantile >= 1) throw UsageError("--proposal-quantile must be in [0,1)");
    d.proposal = static_cast<std::uint64_t>(o.quantile * static_cast<double>(modulus));
  }
  return d;
}

int cmd_run(const RunOptions& o, const DevOptions& dev, const std::string& trace, const std::string& summary,
            const std::string& pattern_out, bool json_out) {
  Labels labels;
  RunConfig cfg = base_config(o, labels);
  if (!cfg.pattern) cfg.pattern = o.sample ? sample_blind_pattern(cfg.seed, cfg.n, cfg.t) : FailurePattern{};
  if (dev.type != 0) cfg.deviation = make_deviation(dev, cfg.modulus);
  cfg.trace = !trace.empty();
  cfg.run_id = "seed-" + std::to_string(cfg.seed);
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const RunResult res = run(cfg);
  if (!trace.empty()) write_file(trace, res.trace);
  if (!pattern_out.empty()) write_file(pattern_out, to_json(res.pattern).dump(2) + "\n");
  const nlohmann::json sj = run_summary_json(cfg, res, labels);
  if (!summary.empty()) write_file(summary, sj.dump(2) + "\n");
  if (json_out) {
    std::cout << sj.dump(2) << "\n";
  } else {
    print_run_summary(std::cout, cfg, res, labels);
  }
  // A deviation may legitimately end in bottom; judge it on agreement alone.
  const InvariantReport& inv = res.invariants;
  const bool ok = cfg.deviation ? inv.agreement && inv.validity : inv.ok();
  return ok ? kOk : kPropertyFailure;
}

int cmd_batch(const RunOptions& o, int runs, int threads, const std::string& csv, const std::string& trace) {
  if (runs < 1) throw UsageError("--runs must be positive");
  if (!o.values.empty()) throw UsageError("batch samples values; use --domain");
  Labels labels;
  const RunConfig base = base_config(o, labels);
  {
    RunConfig probe = base;
    try {
      validate(probe);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  struct Row {
    std::uint64_t seed;
    RunResult res;
  };
  std::vector<Row> rows(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < runs; k = next++) {
      RunConfig cfg = base;
      cfg.seed = *o.seed + static_cast<std::uint64_t>(k);
      if (!cfg.pattern) cfg.pattern = sample_blind_pattern(cfg.seed, cfg.n, cfg.t);
      cfg.trace = !trace.empty();
      cfg.run_id = "seed-" + std::to_string(cfg.seed);
      rows[static_cast<std::size_t>(k)] = {cfg.seed, run(cfg)};
    }
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < std::max(threads, 1); ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  int failed = 0;
  std::map<std::string, int> outcomes;
  std::map<int, int> mstar;
  std::ostringstream csv_out, trace_out;
  csv_out << "seed,outcome,consensus,m_star,faulty,ok\n";
  for (const Row& r : rows) {
    const bool ok = r.res.invariants.ok();
    if (!ok) {
      ++failed;
      std::cout << "seed " << r.seed << " FAILED: " << join(r.res.invariants.failures) << "\n";
    }
    ++outcomes[to_string(r.res.outcome)];
    const int m = r.res.machinery && r.res.machinery->m_star ? *r.res.machinery->m_star : 0;
    ++mstar[m];
    csv_out << r.seed << "," << to_string(r.res.outcome) << ","
            << (r.res.consensus_value ? std::to_string(*r.res.consensus_value) : "") << "," << m << ","
            << r.res.pattern.faulty_agents().size() << "," << (ok ? 1 : 0) << "\n";
    trace_out << r.res.trace;
  }
  std::cout << "runs " << runs << "  n=" << base.n << " t=" << base.t << "  seeds " << *o.seed << ".."
            << (*o.seed + static_cast<std::uint64_t>(runs - 1)) << "\n";
  for (const auto& [k, v] : outcomes) std::cout << "  " << k << ": " << v << "\n";
  std::cout << "  decision round:";
  for (const auto& [k, v] : mstar) std::cout << " " << (k == 0 ? std::string("-") : std::to_string(k)) << ":" << v;
  std::cout << "\n  invariant failures: " << failed << "\n";
  if (!csv.empty()) write_file(csv, csv_out.str());
  if (!trace.empty()) write_file(trace, trace_out.str());
  return failed == 0 ? kOk : kPropertyFailure;
}

int cmd_deviate(int n, int t, std::uint64_t seed, int runs, int threads, const DevOptions& dev, bool no_trigger,
                bool json_out, const std::string& summary) {
  if (runs < 1) throw UsageError("--runs must be positive");
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.t = t;
  cfg.runs = runs;
  cfg.first_seed = seed;
  cfg.threads = threads;
  cfg.force_trigger = !no_trigger;
  cfg.deviation = make_deviation(dev, PrimeField::kDefaultModulus);
  try {
    RunConfig probe;
    probe.n = n;
    probe.t = t;
    probe.deviation = cfg.deviation;
    validate(probe);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ExperimentSummary s = deviation_experiment(cfg);
  const bool pass = s.holds && s.guess_ok;
  nlohmann::json j{{"deviation", describe(cfg.deviation)},
                   {"n", n},
                   {"t", t},
                   {"runs", s.runs},
                   {"mean_honest", s.mean_honest},
                   {"mean_deviant", s.mean_deviant},
                   {"mean_difference", s.mean_difference},
                   {"se_difference", s.se_difference},
                   {"active", s.active},
                   {"detected", s.detected},
                   {"detection_rate", s.detection_rate()},
                   {"honest_wins", s.honest_wins},
                   {"deviant_wins", s.deviant_wins},
                   {"deviant_unanimous", s.deviant_unanimous},
                   {"guesses", s.guesses},
                   {"correct_guesses", s.correct_guesses},
                   {"guess_interval", {s.guess_low, s.guess_high}},
                   {"verdict", pass ? "PASS" : "FAIL"}};
  if (!summary.empty()) write_file(summary, j.dump(2) + "\n");
  if (json_out) {
    std::cout << j.dump(2) << "\n";
    return pass ? kOk : kPropertyFailure;
  }
  std::printf("deviation   %s\n", describe(cfg.deviation).c_str());
  std::printf("setting     n=%d t=%d runs=%d seeds %llu..%llu\n", n, t, s.runs, static_cast<unsigned long long>(seed),
              static_cast<unsigned long long>(seed + static_cast<std::uint64_t>(runs - 1)));
  std::printf("%-12s %10s %10s\n", "", "honest", "deviant");
  std::printf("%-12s %10.4f %10.4f\n", "utility", s.mean_honest, s.mean_deviant);
  std::printf("%-12s %10d %10d\n", "own value", s.honest_wins, s.deviant_wins);
  std::printf("difference  %+.4f  (se %.4f, bound %+.4f)\n", s.mean_difference, s.se_difference,
              2 * s.se_difference);
  std::printf("active      %d\n", s.active);
  std::printf("detection   %d (%.4f)\n", s.detected, s.detection_rate());
  std::printf("unanimous   %d\n", s.deviant_unanimous);
  if (s.guesses > 0) {
    std::printf("guesses     %d correct %d  99%% CI [%.4f, %.4f] vs 1/n = %.4f\n", s.guesses, s.correct_guesses,
                s.guess_low, s.guess_high, 1.0 / n);
  }
  std::printf("verdict     %s\n", pass ? "PASS" : "FAIL");
  return pass ? kOk : kPropertyFailure;
}

int cmd_verify_trace(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  TraceVerdict v;
  try {
    v = check_trace(f);
  } catch (const TraceFormatError& e) {
    throw UsageError(std::string("unparseable trace: ") + e.what());
  }
  for (const std::string& msg : v.failures) std::cout << msg << "\n";
  std::cout << v.runs << " run(s), " << (v.clean() ? "clean" : std::to_string(v.failures.size()) + " violation(s)")
            << "\n";
  return v.clean() ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for rational uniform consensus under omission failures"};
  app.require_subcommand(1);

  RunOptions run_opts;
  DevOptions run_dev;
  std::string trace, summary, pattern_out, csv;
  bool json_out = false;
  auto* run_cmd = app.add_subcommand("run", "execute one run and print its summary");
  add_run_options(run_cmd, run_opts);
  run_cmd->add_option("--trace", trace, "write the JSON-lines trace here");
  run_cmd->add_option("--summary", summary, "write a JSON summary here");
  run_cmd->add_option("--pattern-out", pattern_out, "write the failure pattern used");
  run_cmd->add_flag("--json", json_out, "print the summary as JSON");
  add_dev_options(run_cmd, run_dev, false);

  RunOptions batch_opts;
  int runs = 1000;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* batch_cmd = app.add_subcommand("batch", "run seeds seed..seed+runs-1 with sampled patterns");
  add_run_options(batch_cmd, batch_opts);
  batch_cmd->add_option("--runs", runs, "number of runs");
  batch_cmd->add_option("--threads", threads, "worker threads");
  batch_cmd->add_option("--csv", csv, "write one CSV row per run");
  batch_cmd->add_option("--trace", trace, "write all traces here");

  int dn = 5, dt = 1;
  std::optional<std::uint64_t> dseed;
  DevOptions dev;
  bool no_trigger = false;
  auto* dev_cmd = app.add_subcommand("deviate", "paired honest/deviant Monte Carlo for one deviation");
  dev_cmd->add_option("--n", dn, "number of agents");
  dev_cmd->add_option("--t", dt, "omission failure bound");
  dev_cmd->add_option("--seed", dseed, "first seed")->required();
  dev_cmd->add_option("--runs", runs, "number of paired seeds");
  dev_cmd->add_option("--threads", threads, "worker threads");
  dev_cmd->add_flag("--no-trigger", no_trigger, "type 5: keep the sampled pattern instead of forcing |lost|>t");
  dev_cmd->add_flag("--json", json_out, "print the summary as JSON");
  dev_cmd->add_option("--summary", summary, "write a JSON summary here");
  add_dev_options(dev_cmd, dev, true);

  std::string trace_path;
  auto* verify_cmd = app.add_subcommand("verify-trace", "replay safety checks over a recorded trace");
  verify_cmd->add_option("trace", trace_path, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, run_dev, trace, summary, pattern_out, json_out);
    if (*batch_cmd) return cmd_batch(batch_opts, runs, threads, csv, trace);
    if (*dev_cmd) return cmd_deviate(dn, dt, *dseed, runs, threads, dev, no_trigger, json_out, summary);
    if (*verify_cmd) return cmd_verify_trace(trace_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPropertyFailure;
  }
  return kUsage;
}
