// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "rcons/experiment.hpp"
#include "rcons/secret_sharing.hpp"
#include "rcons/simulator.hpp"

#ifndef RCONS_VERIFICATION_FIXTURES
#error "RCONS_VERIFICATION_FIXTURES must name the verification fixture binary"
#endif

using namespace rcons;

namespace {

constexpr int kHonestRuns = 1000;
constexpr int kPairedSeeds = 1000;
constexpr double kHonestBudgetSeconds = 120.0;
constexpr double kDeviationBudgetSeconds = 600.0;

struct Size {
  int n;
  int t;
};

constexpr Size kHonestSizes[] = {{5, 1}, {7, 2}, {9, 3}};
constexpr Size kDeviationSizes[] = {{5, 1}, {7, 2}};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

bool report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("criterion %d  %-4s  %-28s %s\n", id, pass ? "PASS" : "FAIL", title.c_str(), detail.c_str());
  std::fflush(stdout);
  return pass;
}

struct HonestTally {
  int runs = 0;
  int safety = 0;
  int message_bound = 0;
  int hs_agreement = 0;
  int clean_rounds = 0;
  double seconds = 0;
};

HonestTally honest_suite() {
  HonestTally tally;
  const auto start = Clock::now();
  for (const Size& s : kHonestSizes) {
    std::vector<InvariantReport> reports(kHonestRuns);
    std::vector<std::thread> pool;
    const int workers = threads();
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int i = w; i < kHonestRuns; i += workers) {
          RunConfig cfg;
          cfg.n = s.n;
          cfg.t = s.t;
          cfg.seed = static_cast<std::uint64_t>(i + 1);
          reports[static_cast<std::size_t>(i)] = run(cfg).invariants;
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& r : reports) {
      ++tally.runs;
      tally.safety += r.safety() ? 0 : 1;
      tally.message_bound += r.message_bound ? 0 : 1;
      tally.hs_agreement += r.hs_agreement && r.machinery_agreement ? 0 : 1;
      tally.clean_rounds += r.clean_rounds ? 0 : 1;
    }
  }
  tally.seconds = seconds_since(start);
  return tally;
}

bool secret_sharing_exhaustive() {
  for (std::uint64_t p : {7ull, 101ull}) {
    const PrimeField f(p);
    const AgentId max_id = static_cast<AgentId>(p - 1);
    for (std::uint64_t s = 0; s < p; ++s) {
      for (std::uint64_t slope = 0; slope < p; ++slope) {
        const LinearPolynomial q{FieldElement{s}, FieldElement{slope}};
        std::vector<Share> every;
        for (AgentId j = 1; j <= max_id; ++j) every.push_back(share_for(f, q, j));
        if (reconstruct(f, every).value != s) return false;
        for (AgentId j = 1; j <= max_id; ++j) {
          for (AgentId k = j + 1; k <= max_id; ++k) {
            const std::vector<Share> pair{every[static_cast<std::size_t>(j - 1)],
                                          every[static_cast<std::size_t>(k - 1)]};
            if (reconstruct(f, pair).value != s) return false;
          }
        }
      }
    }
    // one share fits exactly one slope for each candidate secret
    for (AgentId j = 1; j <= max_id; ++j) {
      for (std::uint64_t y = 0; y < p; ++y) {
        for (std::uint64_t s = 0; s < p; ++s) {
          int slopes = 0;
          for (std::uint64_t slope = 0; slope < p; ++slope) {
            const LinearPolynomial q{FieldElement{s}, FieldElement{slope}};
            if (share_for(f, q, j).value.value == y) ++slopes;
          }
          if (slopes != 1) return false;
        }
      }
    }
  }
  // (1,1),(2,2),(3,4) mod 7 lies on no line
  const PrimeField f7(7);
  const std::vector<Share> triple{{1, FieldElement{1}}, {2, FieldElement{2}}, {3, FieldElement{4}}};
  try {
    reconstruct(f7, triple);
    return false;
  } catch (const SharingError& e) {
    return e.kind() == SharingError::Kind::Inconsistent;
  }
}

struct DeviationCase {
  std::string label;
  Deviation d;
};

std::vector<DeviationCase> deviation_cases() {
  std::vector<DeviationCase> out;
  for (int type = 1; type <= kDeviationTypes; ++type) {
    if (type == 6) {
      for (int sc = 1; sc <= kLinkLieCases; ++sc) {
        Deviation d;
        d.type = 6;
        d.agent = 1;
        d.sub_case = sc;
        out.push_back({"type 6." + std::to_string(sc), d});
      }
      continue;
    }
    Deviation d;
    d.type = type;
    d.agent = 1;
    out.push_back({"type " + std::to_string(type), d});
  }
  return out;
}

bool deviation_suite(double& seconds) {
  const auto start = Clock::now();
  bool all = true;
  for (const Size& s : kDeviationSizes) {
    for (const auto& c : deviation_cases()) {
      ExperimentConfig cfg;
      cfg.n = s.n;
      cfg.t = s.t;
      cfg.runs = kPairedSeeds;
      cfg.deviation = c.d;
      cfg.threads = threads();
      const ExperimentSummary r = deviation_experiment(cfg);
      const bool ok = r.holds && r.guess_ok;
      all = all && ok;
      std::printf("    n=%d t=%d %-9s honest %.4f deviant %.4f se %.4f detected %4d/%d", s.n, s.t,
                  c.label.c_str(), r.mean_honest, r.mean_deviant, r.se_difference, r.detected, r.runs);
      if (c.d.type == 5) {
        std::printf(" guesses %d/%d ci [%.4f, %.4f]", r.correct_guesses, r.guesses, r.guess_low, r.guess_high);
      }
      std::printf("  %s\n", ok ? "ok" : "VIOLATED");
      std::fflush(stdout);
    }
  }
  seconds = seconds_since(start);
  return all;
}

void quantile_finding() {
  ExperimentConfig cfg;
  cfg.n = 5;
  cfg.t = 1;
  cfg.runs = kPairedSeeds;
  cfg.threads = threads();
  cfg.deviation.type = 3;
  cfg.deviation.agent = 1;
  cfg.deviation.proposal = static_cast<std::uint64_t>(0.75 * static_cast<double>(PrimeField::kDefaultModulus));
  const ExperimentSummary r = deviation_experiment(cfg);
  std::printf("FINDING  type 3 with a fixed proposal at 0.75 of the field, n=5 t=1: honest %.4f deviant %.4f "
              "se %.4f wins %d -> %d detected %d (%s)\n",
              r.mean_honest, r.mean_deviant, r.se_difference, r.honest_wins, r.deviant_wins, r.detected,
              r.holds ? "inequality holds" : "inequality violated");
}

bool deterministic_traces() {
  std::vector<RunConfig> configs;
  for (const Size& s : kHonestSizes) {
    for (std::uint64_t seed : {1ull, 17ull, 123456789ull}) {
      RunConfig cfg;
      cfg.n = s.n;
      cfg.t = s.t;
      cfg.seed = seed;
      cfg.trace = true;
      configs.push_back(cfg);
    }
  }
  RunConfig deviant;
  deviant.n = 7;
  deviant.t = 2;
  deviant.seed = 99;
  deviant.trace = true;
  deviant.deviation = Deviation{5, 2};
  configs.push_back(deviant);
  for (const auto& cfg : configs) {
    const std::string a = run(cfg).trace;
    const std::string b = run(cfg).trace;
    if (a.empty() || a != b) return false;
  }
  return true;
}

}  // namespace

int main() {
  bool all = true;

  const HonestTally h = honest_suite();
  const std::string runs = std::to_string(h.runs) + " runs, " + std::to_string(h.seconds).substr(0, 5) + "s";
  all &= report(1, "honest safety", h.safety == 0 && h.seconds <= kHonestBudgetSeconds,
                std::to_string(h.safety) + " violations over " + runs);
  all &= report(2, "message bound, HS agreement", h.message_bound == 0 && h.hs_agreement == 0,
                std::to_string(h.message_bound) + " bound / " + std::to_string(h.hs_agreement) +
                    " agreement violations");
  all &= report(3, "clean-round density", h.clean_rounds == 0,
                std::to_string(h.clean_rounds) + " violations");

  all &= report(4, "secret sharing exhaustive", secret_sharing_exhaustive(), "p in {7, 101}");

  const std::string fixtures = std::string(RCONS_VERIFICATION_FIXTURES) + " --minimal > /dev/null 2>&1";
  const int status = std::system(fixtures.c_str());
  all &= report(5, "verification fixtures", status == 0, "claims 1-14, cases 1-11");

  double dev_seconds = 0;
  const bool dev = deviation_suite(dev_seconds);
  all &= report(6, "deviation experiments", dev && dev_seconds <= kDeviationBudgetSeconds,
                std::to_string(kPairedSeeds) + " paired seeds per type, " +
                    std::to_string(dev_seconds).substr(0, 5) + "s");
  quantile_finding();

  all &= report(7, "deterministic traces", deterministic_traces(), "byte-identical reruns");

  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
