#include "rcons/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace rcons {

namespace {

constexpr double kZ99 = 2.5758293035489004;

struct Pair {
  double honest = 0;
  double deviant = 0;
  bool active = false;
  bool detected = false;
  bool honest_win = false;
  bool deviant_win = false;
  bool unanimous = false;
  int guesses = 0;
  int correct = 0;
};

Pair run_pair(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunConfig base;
  base.n = cfg.n;
  base.t = cfg.t;
  base.seed = seed;
  base.domain_size = cfg.domain_size;
  base.beta = cfg.beta;
  base.pattern = experiment_pattern(cfg, seed);

  const std::size_t i = static_cast<std::size_t>(cfg.deviation.agent - 1);
  Pair p;
  const RunResult honest = run(base);
  p.honest = honest.utilities[i];
  p.honest_win = honest.consensus_value && *honest.consensus_value == honest.values[i];

  RunConfig dev = base;
  dev.deviation = cfg.deviation;
  const RunResult deviant = run(dev);
  p.deviant = deviant.utilities[i];
  p.active = deviant.deviation_active;
  p.detected = std::any_of(deviant.decisions.begin(), deviant.decisions.end(),
                           [](const Decision& d) { return d.outcome == Outcome::Bottom; });
  p.deviant_win = deviant.consensus_value && *deviant.consensus_value == deviant.values[i];
  p.unanimous = deviant.outcome == RunOutcome::Consensus;
  for (const GuessRecord& g : deviant.guesses) {
    ++p.guesses;
    if (g.value == g.truth) ++p.correct;
  }
  return p;
}

}  // namespace

std::pair<double, double> wilson_interval(int k, int n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = n;
  const double phat = k / nn;
  const double z2 = z * z;
  const double centre = (phat + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(phat * (1 - phat) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {centre - half, centre + half};
}

FailurePattern experiment_pattern(const ExperimentConfig& cfg, std::uint64_t seed) {
  FailurePattern p = sample_blind_pattern(seed, cfg.n, cfg.t);
  if (cfg.deviation.type != 5 || !cfg.force_trigger) return p;
  const AgentId i = cfg.deviation.agent;
  p.remove_agent(i);
  std::set<AgentId> others = p.faulty_agents();
  while (static_cast<int>(others.size()) > cfg.t - 1) {
    p.remove_agent(*others.rbegin());
    others.erase(std::prev(others.end()));
  }
  const Round m = effective_round(cfg.deviation, cfg.t);
  int added = 0;
  for (AgentId peer = 1; peer <= cfg.n && added < cfg.t + 1; ++peer) {
    if (peer == i) continue;
    p.add({i, OmissionKind::Receive, peer, m});
    ++added;
  }
  return p;
}

ExperimentSummary deviation_experiment(const ExperimentConfig& cfg) {
  std::vector<Pair> pairs(static_cast<std::size_t>(std::max(cfg.runs, 0)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t k = next++; k < pairs.size(); k = next++) pairs[k] = run_pair(cfg, cfg.first_seed + k);
  };
  const int threads = std::max(1, cfg.threads);
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ExperimentSummary s;
  s.runs = static_cast<int>(pairs.size());
  if (s.runs == 0) return s;
  double sum_h = 0;
  double sum_d = 0;
  for (const Pair& p : pairs) {
    sum_h += p.honest;
    sum_d += p.deviant;
    s.active += p.active ? 1 : 0;
    s.detected += p.detected ? 1 : 0;
    s.honest_wins += p.honest_win ? 1 : 0;
    s.deviant_wins += p.deviant_win ? 1 : 0;
    s.deviant_unanimous += p.unanimous ? 1 : 0;
    s.guesses += p.guesses;
    s.correct_guesses += p.correct;
  }
  const double n = s.runs;
  s.mean_honest = sum_h / n;
  s.mean_deviant = sum_d / n;
  s.mean_difference = s.mean_deviant - s.mean_honest;
  double ss = 0;
  for (const Pair& p : pairs) {
    const double d = (p.deviant - p.honest) - s.mean_difference;
    ss += d * d;
  }
  s.se_difference = s.runs > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  s.holds = s.mean_deviant <= s.mean_honest + 2 * s.se_difference + 1e-12;
  if (s.guesses > 0) {
    std::tie(s.guess_low, s.guess_high) = wilson_interval(s.correct_guesses, s.guesses, kZ99);
    const double target = 1.0 / cfg.n;
    s.guess_ok = s.guess_low <= target && target <= s.guess_high;
  }
  return s;
}

}  // namespace rcons
