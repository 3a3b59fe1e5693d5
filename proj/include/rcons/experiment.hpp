#pragma once

#include <cstdint>

#include "rcons/simulator.hpp"

namespace rcons {

struct ExperimentConfig {
  int n = 5;
  int t = 1;
  int domain_size = 0;
  Deviation deviation;
  int runs = 1000;
  std::uint64_t first_seed = 1;
  Utilities beta;
  int threads = 1;
  // Type 5 only: give the deviant receive omissions from t+1 peers in its
  // deviation round, in both runs of every pair.
  bool force_trigger = true;
};

struct ExperimentSummary {
  int runs = 0;
  double mean_honest = 0;     // deviant agent's utility when it follows the protocol
  double mean_deviant = 0;    // ... when it deviates
  double mean_difference = 0; // deviant - honest
  double se_difference = 0;   // standard error of the paired difference
  bool holds = false;         // mean_deviant <= mean_honest + 2 * se_difference
  int active = 0;             // deviant runs where the deviation changed behavior
  int detected = 0;           // deviant runs with at least one bottom decision
  int honest_wins = 0;        // runs where the deviant's own value was decided
  int deviant_wins = 0;
  int deviant_unanimous = 0;  // deviant runs ending in full consensus
  int guesses = 0;
  int correct_guesses = 0;
  double guess_low = 0;       // 99% Wilson interval for the guess success rate
  double guess_high = 0;
  bool guess_ok = true;       // 1/n inside the interval (true when no guesses)

  double detection_rate() const { return runs > 0 ? static_cast<double>(detected) / runs : 0.0; }
};

// Seed-specific pattern used by both runs of a pair.
FailurePattern experiment_pattern(const ExperimentConfig& cfg, std::uint64_t seed);

// Paired Monte Carlo: for each seed one honest and one deviant run with the
// same pattern, values and agent randomness.
ExperimentSummary deviation_experiment(const ExperimentConfig& cfg);

// Wilson score interval for k successes out of n at normal quantile z.
std::pair<double, double> wilson_interval(int k, int n, double z);

}  // namespace rcons
