#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rcons/agent.hpp"
#include "rcons/deviation.hpp"
#include "rcons/failure_pattern.hpp"

namespace rcons {

struct Utilities {
  double beta0 = 1.0;  // own value decided
  double beta1 = 0.5;  // another value decided
  double beta2 = 0.0;  // no consensus
};

struct RunConfig {
  int n = 0;
  int t = 0;
  std::uint64_t seed = 0;
  int domain_size = 0;                    // 0 = n
  std::vector<int> values;                // agent k at index k-1; empty = sampled
  std::optional<FailurePattern> pattern;  // empty = sampled
  std::optional<Deviation> deviation;
  Utilities beta;
  std::uint64_t modulus = PrimeField::kDefaultModulus;
  bool trace = false;
  std::string run_id = "run";
};

// Throws std::invalid_argument when the configuration cannot be run.
void validate(const RunConfig& cfg);

enum class RunOutcome { Consensus, Mixed, NoConsensus };
std::string to_string(RunOutcome o);

struct InvariantReport {
  bool agreement = true;
  bool validity = true;
  bool termination = true;
  bool no_bottom = true;
  bool message_bound = true;
  bool hs_agreement = true;
  bool clean_rounds = true;
  bool machinery_agreement = true;
  // convergence[r]: first round x in r..t+3 at which every nonfaulty
  // running agent classifies all round-r links alike; 0 if none.
  std::vector<Round> convergence;
  std::vector<int> risk;  // pattern agents not yet faulty, per round
  int sharp_bound_checked = 0;
  int sharp_bound_misses = 0;
  std::vector<int> newly_faulty;  // ground truth, per round
  std::vector<std::string> failures;

  bool safety() const { return agreement && validity && termination && no_bottom; }
  bool ok() const { return safety() && message_bound && hs_agreement && clean_rounds && machinery_agreement; }
};

struct GuessRecord {
  AgentId peer = 0;
  Round round = 0;
  std::uint32_t value = 0;
  std::uint32_t truth = 0;
};

struct RunResult {
  std::vector<int> values;
  std::vector<Decision> decisions;
  std::vector<double> utilities;
  std::vector<std::optional<Inconsistency>> inconsistencies;
  RunOutcome outcome = RunOutcome::NoConsensus;
  std::optional<int> consensus_value;
  std::optional<Machinery> machinery;  // of the lowest agent that ran it
  InvariantReport invariants;
  FailurePattern pattern;
  bool deviation_active = false;
  std::vector<GuessRecord> guesses;
  std::string trace;
};

// Utilities from decisions alone: any bottom or two decided values leaves
// everyone at beta2; otherwise every agent, deciding or not, is paid by the
// consensus value.
void assign_utilities(RunResult& result, const Utilities& beta);

nlohmann::json to_json(const Decision& d);
nlohmann::json to_json(const Inconsistency& inc);
nlohmann::json to_json(const InvariantReport& rep);

// Round-lockstep executor. Each round runs send, deliver, receive, compute;
// the phases are exposed so tests can stop between them.
class Simulation {
 public:
  explicit Simulation(RunConfig cfg);

  const Protocol& protocol() const { return proto_; }
  const RunConfig& config() const { return cfg_; }
  const FailurePattern& pattern() const { return pattern_; }
  Round round() const { return round_; }  // round about to run
  bool done() const { return round_ > proto_.last_round(); }

  const AgentState& agent(AgentId id) const { return agents_.at(static_cast<std::size_t>(id - 1)); }
  AgentState& agent(AgentId id) { return agents_.at(static_cast<std::size_t>(id - 1)); }

  using Mailboxes = std::vector<std::vector<RoundMessage>>;  // index agent-1

  Mailboxes send();
  Mailboxes deliver(const Mailboxes& outboxes);
  void receive(Mailboxes inboxes);
  void compute();  // ends the round
  void step();

  RunResult finish();
  RunResult run();

 private:
  void emit(Round r, const std::string& phase, AgentId agent, const std::string& event, nlohmann::json payload);
  void note_decisions(const std::string& phase);
  void snapshot();
  void check_invariants(RunResult& result) const;

  RunConfig cfg_;
  Protocol proto_;
  FailurePattern pattern_;
  std::vector<AgentState> agents_;
  Rng deviation_rng_;
  Round round_ = 1;
  bool deviation_active_ = false;
  std::vector<Decision> reported_;
  std::map<LinkId, Round> fault_round_;
  // snapshots_[x][a-1][r] = known classification of all links at round r,
  // held by agent a at the end of round x (empty if a was not running).
  std::vector<std::vector<std::vector<std::vector<LinkClass>>>> snapshots_;
  std::string trace_;
};

RunResult run(const RunConfig& cfg);

// Tuple-only classification, ignoring last-update marks.
LinkClass raw_classify(const HistoryStates& hs, LinkId link, Round r);

// What an agent currently knows about (link, r): faulty when its NS already
// holds a failure at or before r (failures never recover), otherwise the
// tuple-only classification.
LinkClass known_classify(const HistoryStates& hs, const NewStates& ns, LinkId link, Round r);

}  // namespace rcons
