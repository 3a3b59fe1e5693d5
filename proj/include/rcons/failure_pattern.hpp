#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "rcons/types.hpp"

namespace rcons {

enum class OmissionKind { Send, Receive, Crash };

// One persistent failure. peer == 0 means every peer; crash ignores peer.
struct PatternEntry {
  AgentId agent = 0;
  OmissionKind kind = OmissionKind::Send;
  AgentId peer = 0;
  Round from_round = 1;
  friend bool operator==(const PatternEntry&, const PatternEntry&) = default;
};

// Failures never recover: an entry blocks every round from from_round on.
class FailurePattern {
 public:
  FailurePattern() = default;
  explicit FailurePattern(std::vector<PatternEntry> entries);

  const std::vector<PatternEntry>& entries() const { return entries_; }
  void add(PatternEntry e);
  void remove_agent(AgentId a);

  // True when a message sender -> receiver in round r is lost.
  bool blocks(Round r, AgentId sender, AgentId receiver) const;

  std::set<AgentId> faulty_agents() const;

  // Throws std::invalid_argument for ids outside 1..n, self-omission, or
  // more than t faulty agents.
  void validate(int n, int t) const;

  friend bool operator==(const FailurePattern&, const FailurePattern&) = default;

 private:
  std::vector<PatternEntry> entries_;
};

std::string to_string(OmissionKind k);

nlohmann::json to_json(const FailurePattern& p);
// Throws std::invalid_argument on malformed input.
FailurePattern pattern_from_json(const nlohmann::json& j);

// Failure pattern drawn independently of values and protocol randomness:
// a uniformly sized (0..t) uniform subset of faulty agents, each either
// crashing or omitting on a random subset of its links, with onset rounds
// uniform over the run.
FailurePattern sample_blind_pattern(std::uint64_t seed, int n, int t);

}  // namespace rcons
