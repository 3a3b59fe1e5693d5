#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rcons/link_model.hpp"

namespace rcons {

// Agents faulty at round r: the already removed agents plus every other
// agent with more than t faulty links to non-removed peers (equivalently,
// fewer than n-t-1-|removed| correct ones). Unknown links count as correct.
// Throws std::domain_error when r is outside 1..max_round.
std::set<AgentId> agent_status(const HistoryStates& hs, Round r, int n, int t, const std::set<AgentId>& removed,
                               Round max_round);

struct StatusHistory {
  // faulty[r] for r in 1..last (index 0 unused, always empty).
  std::vector<std::set<AgentId>> faulty;
  // newly[r] = |faulty[r]| - |faulty[r-1]|
  std::vector<int> newly;
};

StatusHistory status_history(const HistoryStates& hs, int n, int t, Round last);

// First reliable round (the round before a clean round) in 1..t+2.
// `newly` is indexed by round as in StatusHistory.
std::optional<Round> decision_round(const std::vector<int>& newly, int t);

// Agents not faulty at m_star, ascending.
std::vector<AgentId> decision_set(const StatusHistory& status, Round m_star, int n);

struct ElectionInput {
  std::vector<AgentId> members;
  std::map<AgentId, int> values;
  std::map<AgentId, std::uint64_t> proposals;
};

struct ElectionResult {
  AgentId winner = 0;
  int value = 0;
};

// Throws std::invalid_argument when a member lacks a value or a proposal.
ElectionResult elect(const ElectionInput& input);

}  // namespace rcons
