#include "rcons/decision.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace rcons {

std::set<AgentId> agent_status(const HistoryStates& hs, Round r, int n, int t, const std::set<AgentId>& removed,
                               Round max_round) {
  if (r < 1 || r > max_round) throw std::domain_error("status round out of range");
  std::set<AgentId> faulty = removed;
  for (AgentId j = 1; j <= n; ++j) {
    if (removed.count(j) > 0) continue;
    int bad = 0;
    for (AgentId k = 1; k <= n; ++k) {
      if (k == j || removed.count(k) > 0) continue;
      if (hs.classify(link_of(j, k), r) == LinkClass::Faulty) ++bad;
    }
    if (bad > t) faulty.insert(j);
  }
  return faulty;
}

StatusHistory status_history(const HistoryStates& hs, int n, int t, Round last) {
  StatusHistory out;
  out.faulty.resize(static_cast<std::size_t>(last + 1));
  out.newly.assign(static_cast<std::size_t>(last + 1), 0);
  for (Round r = 1; r <= last; ++r) {
    const auto& prev = out.faulty[static_cast<std::size_t>(r - 1)];
    out.faulty[static_cast<std::size_t>(r)] = agent_status(hs, r, n, t, prev, last);
    out.newly[static_cast<std::size_t>(r)] =
        static_cast<int>(out.faulty[static_cast<std::size_t>(r)].size() - prev.size());
  }
  return out;
}

std::optional<Round> decision_round(const std::vector<int>& newly, int t) {
  for (Round clean = 2; clean <= t + 3 && clean < static_cast<Round>(newly.size()); ++clean) {
    if (newly[static_cast<std::size_t>(clean)] == 0) return clean - 1;
  }
  return std::nullopt;
}

std::vector<AgentId> decision_set(const StatusHistory& status, Round m_star, int n) {
  const auto& faulty = status.faulty.at(static_cast<std::size_t>(m_star));
  std::vector<AgentId> d;
  for (AgentId j = 1; j <= n; ++j) {
    if (faulty.count(j) == 0) d.push_back(j);
  }
  return d;
}

ElectionResult elect(const ElectionInput& input) {
  if (input.members.empty()) throw std::invalid_argument("empty decision set");
  std::set<std::uint64_t> distinct;
  for (AgentId j : input.members) {
    if (input.values.count(j) == 0 || input.proposals.count(j) == 0) {
      throw std::invalid_argument("missing value or proposal for agent " + std::to_string(j));
    }
    distinct.insert(input.proposals.at(j));
  }

  const auto pick = [&](std::vector<AgentId> ids, std::uint64_t proposal) {
    std::sort(ids.begin(), ids.end(), std::greater<>());
    const AgentId winner = ids[static_cast<std::size_t>(proposal % ids.size())];
    return ElectionResult{winner, input.values.at(winner)};
  };

  if (distinct.size() < 2) return pick(input.members, *distinct.begin());
  const std::uint64_t second = *std::next(distinct.rbegin());
  std::vector<AgentId> c;
  for (AgentId j : input.members) {
    if (input.proposals.at(j) == second) c.push_back(j);
  }
  if (c.size() == 1) return ElectionResult{c.front(), input.values.at(c.front())};
  return pick(c, second);
}

}  // namespace rcons
