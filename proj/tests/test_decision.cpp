#include <algorithm>
#include <set>

#include "doctest.h"

#include "rcons/decision.hpp"

using namespace rcons;

namespace {

std::vector<std::uint8_t> zeros(int n) { return std::vector<std::uint8_t>(static_cast<std::size_t>(n - 1), 0); }

// All links R at round r, then X on the listed ones.
HistoryStates round_with(int n, Round r, const std::vector<LinkId>& faulty) {
  HistoryStates hs;
  for (const LinkId& l : all_links(n)) {
    const bool bad = std::find(faulty.begin(), faulty.end(), l) != faulty.end();
    if (bad) {
      hs.append(l, ReportX{r, l.lo, zeros(n)});
    } else {
      hs.append(l, ReportR{r, l.lo, 0});
    }
  }
  return hs;
}

// Brute-force recount of the status rule.
std::set<AgentId> recount(const HistoryStates& hs, Round r, int n, int t, const std::set<AgentId>& removed) {
  std::set<AgentId> out = removed;
  for (AgentId j = 1; j <= n; ++j) {
    if (removed.count(j)) continue;
    int bad = 0;
    for (AgentId k = 1; k <= n; ++k) {
      if (k == j || removed.count(k)) continue;
      if (hs.classify(link_of(j, k), r) == LinkClass::Faulty) ++bad;
    }
    if (bad > t) out.insert(j);
  }
  return out;
}

// Iterate the rule to a fixpoint, removing agents as they are found.
std::set<AgentId> fixpoint(const HistoryStates& hs, Round r, int n, int t, std::set<AgentId> removed) {
  for (;;) {
    auto next = recount(hs, r, n, t, removed);
    if (next == removed) return removed;
    removed = next;
  }
}

// Scan of the clean/reliable definition.
std::optional<Round> scan(const std::vector<int>& newly, int t) {
  std::vector<Round> clean;
  for (Round r = 1; r < static_cast<Round>(newly.size()) && r <= t + 3; ++r) {
    if (newly[static_cast<std::size_t>(r)] == 0) clean.push_back(r);
  }
  for (Round c : clean) {
    const Round reliable = c - 1;
    if (reliable >= 1 && reliable <= t + 2) return reliable;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("status threshold") {
  const int n = 5, t = 1;
  HistoryStates hs = round_with(n, 1, {{1, 3}, {2, 3}});
  auto f = agent_status(hs, 1, n, t, {}, t + 3);
  CHECK(f == std::set<AgentId>{3});
  CHECK(agent_status(round_with(n, 1, {}), 1, n, t, {}, t + 3).empty());

  // X only to an already removed agent does not count
  HistoryStates h2 = round_with(n, 2, {{3, 4}, {1, 4}, {2, 4}});
  CHECK(agent_status(h2, 2, n, t, {4}, t + 3) == std::set<AgentId>{4});
  CHECK(recount(h2, 2, n, t, {4}) == std::set<AgentId>{4});

  CHECK_THROWS_AS(agent_status(hs, 0, n, t, {}, t + 3), std::domain_error);
  CHECK_THROWS_AS(agent_status(hs, t + 4, n, t, {}, t + 3), std::domain_error);
}

TEST_CASE("unknown links count as correct") {
  const int n = 5, t = 1;
  HistoryStates hs;
  hs.append({1, 3}, ReportX{1, 1, zeros(n)});
  CHECK(agent_status(hs, 1, n, t, {}, t + 3).empty());
}

TEST_CASE("single pass equals the fixpoint on random histories") {
  Rng rng(99);
  int disagreements = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 5 + 2 * static_cast<int>(uniform_below(rng, 3));
    const int t = (n - 2) / 2;
    HistoryStates hs;
    for (Round r = 1; r <= t + 3; ++r) {
      for (const LinkId& l : all_links(n)) {
        const auto roll = uniform_below(rng, 10);
        if (roll < 2) {
          hs.append(l, ReportX{r, l.lo, zeros(n)});
        } else if (roll < 8) {
          hs.append(l, ReportR{r, l.hi, 0});
        }
      }
    }
    std::set<AgentId> removed;
    for (Round r = 1; r <= t + 3; ++r) {
      const auto fast = agent_status(hs, r, n, t, removed, t + 3);
      const auto slow = fixpoint(hs, r, n, t, removed);
      if (fast != slow) ++disagreements;
      removed = fast;
    }
  }
  CHECK(disagreements == 0);
}

TEST_CASE("status history is absorbing") {
  const int n = 5, t = 1;
  HistoryStates hs = round_with(n, 1, {{1, 4}, {2, 4}});
  for (Round r = 2; r <= t + 3; ++r) {
    for (const LinkId& l : all_links(n)) hs.append(l, ReportR{r, l.lo, 0});
  }
  const StatusHistory st = status_history(hs, n, t, t + 3);
  for (Round r = 1; r <= t + 3; ++r) CHECK(st.faulty[static_cast<std::size_t>(r)].count(4) == 1);
  CHECK(st.newly[1] == 1);
  CHECK(st.newly[2] == 0);
}

TEST_CASE("decision round examples") {
  CHECK(decision_round({0, 0, 0, 0, 0}, 1) == 1);
  CHECK(decision_round({0, 1, 0, 1, 0, 0}, 2) == 1);
  CHECK(decision_round({0, 0, 1, 0, 0}, 1) == 2);
  CHECK_FALSE(decision_round({0, 1, 1, 1}, 0).has_value());
}

TEST_CASE("decision round agrees with a definition scan") {
  for (int t = 0; t <= 4; ++t) {
    const int len = t + 3;
    // every 0/1/2 vector of newly-faulty counts over rounds 1..t+3
    int total = 1;
    for (int k = 0; k < len; ++k) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::vector<int> newly(static_cast<std::size_t>(len + 1), 0);
      int c = code;
      for (int r = 1; r <= len; ++r) {
        newly[static_cast<std::size_t>(r)] = c % 3;
        c /= 3;
      }
      CHECK(decision_round(newly, t) == scan(newly, t));
    }
  }
}

TEST_CASE("decision set") {
  const int n = 5, t = 1;
  HistoryStates hs = round_with(n, 1, {});
  for (Round r = 2; r <= t + 3; ++r) {
    std::vector<LinkId> bad;
    for (AgentId k = 1; k <= n; ++k) {
      if (k != 4) bad.push_back(link_of(k, 4));
    }
    HistoryStates part = round_with(n, r, bad);
    for (const auto& [key, tuples] : part.entries()) {
      for (const auto& s : tuples) hs.append(key.first, s);
    }
  }
  const StatusHistory st = status_history(hs, n, t, t + 3);
  CHECK(decision_round(st.newly, t) == 2);
  CHECK(decision_set(st, 2, n) == std::vector<AgentId>{1, 2, 3, 5});
  CHECK(decision_set(st, 1, n) == std::vector<AgentId>{1, 2, 3, 4, 5});
}

TEST_CASE("election examples") {
  ElectionInput a{{1, 2, 3}, {{1, 10}, {2, 20}, {3, 30}}, {{1, 5}, {2, 9}, {3, 7}}};
  CHECK(elect(a).winner == 3);
  CHECK(elect(a).value == 30);

  ElectionInput b{{2, 5, 9}, {{2, 0}, {5, 1}, {9, 2}}, {{2, 7}, {5, 7}, {9, 7}}};
  CHECK(elect(b).winner == 5);
  CHECK(elect(b).value == 1);

  ElectionInput c{{1, 2, 3, 4}, {{1, 0}, {2, 1}, {3, 2}, {4, 3}}, {{1, 9}, {2, 7}, {3, 7}, {4, 3}}};
  CHECK(elect(c).winner == 2);

  // ties at the maximum do not count as the second maximum
  ElectionInput d{{1, 2, 3}, {{1, 0}, {2, 1}, {3, 2}}, {{1, 9}, {2, 9}, {3, 4}}};
  CHECK(elect(d).winner == 3);

  ElectionInput missing{{1, 2}, {{1, 0}}, {{1, 1}, {2, 2}}};
  CHECK_THROWS_AS(elect(missing), std::invalid_argument);
}

TEST_CASE("election is pure and valid") {
  Rng rng(5);
  for (int trial = 0; trial < 3000; ++trial) {
    ElectionInput in;
    const int size = 1 + static_cast<int>(uniform_below(rng, 7));
    std::set<AgentId> ids;
    while (static_cast<int>(ids.size()) < size) ids.insert(1 + static_cast<AgentId>(uniform_below(rng, 12)));
    for (AgentId id : ids) {
      in.members.push_back(id);
      in.values[id] = static_cast<int>(uniform_below(rng, 4));
      in.proposals[id] = uniform_below(rng, 5);
    }
    const ElectionResult r1 = elect(in);
    const ElectionResult r2 = elect(in);
    CHECK(r1.winner == r2.winner);
    CHECK(ids.count(r1.winner) == 1);
    CHECK(in.values.at(r1.winner) == r1.value);
  }
}
