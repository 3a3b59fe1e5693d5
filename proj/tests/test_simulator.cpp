#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"

#include "rcons/simulator.hpp"

using namespace rcons;

namespace {

RunConfig honest(int n, int t, std::uint64_t seed) {
  RunConfig cfg;
  cfg.n = n;
  cfg.t = t;
  cfg.seed = seed;
  cfg.pattern = sample_blind_pattern(seed, n, t);
  return cfg;
}

// Election rule written out independently: second-largest distinct
// proposal, ties broken by proposal mod size over ids in descending order.
AgentId second_max_winner(const std::vector<AgentId>& d, const std::map<AgentId, std::uint64_t>& pr) {
  std::set<std::uint64_t> distinct;
  for (AgentId a : d) distinct.insert(pr.at(a));
  std::vector<AgentId> desc(d.rbegin(), d.rend());
  if (distinct.size() < 2) {
    const std::uint64_t s = pr.at(d.front()) % d.size();
    return desc[static_cast<std::size_t>(s)];
  }
  const std::uint64_t second = *std::next(distinct.rbegin());
  std::vector<AgentId> c;
  for (AgentId a : desc) {
    if (pr.at(a) == second) c.push_back(a);
  }
  return c[static_cast<std::size_t>(second % c.size())];
}

RunResult with_decisions(std::vector<int> values, std::vector<Decision> decisions) {
  RunResult r;
  r.values = std::move(values);
  r.decisions = std::move(decisions);
  assign_utilities(r, Utilities{});
  return r;
}

}  // namespace

TEST_CASE("configuration validation") {
  RunConfig ok;
  ok.n = 5;
  ok.t = 1;
  CHECK_NOTHROW(validate(ok));
  RunConfig bad = ok;
  bad.n = 4;
  bad.t = 2;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = ok;
  bad.n = 3;
  bad.t = 1;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.n = 4;
  CHECK_NOTHROW(validate(bad));
  bad = ok;
  bad.beta = {1.0, 1.0, 0.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = ok;
  bad.values = {0, 1, 2};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = ok;
  bad.values = {0, 1, 2, 3, 5};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = ok;
  bad.modulus = 5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = ok;
  bad.pattern = FailurePattern({{1, OmissionKind::Crash, 0, 1}, {2, OmissionKind::Crash, 0, 1}});
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = ok;
  bad.deviation = Deviation{11, 1};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("pattern semantics") {
  FailurePattern p({{2, OmissionKind::Send, 3, 2}, {4, OmissionKind::Receive, 1, 3}, {5, OmissionKind::Crash, 0, 2}});
  CHECK_FALSE(p.blocks(1, 2, 3));
  CHECK(p.blocks(2, 2, 3));
  CHECK(p.blocks(4, 2, 3));  // never recovers
  CHECK_FALSE(p.blocks(2, 3, 2));
  CHECK_FALSE(p.blocks(2, 1, 4));
  CHECK(p.blocks(3, 1, 4));
  CHECK_FALSE(p.blocks(3, 4, 1));
  CHECK_FALSE(p.blocks(1, 5, 1));
  for (AgentId a = 1; a <= 4; ++a) {
    CHECK(p.blocks(2, 5, a));
    CHECK(p.blocks(2, a, 5));
  }
  CHECK(p.faulty_agents() == std::set<AgentId>{2, 4, 5});
  CHECK_THROWS(p.validate(5, 2));
  CHECK_NOTHROW(p.validate(7, 3));
  CHECK_THROWS(FailurePattern({{2, OmissionKind::Send, 2, 1}}).validate(5, 1));
  CHECK_THROWS(FailurePattern({{6, OmissionKind::Crash, 0, 1}}).validate(5, 1));
}

TEST_CASE("pattern files round trip") {
  FailurePattern p({{2, OmissionKind::Send, 3, 2}, {4, OmissionKind::Receive, 0, 3}, {5, OmissionKind::Crash, 0, 2}});
  const nlohmann::json j = to_json(p);
  CHECK(j[2]["kind"] == "crash");
  CHECK_FALSE(j[2].contains("peer"));
  CHECK(pattern_from_json(j) == p);
  CHECK(pattern_from_json(nlohmann::json{{"entries", j}}) == p);
  CHECK_THROWS(pattern_from_json(nlohmann::json::parse(R"([{"agent":1,"kind":"melt","from_round":1}])")));
  CHECK_THROWS(pattern_from_json(nlohmann::json::parse(R"({"agent":1})")));
}

TEST_CASE("blind sampler") {
  CHECK(sample_blind_pattern(3, 5, 0).entries().empty());
  CHECK(sample_blind_pattern(11, 7, 2) == sample_blind_pattern(11, 7, 2));
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const FailurePattern p = sample_blind_pattern(seed, 9, 3);
    CHECK_NOTHROW(p.validate(9, 3));
    for (const PatternEntry& e : p.entries()) {
      CHECK(e.from_round >= 1);
      CHECK(e.from_round <= 3 + 4);
    }
  }
}

TEST_CASE("sampler includes each agent uniformly") {
  const int n = 7, t = 2, samples = 10000;
  // |F| uniform on {0,1,2}, then a uniform subset: P(agent) = E|F| / n
  const double p = (0.0 + 1.0 + 2.0) / 3.0 / n;
  const double mean = samples * p;
  const double sigma = std::sqrt(samples * p * (1 - p));
  std::vector<int> count(n + 1, 0);
  for (int s = 1; s <= samples; ++s) {
    for (AgentId a : sample_blind_pattern(static_cast<std::uint64_t>(s), n, t).faulty_agents()) ++count[a];
  }
  for (AgentId a = 1; a <= n; ++a) {
    CAPTURE(a);
    CHECK(std::abs(count[a] - mean) <= 3 * sigma);
  }
}

TEST_CASE("network delivery") {
  RunConfig cfg;
  cfg.n = 5;
  cfg.t = 1;
  cfg.seed = 2;
  cfg.pattern = FailurePattern{};
  Simulation clean(cfg);
  auto out = clean.send();
  auto in = clean.deliver(out);
  for (AgentId a = 1; a <= 5; ++a) CHECK(in[static_cast<std::size_t>(a - 1)].size() == 4);

  cfg.pattern = FailurePattern({{1, OmissionKind::Send, 2, 1}});
  Simulation sim(cfg);
  in = sim.deliver(sim.send());
  for (const auto& m : in[1]) CHECK(m.sender != 1);
  CHECK(in[1].size() == 3);
  sim.receive(in);
  CHECK(sim.agent(2).lost == std::set<AgentId>{1});
  sim.compute();
  // 2 punishes 1 from now on
  for (const auto& m : sim.send()[1]) CHECK(m.recipient != 1);

  cfg.pattern = FailurePattern({{3, OmissionKind::Crash, 0, 2}});
  Simulation crash(cfg);
  crash.step();
  auto r2 = crash.deliver(crash.send());
  for (const auto& box : r2) {
    for (const auto& m : box) {
      CHECK(m.sender != 3);
      CHECK(m.recipient != 3);
    }
  }
}

TEST_CASE("fault-free three agents: pinned regression and election oracle") {
  struct Pin {
    std::uint64_t seed;
    int value;
  };
  for (Pin pin : {Pin{1, 1}, Pin{7, 1}, Pin{42, 0}}) {
    RunConfig cfg;
    cfg.n = 3;
    cfg.t = 0;
    cfg.seed = pin.seed;
    cfg.values = {0, 1, 2};
    cfg.pattern = FailurePattern{};
    Simulation sim(cfg);
    std::map<AgentId, std::uint64_t> proposals;
    for (AgentId a = 1; a <= 3; ++a) proposals[a] = sim.agent(a).proposal.value;
    const RunResult res = sim.finish();
    const AgentId w = second_max_winner({1, 2, 3}, proposals);
    CHECK(res.outcome == RunOutcome::Consensus);
    REQUIRE(res.consensus_value);
    CHECK(*res.consensus_value == cfg.values[static_cast<std::size_t>(w - 1)]);
    CHECK(*res.consensus_value == pin.value);
    for (const Decision& d : res.decisions) CHECK(d.round == 4);
  }
}

TEST_CASE("crash of agent 5 in round 1") {
  RunConfig cfg;
  cfg.n = 5;
  cfg.t = 1;
  cfg.seed = 11;
  cfg.values = {0, 1, 2, 3, 4};
  cfg.pattern = FailurePattern({{5, OmissionKind::Crash, 0, 1}});
  const RunResult res = run(cfg);
  for (int k = 0; k < 4; ++k) {
    CHECK(res.decisions[static_cast<std::size_t>(k)].outcome == Outcome::Value);
    CHECK(res.decisions[static_cast<std::size_t>(k)].value == res.decisions[0].value);
  }
  CHECK(res.decisions[4].outcome == Outcome::NoDecision);
  CHECK(res.outcome == RunOutcome::Mixed);
  REQUIRE(res.machinery);
  CHECK(res.machinery->m_star == 1);
  CHECK(res.machinery->decision_set == std::vector<AgentId>{1, 2, 3, 4});
  CHECK(res.invariants.ok());
}

TEST_CASE("decision set with a scripted crash of agent 4") {
  for (Round from : {1, 2}) {
    RunConfig cfg;
    cfg.n = 5;
    cfg.t = 1;
    cfg.seed = 11;
    cfg.pattern = FailurePattern({{4, OmissionKind::Crash, 0, from}});
    const RunResult res = run(cfg);
    REQUIRE(res.machinery);
    CHECK(res.machinery->m_star == (from == 1 ? 1 : 2));
    CHECK(res.machinery->decision_set == std::vector<AgentId>{1, 2, 3, 5});
    CHECK(res.invariants.ok());
  }
}

TEST_CASE("honest runs are safe and instrumented") {
  for (int n : {3, 5, 7}) {
    const int t = (n - 2) / 2;
    for (std::uint64_t seed = 1; seed <= 120; ++seed) {
      const RunResult res = run(honest(n, t, seed));
      CAPTURE(n);
      CAPTURE(seed);
      CHECK(res.invariants.ok());
      CHECK(res.outcome != RunOutcome::NoConsensus);
      for (const Decision& d : res.decisions) {
        CHECK(d.outcome != Outcome::Bottom);
        CHECK(d.outcome != Outcome::Undecided);
        CHECK(d.round <= t + 4);
      }
      REQUIRE(res.machinery);
      CHECK(static_cast<int>(res.machinery->decision_set.size()) >= n - t);
    }
  }
}

TEST_CASE("utilities") {
  const Decision v1{Outcome::Value, 1, 5};
  const Decision none{Outcome::NoDecision, -1, 2};
  const Decision bot{Outcome::Bottom, -1, 3};
  const Decision und{};

  auto r = with_decisions({1, 0, 1}, {v1, v1, v1});
  CHECK(r.utilities == std::vector<double>{1.0, 0.5, 1.0});
  CHECK(r.outcome == RunOutcome::Consensus);

  r = with_decisions({1, 0, 1}, {v1, v1, none});
  CHECK(r.utilities == std::vector<double>{1.0, 0.5, 1.0});
  CHECK(r.outcome == RunOutcome::Mixed);

  r = with_decisions({1, 0, 1}, {v1, bot, v1});
  CHECK(r.utilities == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(r.outcome == RunOutcome::NoConsensus);

  r = with_decisions({1, 0, 1}, {v1, Decision{Outcome::Value, 0, 5}, v1});
  CHECK(r.utilities == std::vector<double>{0.0, 0.0, 0.0});

  r = with_decisions({1, 0, 1}, {v1, und, v1});
  CHECK(r.outcome == RunOutcome::NoConsensus);

  r = with_decisions({1, 0, 1}, {none, none, none});
  CHECK(r.outcome == RunOutcome::NoConsensus);
}

TEST_CASE("traces are deterministic") {
  RunConfig cfg = honest(7, 2, 31);
  cfg.trace = true;
  const std::string a = run(cfg).trace;
  const std::string b = run(cfg).trace;
  CHECK_FALSE(a.empty());
  CHECK(a == b);
  cfg.seed = 32;
  CHECK(run(cfg).trace != a);

  std::istringstream lines(a);
  std::string line;
  int records = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"run_id", "round", "phase", "agent", "event", "payload"}) CHECK(j.contains(key));
    ++records;
  }
  CHECK(records > 7);
}

TEST_CASE("type 10 from round 1 leaves the deviant out of the decision set") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RunConfig cfg;
    cfg.n = 5;
    cfg.t = 1;
    cfg.seed = seed;
    cfg.pattern = FailurePattern{};
    cfg.deviation = Deviation{10, 3, 1};
    const RunResult res = run(cfg);
    REQUIRE(res.machinery);
    const auto& d = res.machinery->decision_set;
    CHECK(std::find(d.begin(), d.end(), 3) == d.end());
    CHECK(res.machinery->elected->winner != 3);
    for (AgentId a : {1, 2, 4, 5}) {
      CHECK(res.decisions[static_cast<std::size_t>(a - 1)].outcome == Outcome::Value);
    }
  }
}

TEST_CASE("type 9 is caught by receivers") {
  int bottoms = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RunConfig cfg;
    cfg.n = 5;
    cfg.t = 1;
    cfg.seed = seed;
    cfg.pattern = FailurePattern{};
    cfg.deviation = Deviation{9, 2};
    const RunResult res = run(cfg);
    if (res.consensus_value && *res.consensus_value == res.values[1]) continue;
    // the deviant announced a value other than the elected one
    for (AgentId a : {1, 3, 4, 5}) {
      const Decision& d = res.decisions[static_cast<std::size_t>(a - 1)];
      if (d.outcome == Outcome::Bottom) ++bottoms;
    }
    CHECK(res.outcome == RunOutcome::NoConsensus);
  }
  CHECK(bottoms > 0);
}

TEST_CASE("type 6 stale direct-link lie is detected") {
  int active = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    RunConfig cfg;
    cfg.n = 5;
    cfg.t = 1;
    cfg.seed = seed;
    cfg.pattern = FailurePattern{};
    cfg.deviation = Deviation{6, 1, 3, 1};
    const RunResult res = run(cfg);
    if (!res.deviation_active) continue;
    ++active;
    int caught = 0;
    for (AgentId a = 2; a <= 5; ++a) {
      const auto& inc = res.inconsistencies[static_cast<std::size_t>(a - 1)];
      if (inc && (inc->category == Category::MessageChain || inc->category == Category::RoundNumber)) ++caught;
    }
    CHECK(caught > 0);
  }
  CHECK(active == 60);
}
