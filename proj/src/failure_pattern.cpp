#include "rcons/failure_pattern.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace rcons {

namespace {

constexpr std::uint64_t kPatternStream = 0x70617474ULL;

bool active(const PatternEntry& e, Round r) { return r >= e.from_round; }

}  // namespace

FailurePattern::FailurePattern(std::vector<PatternEntry> entries) : entries_(std::move(entries)) {}

void FailurePattern::add(PatternEntry e) { entries_.push_back(e); }

void FailurePattern::remove_agent(AgentId a) {
  std::erase_if(entries_, [a](const PatternEntry& e) { return e.agent == a; });
}

bool FailurePattern::blocks(Round r, AgentId sender, AgentId receiver) const {
  for (const PatternEntry& e : entries_) {
    if (!active(e, r)) continue;
    switch (e.kind) {
      case OmissionKind::Crash:
        if (e.agent == sender || e.agent == receiver) return true;
        break;
      case OmissionKind::Send:
        if (e.agent == sender && (e.peer == 0 || e.peer == receiver)) return true;
        break;
      case OmissionKind::Receive:
        if (e.agent == receiver && (e.peer == 0 || e.peer == sender)) return true;
        break;
    }
  }
  return false;
}

std::set<AgentId> FailurePattern::faulty_agents() const {
  std::set<AgentId> out;
  for (const PatternEntry& e : entries_) out.insert(e.agent);
  return out;
}

void FailurePattern::validate(int n, int t) const {
  for (const PatternEntry& e : entries_) {
    if (e.agent < 1 || e.agent > n) throw std::invalid_argument("pattern agent out of range");
    if (e.peer < 0 || e.peer > n || e.peer == e.agent) throw std::invalid_argument("pattern peer invalid");
    if (e.from_round < 1) throw std::invalid_argument("pattern round must be positive");
  }
  if (static_cast<int>(faulty_agents().size()) > t) {
    throw std::invalid_argument("pattern has more than t faulty agents");
  }
}

std::string to_string(OmissionKind k) {
  switch (k) {
    case OmissionKind::Send: return "send";
    case OmissionKind::Receive: return "receive";
    case OmissionKind::Crash: return "crash";
  }
  return "?";
}

nlohmann::json to_json(const FailurePattern& p) {
  nlohmann::json out = nlohmann::json::array();
  for (const PatternEntry& e : p.entries()) {
    nlohmann::json j{{"agent", e.agent}, {"kind", to_string(e.kind)}, {"from_round", e.from_round}};
    if (e.kind != OmissionKind::Crash && e.peer != 0) j["peer"] = e.peer;
    out.push_back(std::move(j));
  }
  return out;
}

FailurePattern pattern_from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("entries") ? j.at("entries") : j;
  if (!list.is_array()) throw std::invalid_argument("pattern must be a list of entries");
  FailurePattern p;
  try {
    for (const auto& item : list) {
      PatternEntry e;
      e.agent = item.at("agent").get<int>();
      const auto kind = item.at("kind").get<std::string>();
      if (kind == "send") {
        e.kind = OmissionKind::Send;
      } else if (kind == "receive") {
        e.kind = OmissionKind::Receive;
      } else if (kind == "crash") {
        e.kind = OmissionKind::Crash;
      } else {
        throw std::invalid_argument("unknown omission kind '" + kind + "'");
      }
      e.peer = item.value("peer", 0);
      e.from_round = item.at("from_round").get<int>();
      p.add(e);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("malformed pattern: ") + ex.what());
  }
  return p;
}

FailurePattern sample_blind_pattern(std::uint64_t seed, int n, int t) {
  FailurePattern p;
  if (t <= 0) return p;
  Rng rng = derive_rng(seed, kPatternStream);
  const auto size = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(t + 1)));

  std::vector<AgentId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 1);
  for (int i = 0; i < size; ++i) {
    const auto j = i + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  }
  std::vector<AgentId> faulty(ids.begin(), ids.begin() + size);
  std::sort(faulty.begin(), faulty.end());

  const Round last = t + 4;
  for (AgentId a : faulty) {
    const Round onset = 1 + static_cast<Round>(uniform_below(rng, static_cast<std::uint64_t>(last)));
    if (uniform_below(rng, 4) == 0) {
      p.add({a, OmissionKind::Crash, 0, onset});
      continue;
    }
    bool any = false;
    for (AgentId peer = 1; peer <= n; ++peer) {
      if (peer == a) continue;
      const auto choice = uniform_below(rng, 4);  // none, send, receive, both
      if (choice == 0) continue;
      const Round from =
          std::min<Round>(last, onset + static_cast<Round>(uniform_below(rng, 3)));
      if (choice & 1U) p.add({a, OmissionKind::Send, peer, from});
      if (choice & 2U) p.add({a, OmissionKind::Receive, peer, from});
      any = true;
    }
    if (!any) {
      const auto k = uniform_below(rng, static_cast<std::uint64_t>(n - 1));
      const AgentId peer = static_cast<AgentId>(k) + 1 >= a ? static_cast<AgentId>(k) + 2 : static_cast<AgentId>(k) + 1;
      p.add({a, OmissionKind::Send, peer, onset});
    }
  }
  return p;
}

}  // namespace rcons
