#include "rcons/agent.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcons {

std::size_t expected_payload(Round r, int t) {
  if (r == 1) return 0;
  if (r <= t + 2) return 1;
  if (r == t + 3) return 2;
  return 3;
}

std::string to_string(const Decision& d) {
  switch (d.outcome) {
    case Outcome::Undecided: return "undecided";
    case Outcome::Bottom: return "bottom";
    case Outcome::NoDecision: return "none";
    case Outcome::Value: return "value:" + std::to_string(d.value);
  }
  return "?";
}

namespace {

void decide(AgentState& s, Outcome o, Round r, int value = -1) {
  s.decision = Decision{o, value, r};
}

void punish(AgentState& s, Round r, Inconsistency inc) {
  s.inconsistency = std::move(inc);
  decide(s, Outcome::Bottom, r);
}

void generate_randoms(const Protocol& proto, AgentState& s, Round r) {
  const bool fixed = s.behavior.constant_randoms;
  const auto rand = fixed ? 0u : static_cast<std::uint32_t>(uniform_below(s.rng, static_cast<std::uint64_t>(proto.n)));
  s.my_randoms[r] = rand;
  s.randoms.record(s.id, r, rand);
  for (AgentId j = 1; j <= proto.n; ++j) {
    if (j == s.id) continue;
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(proto.n - 1), 0);
    if (!fixed) {
      for (auto& bit : bits) bit = static_cast<std::uint8_t>(uniform_below(s.rng, 2));
    }
    s.xrandoms.record_own(r, link_of(s.id, j), std::move(bits));
  }
}

std::vector<std::uint8_t> xbits_for(const Protocol& proto, const AgentState& s, Round r, AgentId recipient) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(proto.n - 1));
  const std::size_t idx = xbit_index(s.id, recipient);
  for (AgentId j = 1; j <= proto.n; ++j) {
    if (j == s.id) continue;
    const auto* bits = s.xrandoms.own(r, link_of(s.id, j));
    out.push_back(bits != nullptr ? (*bits)[idx] : 0);
  }
  return out;
}

SharePair share_pair(const Protocol& proto, const AgentState& s, AgentId holder) {
  return {share_for(proto.field, s.q, holder).value, share_for(proto.field, s.b, holder).value};
}

Inconsistency payload_error(Round r, const std::string& detail) {
  return Inconsistency{Category::Payload, Rule::PayloadMismatch, {}, r, detail};
}

std::optional<Inconsistency> accept_randoms(const Protocol& proto, AgentState& s, Round r, AgentId j,
                                            const std::vector<std::uint8_t>* xbits, std::uint32_t rand) {
  if (rand >= static_cast<std::uint32_t>(proto.n)) {
    return Inconsistency{Category::Format, Rule::Structure, {}, r, "message random out of range"};
  }
  if (!s.randoms.record(j, r, rand)) {
    return Inconsistency{Category::RandomNumber, Rule::RegistryConflict, {}, r, "message random re-registered"};
  }
  if (xbits == nullptr) return std::nullopt;
  if (xbits->size() != static_cast<std::size_t>(proto.n - 1) ||
      std::any_of(xbits->begin(), xbits->end(), [](std::uint8_t b) { return b > 1; })) {
    return Inconsistency{Category::Format, Rule::Structure, {}, r, "malformed faulty randoms"};
  }
  std::size_t idx = 0;
  for (AgentId k = 1; k <= proto.n; ++k) {
    if (k == j) continue;
    if (!s.xrandoms.record(j, r, link_of(j, k), (*xbits)[idx++])) {
      return Inconsistency{Category::RandomNumber, Rule::RegistryConflict, link_of(j, k), r,
                           "faulty random re-registered"};
    }
  }
  return std::nullopt;
}

std::optional<Inconsistency> accept(const Protocol& proto, AgentState& s, Round r, const RoundMessage& msg) {
  const AgentId j = msg.sender;
  if (msg.payload.index() != expected_payload(r, proto.t)) {
    return payload_error(r, "unexpected payload from agent " + std::to_string(j));
  }
  if (const auto* p = std::get_if<Round1Payload>(&msg.payload)) {
    if (p->share.q.value >= proto.field.modulus() || p->share.b.value >= proto.field.modulus()) {
      return payload_error(r, "share outside the field");
    }
    s.my_shares[j] = p->share;
    s.collected[j][s.id] = p->share;
    return accept_randoms(proto, s, r, j, &p->xbits, p->rand);
  }
  if (const auto* p = std::get_if<MidPayload>(&msg.payload)) {
    return accept_randoms(proto, s, r, j, &p->xbits, p->rand);
  }
  if (const auto* p = std::get_if<PreFinalPayload>(&msg.payload)) {
    for (const auto& [owner, pair] : p->shares) {
      if (owner < 1 || owner > proto.n || owner == s.id) {
        return payload_error(r, "forwarded share for agent " + std::to_string(owner));
      }
      if (pair.q.value >= proto.field.modulus() || pair.b.value >= proto.field.modulus()) {
        return payload_error(r, "share outside the field");
      }
      s.collected[owner][j] = pair;
    }
    return accept_randoms(proto, s, r, j, nullptr, p->rand);
  }
  const auto& f = std::get<FinalPayload>(msg.payload);
  s.consensus.insert(f.consensus.begin(), f.consensus.end());
  return std::nullopt;
}

void fabricate_links(const Protocol& proto, AgentState& s, Round r) {
  if (static_cast<int>(s.lost.size()) <= proto.t) return;
  const auto& heard = s.heard_from[r];
  int correct = static_cast<int>(heard.size());
  const std::vector<AgentId> lost(s.lost.begin(), s.lost.end());
  for (AgentId j : lost) {
    if (correct >= proto.n - proto.t - 1) break;
    if (heard.count(j) > 0) continue;
    const auto guess = static_cast<std::uint32_t>(uniform_below(s.rng, static_cast<std::uint64_t>(proto.n)));
    s.ns[link_of(s.id, j)] = NsEntry{ReportR{r, s.id, guess}, SourceTag::own()};
    s.guesses.push_back(Guess{j, r, guess});
    s.lost.erase(j);
    ++correct;
  }
}

void finalize(const Protocol& proto, AgentState& s, Round r) {
  last_update(s.hs, s.ns, proto.final_exchange());
  Machinery m;
  const StatusHistory status = status_history(s.hs, proto.n, proto.t, proto.final_exchange());
  m.newly_faulty = status.newly;
  m.m_star = decision_round(status.newly, proto.t);
  if (!m.m_star) {
    s.machinery = std::move(m);
    punish(s, r, Inconsistency{Category::Decision, Rule::NoReliableRound, {}, r, "no reliable round"});
    return;
  }
  m.decision_set = decision_set(status, *m.m_star, proto.n);

  ElectionInput input;
  input.members = m.decision_set;
  for (AgentId j : m.decision_set) {
    if (j == s.id) {
      input.values[j] = s.value;
      input.proposals[j] = s.proposal.value;
      continue;
    }
    auto it = s.collected.find(j);
    if (it == s.collected.end() || it->second.size() < 2) {
      s.machinery = std::move(m);
      return;
    }
    std::vector<Share> qs;
    std::vector<Share> bs;
    for (const auto& [holder, pair] : it->second) {
      qs.push_back({holder, pair.q});
      bs.push_back({holder, pair.b});
    }
    FieldElement v;
    FieldElement pr;
    try {
      v = reconstruct(proto.field, qs);
      pr = reconstruct(proto.field, bs);
    } catch (const SharingError& e) {
      s.machinery = std::move(m);
      punish(s, r, Inconsistency{Category::Secret, Rule::ShareInconsistent, {}, r,
                                 "agent " + std::to_string(j) + ": " + e.what()});
      return;
    }
    if (v.value >= static_cast<std::uint64_t>(proto.domain_size)) {
      s.machinery = std::move(m);
      punish(s, r, Inconsistency{Category::Secret, Rule::ShareUndecodable, {}, r,
                                 "agent " + std::to_string(j) + " shared a value outside the domain"});
      return;
    }
    input.values[j] = static_cast<int>(v.value);
    input.proposals[j] = pr.value;
  }
  m.reconstructed = true;
  m.elected = elect(input);
  s.consensus.insert(m.elected->value);
  s.machinery = std::move(m);
}

}  // namespace

AgentState init_agent(const Protocol& proto, AgentId id, int value, Rng rng, Behavior behavior) {
  if (value < 0 || value >= proto.domain_size) throw std::invalid_argument("initial value outside the domain");
  if (id < 1 || id > proto.n) throw std::invalid_argument("agent id out of range");
  AgentState s;
  s.id = id;
  s.value = value;
  s.behavior = behavior;
  s.rng = std::move(rng);
  s.proposal = behavior.constant_randoms ? proto.field.element(behavior.fixed_proposal) : proto.field.random(s.rng);
  s.q = make_polynomial(proto.field, proto.field.element(static_cast<std::uint64_t>(value)), s.rng);
  s.b = make_polynomial(proto.field, s.proposal, s.rng);
  const SharePair own = share_pair(proto, s, id);
  s.my_shares[id] = own;
  s.collected[id][id] = own;
  generate_randoms(proto, s, 1);
  return s;
}

std::vector<RoundMessage> send_phase(const Protocol& proto, const AgentState& s, Round r) {
  std::vector<RoundMessage> out;
  if (!s.running()) return out;
  if (s.behavior.pretend_crash_from > 0 && r >= s.behavior.pretend_crash_from) return out;
  const int t = proto.t;
  for (AgentId j = 1; j <= proto.n; ++j) {
    if (j == s.id || s.lost.count(j) > 0) continue;
    RoundMessage msg{s.id, j, r, FinalPayload{}};
    const std::uint32_t rand = r <= t + 3 ? s.my_randoms.at(r) : 0;
    if (r == 1) {
      msg.payload = Round1Payload{share_pair(proto, s, j), s.ns, xbits_for(proto, s, r, j), rand};
    } else if (r <= t + 2) {
      msg.payload = MidPayload{s.ns, xbits_for(proto, s, r, j), rand};
    } else if (r == t + 3) {
      PreFinalPayload p{s.ns, {}, rand};
      for (const auto& [owner, pair] : s.my_shares) {
        if (owner != j) p.shares.emplace(owner, pair);
      }
      msg.payload = std::move(p);
    } else {
      msg.payload = FinalPayload{s.consensus};
    }
    out.push_back(std::move(msg));
  }
  return out;
}

void receive_phase(const Protocol& proto, AgentState& s, Round r, std::vector<RoundMessage> inbox) {
  s.inbox.clear();
  if (!s.running()) return;
  if (s.behavior.pretend_crash_from > 0 && r >= s.behavior.pretend_crash_from) {
    decide(s, Outcome::NoDecision, r);
    return;
  }
  std::stable_sort(inbox.begin(), inbox.end(),
                   [](const RoundMessage& a, const RoundMessage& b) { return a.sender < b.sender; });
  std::set<AgentId> heard;
  auto it = inbox.begin();
  for (AgentId j = 1; j <= proto.n; ++j) {
    while (it != inbox.end() && it->sender < j) ++it;
    if (j == s.id || s.lost.count(j) > 0) continue;
    if (it == inbox.end() || it->sender != j || it->round != r || it->recipient != s.id) {
      s.lost.insert(j);
      continue;
    }
    if (auto err = accept(proto, s, r, *it)) {
      punish(s, r, std::move(*err));
      return;
    }
    heard.insert(j);
    s.inbox.push_back(std::move(*it));
  }
  if (r <= proto.final_exchange()) s.heard_from[r] = std::move(heard);
  if (static_cast<int>(s.lost.size()) > proto.t && !s.behavior.ignore_lost_limit) {
    decide(s, Outcome::NoDecision, r);
  }
}

void compute_phase(const Protocol& proto, AgentState& s, Round r) {
  if (!s.running()) return;
  if (r <= proto.final_exchange()) {
    std::vector<IncomingStates> incoming;
    incoming.reserve(s.inbox.size());
    for (const RoundMessage& msg : s.inbox) {
      IncomingStates in{msg.sender, nullptr, 0};
      std::visit(
          [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (!std::is_same_v<P, FinalPayload>) {
              in.states = &p.ns;
              in.msg_random = p.rand;
            }
          },
          msg.payload);
      incoming.push_back(in);
    }
    const VerifierView view{s.id, r, proto.n, proto.t, s.randoms, s.xrandoms, s.heard_from};
    if (auto err = verify_and_update(view, s.ns, s.hs, incoming)) {
      punish(s, r, std::move(*err));
      return;
    }
    if (s.behavior.guess_randoms) fabricate_links(proto, s, r);
    if (r <= proto.t + 2) {
      generate_randoms(proto, s, r + 1);
    } else {
      finalize(proto, s, r);
    }
    return;
  }
  if (s.consensus.size() == 1) {
    decide(s, Outcome::Value, r, *s.consensus.begin());
  } else {
    punish(s, r, Inconsistency{Category::Consensus, Rule::ConsensusConflict, {}, r,
                               std::to_string(s.consensus.size()) + " consensus values"});
  }
}

}  // namespace rcons
