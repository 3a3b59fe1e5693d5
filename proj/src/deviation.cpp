#include "rcons/deviation.hpp"

#include <stdexcept>

namespace rcons {

Round default_round(int type, int t, int sub_case) {
  if (type == 6 && (sub_case == 7 || sub_case == 8)) return t + 3;
  switch (type) {
    case 4: return 2;
    case 5: return 2;
    case 6: return 3;
    case 7: return 3;
    case 8: return t + 3;
    case 9: return t + 4;
    case 10: return 2;
    default: return 1;
  }
}

Round effective_round(const Deviation& d, int t) { return d.round > 0 ? d.round : default_round(d.type, t, d.sub_case); }

void validate(const Deviation& d, int n, int t) {
  if (d.type < 1 || d.type > kDeviationTypes) throw std::invalid_argument("deviation type must be 1..10");
  if (d.agent < 1 || d.agent > n) throw std::invalid_argument("deviant agent out of range");
  const Round m = effective_round(d, t);
  if (m < 1 || m > t + 4) throw std::invalid_argument("deviation round out of range");
  if ((d.type == 6 || d.type == 7) && (m < 2 || m > t + 3)) {
    throw std::invalid_argument("link-state deviations act in rounds 2..t+3");
  }
  if (d.type == 5 && m > t + 3) throw std::invalid_argument("type 5 acts in rounds 1..t+3");
  if (d.type == 6 && (d.sub_case < 1 || d.sub_case > kLinkLieCases)) {
    throw std::invalid_argument("link-state lie case must be 1..8");
  }
}

Behavior behavior_for(const Deviation& d, int t) {
  Behavior b;
  switch (d.type) {
    case 3:
      b.constant_randoms = true;
      b.fixed_proposal = d.proposal;
      break;
    case 5:
      b.ignore_lost_limit = true;
      b.guess_randoms = d.guess;
      break;
    case 10:
      b.pretend_crash_from = effective_round(d, t);
      break;
    default:
      break;
  }
  return b;
}

std::string describe(const Deviation& d) {
  std::string s = "type " + std::to_string(d.type) + " by agent " + std::to_string(d.agent);
  if (d.type == 6) s += " case " + std::to_string(d.sub_case);
  if (d.type == 5) s += d.guess ? " (guessing)" : " (no guessing)";
  return s;
}

namespace {

NewStates* states_of(Payload& p) {
  if (auto* x = std::get_if<Round1Payload>(&p)) return &x->ns;
  if (auto* x = std::get_if<MidPayload>(&p)) return &x->ns;
  if (auto* x = std::get_if<PreFinalPayload>(&p)) return &x->ns;
  return nullptr;
}

std::uint32_t guess_random(const Protocol& proto, Rng& rng) {
  return static_cast<std::uint32_t>(uniform_below(rng, static_cast<std::uint64_t>(proto.n)));
}

std::vector<std::uint8_t> guess_bits(const Protocol& proto, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(proto.n - 1));
  for (auto& b : bits) b = static_cast<std::uint8_t>(uniform_below(rng, 2));
  return bits;
}

template <typename Pred>
std::optional<LinkId> first_link(const Protocol& proto, const NewStates& ns, Pred pred) {
  for (const LinkId& l : all_links(proto.n)) {
    auto it = ns.find(l);
    const StateTuple state = it == ns.end() ? StateTuple{ReportO{}} : it->second.state;
    if (pred(l, state)) return l;
  }
  return std::nullopt;
}

// The deviant's NS^{m-1} with one link state replaced.
std::optional<NewStates> lie(const Protocol& proto, const Deviation& d, const AgentState& s, Round m, Rng& rng) {
  NewStates ns = s.ns;
  const AgentId i = s.id;
  const auto own = [&](LinkId l) { return l.touches(i); };
  const auto relay = [&](AgentId reporter) { return SourceTag::relayed(reporter, m - 1); };
  std::optional<LinkId> target;
  switch (d.sub_case) {
    case 1:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) { return own(l) && is_r(st); });
      if (target) {
        const Round r = m - 2 >= 1 ? m - 2 : round_of(ns[*target].state);
        const auto* bits = s.xrandoms.own(r, *target);
        ns[*target] = NsEntry{ReportX{r, i, bits != nullptr ? *bits : guess_bits(proto, rng)}, SourceTag::own()};
      }
      break;
    case 2:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) {
        return own(l) && is_x(st) && reporter_of(st) == i;
      });
      if (target) {
        ns[*target] = NsEntry{ReportR{round_of(ns[*target].state), i, guess_random(proto, rng)}, SourceTag::own()};
      }
      break;
    case 3:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) { return !own(l) && !is_x(st); });
      if (target) {
        const Round r = is_r(ns[*target].state) ? round_of(ns[*target].state) : m - 1;
        ns[*target] = NsEntry{ReportX{r, target->lo, guess_bits(proto, rng)}, relay(target->lo)};
      }
      break;
    case 4:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) { return !own(l) && !is_r(st); });
      if (target) {
        const StateTuple& st = ns[*target].state;
        const Round r = is_x(st) ? round_of(st) : m - 1;
        const AgentId rep = is_x(st) ? reporter_of(st) : target->lo;
        ns[*target] = NsEntry{ReportR{r, rep, guess_random(proto, rng)}, relay(rep)};
      }
      break;
    case 5:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) { return own(l) && !is_o(st); });
      if (target) ns.erase(*target);
      break;
    case 6:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) { return !own(l) && !is_o(st); });
      if (target) ns.erase(*target);
      break;
    case 7:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) {
        return !own(l) && is_x(st) && round_of(st) >= 2;
      });
      if (target) {
        NsEntry& e = ns[*target];
        e.state = ReportX{round_of(e.state) - 1, reporter_of(e.state), guess_bits(proto, rng)};
      }
      break;
    case 8:
      target = first_link(proto, ns, [&](LinkId l, const StateTuple& st) {
        return own(l) && is_x(st) && reporter_of(st) != i;
      });
      if (target) {
        NsEntry& e = ns[*target];
        e.state = ReportR{round_of(e.state), reporter_of(e.state), guess_random(proto, rng)};
      }
      break;
    default:
      break;
  }
  if (!target) return std::nullopt;
  return ns;
}

std::optional<NewStates> corrupt_relay(const Protocol& proto, const AgentState& s) {
  NewStates ns = s.ns;
  for (auto& [link, entry] : ns) {
    if (link.touches(s.id)) continue;
    if (auto* r = std::get_if<ReportR>(&entry.state)) {
      r->rand = (r->rand + 1) % static_cast<std::uint32_t>(proto.n);
      return ns;
    }
  }
  for (auto& [link, entry] : ns) {
    if (link.touches(s.id)) continue;
    if (auto* x = std::get_if<ReportX>(&entry.state); x != nullptr && !x->bits.empty()) {
      x->bits[0] ^= 1U;
      return ns;
    }
  }
  return std::nullopt;
}

}  // namespace

bool tamper(const Protocol& proto, const Deviation& d, const AgentState& deviant, Round r,
            std::vector<RoundMessage>& outbox, Rng& rng) {
  if (outbox.empty()) return false;
  const Round m = effective_round(d, proto.t);
  switch (d.type) {
    case 1: {
      if (r != 1) return false;
      const int fake = proto.domain_size > 1 ? (deviant.value + 1) % proto.domain_size : deviant.value;
      const LinearPolynomial q = make_polynomial(proto.field, proto.field.element(static_cast<std::uint64_t>(fake)), rng);
      const std::size_t half = (outbox.size() + 1) / 2;
      for (std::size_t k = 0; k < half; ++k) {
        auto& p = std::get<Round1Payload>(outbox[k].payload);
        p.share.q = share_for(proto.field, q, outbox[k].recipient).value;
      }
      return true;
    }
    case 2:
      if (r != 1) return false;
      for (RoundMessage& msg : outbox) {
        auto& p = std::get<Round1Payload>(msg.payload);
        p.share = SharePair{proto.field.random(rng), proto.field.random(rng)};
      }
      return true;
    case 4:
      if (r != m) return false;
      for (RoundMessage& msg : outbox) {
        if (msg.payload.index() == 3) {
          msg.payload = MidPayload{};
        } else {
          msg.payload = FinalPayload{};
        }
      }
      return true;
    case 6:
    case 7: {
      if (r != m) return false;
      auto ns = d.type == 6 ? lie(proto, d, deviant, m, rng) : corrupt_relay(proto, deviant);
      if (!ns) return false;
      for (RoundMessage& msg : outbox) {
        if (NewStates* target = states_of(msg.payload)) *target = *ns;
      }
      return true;
    }
    case 8: {
      if (r != proto.final_exchange()) return false;
      bool changed = false;
      for (RoundMessage& msg : outbox) {
        auto& p = std::get<PreFinalPayload>(msg.payload);
        for (auto& [owner, pair] : p.shares) {
          if (owner == deviant.id) continue;
          pair.q = proto.field.add(pair.q, FieldElement{1});
          changed = true;
          break;
        }
      }
      return changed;
    }
    case 9:
      if (r != proto.last_round()) return false;
      for (RoundMessage& msg : outbox) msg.payload = FinalPayload{{deviant.value}};
      return true;
    default:
      return false;
  }
}

}  // namespace rcons
