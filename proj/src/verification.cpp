#include "rcons/verification.hpp"

#include <algorithm>
#include <cstdlib>

namespace rcons {

bool RandomRegistry::record(AgentId agent, Round r, std::uint32_t value) {
  auto [it, inserted] = values_.emplace(std::pair{agent, r}, value);
  return inserted || it->second == value;
}

std::optional<std::uint32_t> RandomRegistry::lookup(AgentId agent, Round r) const {
  auto it = values_.find({agent, r});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

bool XRandomRegistry::record(AgentId generator, Round r, LinkId link, std::uint8_t bit) {
  auto [it, inserted] = bits_.emplace(std::tuple{generator, r, link}, bit);
  return inserted || it->second == bit;
}

void XRandomRegistry::record_own(Round r, LinkId link, std::vector<std::uint8_t> bits) {
  own_[{r, link}] = std::move(bits);
}

std::optional<std::uint8_t> XRandomRegistry::lookup(AgentId generator, Round r, LinkId link) const {
  auto it = bits_.find({generator, r, link});
  if (it == bits_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::uint8_t>* XRandomRegistry::own(Round r, LinkId link) const {
  auto it = own_.find({r, link});
  return it == own_.end() ? nullptr : &it->second;
}

std::size_t xbit_index(AgentId generator, AgentId agent) {
  return static_cast<std::size_t>(agent < generator ? agent - 1 : agent - 2);
}

namespace {

Inconsistency fail(Category c, Rule r, LinkId link, Round round, std::string detail) {
  return Inconsistency{c, r, link, round, std::move(detail)};
}

const StateTuple* state_in(const NewStates& ns, LinkId link) {
  auto it = ns.find(link);
  if (it == ns.end() || is_o(it->second.state)) return nullptr;
  return &it->second.state;
}

// The state of the link at round x is implied by the tuple: an X report
// persists, an R report is only as fresh as its round.
bool known_at(const StateTuple* s, Round x) {
  if (s == nullptr) return false;
  return is_x(*s) || round_of(*s) >= x;
}

std::string describe(LinkId l) { return "l" + std::to_string(l.lo) + "," + std::to_string(l.hi); }

}  // namespace

std::optional<Inconsistency> verify_msg_chain(const MergeContext& ctx) {
  const AgentId j = ctx.sender;
  const Round m = ctx.round - 1;
  const NewStates& ns = ctx.received;

  if (m == 0) {
    if (!ns.empty()) {
      return fail(Category::MessageChain, Rule::Claim2, ns.begin()->first, ctx.round, "round-0 states must be empty");
    }
    return std::nullopt;
  }

  // Claim 2: nothing about the sender's own links beyond round m.
  for (AgentId p = 1; p <= ctx.n; ++p) {
    if (p == j) continue;
    const LinkId l = link_of(j, p);
    if (const StateTuple* s = state_in(ns, l); s != nullptr && round_of(*s) > m) {
      return fail(Category::MessageChain, Rule::Claim2, l, ctx.round, "direct link state from the future");
    }
  }

  // Claim 1: every direct link known at round m, enough of them correct.
  std::vector<bool> connected(static_cast<std::size_t>(ctx.n + 1), false);
  std::vector<Round> lost_round(static_cast<std::size_t>(ctx.n + 1), 0);
  int correct = 0;
  for (AgentId p = 1; p <= ctx.n; ++p) {
    if (p == j) continue;
    const LinkId l = link_of(j, p);
    const StateTuple* s = state_in(ns, l);
    if (s == nullptr) return fail(Category::MessageChain, Rule::Claim1, l, ctx.round, "direct link state missing");
    if (const auto* r = std::get_if<ReportR>(s)) {
      if (r->round != m || r->reporter != j) {
        return fail(Category::MessageChain, Rule::Claim1, l, ctx.round, "direct link not known at round m");
      }
      connected[static_cast<std::size_t>(p)] = true;
      ++correct;
    } else {
      lost_round[static_cast<std::size_t>(p)] = round_of(*s);
    }
  }
  if (correct < ctx.n - ctx.t - 1) {
    return fail(Category::MessageChain, Rule::Claim1, {}, ctx.round,
                "only " + std::to_string(correct) + " correct direct links");
  }

  const auto in_t = [&](AgentId a) { return connected[static_cast<std::size_t>(a)]; };
  const auto indirect = [&](auto&& visit) -> std::optional<Inconsistency> {
    for (const LinkId& l : all_links(ctx.n)) {
      if (l.touches(j)) continue;
      if (auto err = visit(l, state_in(ns, l))) return err;
    }
    return std::nullopt;
  };

  // Claim 3: links between two disconnected agents stop at round m - 2.
  if (auto err = indirect([&](LinkId l, const StateTuple* s) -> std::optional<Inconsistency> {
        if (!in_t(l.lo) && !in_t(l.hi) && s != nullptr && round_of(*s) > m - 2) {
          return fail(Category::MessageChain, Rule::Claim3, l, ctx.round, "disconnected pair known too late");
        }
        return std::nullopt;
      })) {
    return err;
  }

  // Claim 4: the later-disconnected endpoint relayed round (m1 - 2).
  if (auto err = indirect([&](LinkId l, const StateTuple* s) -> std::optional<Inconsistency> {
        if (in_t(l.lo) || in_t(l.hi)) return std::nullopt;
        const Round later = std::max(lost_round[static_cast<std::size_t>(l.lo)],
                                     lost_round[static_cast<std::size_t>(l.hi)]);
        if (later - 2 >= 1 && !known_at(s, later - 2)) {
          return fail(Category::MessageChain, Rule::Claim4, l, ctx.round,
                      "state at round " + std::to_string(later - 2) + " missing");
        }
        return std::nullopt;
      })) {
    return err;
  }

  // Claim 5: a connected endpoint delivered round m - 1 and nothing later.
  if (auto err = indirect([&](LinkId l, const StateTuple* s) -> std::optional<Inconsistency> {
        if (!in_t(l.lo) && !in_t(l.hi)) return std::nullopt;
        if (s != nullptr && round_of(*s) > m - 1) {
          return fail(Category::MessageChain, Rule::Claim5, l, ctx.round, "state newer than round m - 1");
        }
        if (m - 1 >= 1) {
          const bool ok = s != nullptr && (is_x(*s) || round_of(*s) == m - 1);
          if (!ok) return fail(Category::MessageChain, Rule::Claim5, l, ctx.round, "round m - 1 state missing");
        }
        return std::nullopt;
      })) {
    return err;
  }

  // Claims 6 and 7: a connected k that still heard from a disconnected p
  // forwarded p's view of its links to other disconnected agents.
  const auto pt_links = [&](AgentId k, AgentId p, Rule rule, auto&& ok) -> std::optional<Inconsistency> {
    for (AgentId other = 1; other <= ctx.n; ++other) {
      if (other == j || other == p || other == k || in_t(other)) continue;
      const LinkId l = link_of(p, other);
      if (!ok(state_in(ns, l))) {
        return fail(Category::MessageChain, rule, l, ctx.round, "inconsistent with " + describe(link_of(k, p)));
      }
    }
    return std::nullopt;
  };
  for (int pass = 0; pass < 2; ++pass) {
    const Rule rule = pass == 0 ? Rule::Claim6 : Rule::Claim7;
    if (auto err = indirect([&](LinkId l, const StateTuple* s) -> std::optional<Inconsistency> {
          if (in_t(l.lo) == in_t(l.hi) || s == nullptr) return std::nullopt;
          const AgentId k = in_t(l.lo) ? l.lo : l.hi;
          const AgentId p = l.other(k);
          if (rule == Rule::Claim6 && is_r(*s) && round_of(*s) == m - 1) {
            return pt_links(k, p, rule, [&](const StateTuple* pt) {
              if (m - 2 < 1) return pt == nullptr;
              return pt != nullptr && (is_x(*pt) ? round_of(*pt) <= m - 2 : round_of(*pt) == m - 2);
            });
          }
          if (rule == Rule::Claim7 && is_x(*s) && round_of(*s) <= m - 1) {
            const Round need = round_of(*s) - 2;
            if (need < 1) return std::nullopt;
            return pt_links(k, p, rule, [&](const StateTuple* pt) { return known_at(pt, need); });
          }
          return std::nullopt;
        })) {
      return err;
    }
  }
  return std::nullopt;
}

MergeCase classify_case(AgentId self, LinkId link, const StateTuple& local, const StateTuple& recv) {
  if (is_o(recv)) return MergeCase::Case10;
  if (is_o(local)) return MergeCase::Case11;
  if (link.touches(self)) {
    if (is_r(local)) return is_r(recv) ? MergeCase::Case1 : MergeCase::Case2;
    if (is_r(recv)) return MergeCase::Case3;
    return reporter_of(local) == self ? MergeCase::Case4 : MergeCase::Case5;
  }
  if (is_r(local)) return is_r(recv) ? MergeCase::Case6 : MergeCase::Case7;
  return is_r(recv) ? MergeCase::Case8 : MergeCase::Case9;
}

std::optional<Inconsistency> verify_state(const MergeContext& ctx, LinkId link, const NsEntry& recv) {
  const Round r = ctx.round;
  const StateTuple& s = recv.state;
  if (is_o(s)) return std::nullopt;

  // 1. format
  if (link.lo < 1 || link.hi > ctx.n || link.lo >= link.hi) {
    return fail(Category::Format, Rule::Structure, link, r, "invalid link id");
  }
  const Round sr = round_of(s);
  if (sr < 1 || sr > r - 1) return fail(Category::Format, Rule::Structure, link, r, "state round out of range");
  if (const auto* rr = std::get_if<ReportR>(&s); rr != nullptr && rr->rand >= static_cast<std::uint32_t>(ctx.n)) {
    return fail(Category::Format, Rule::Structure, link, r, "message random out of range");
  }
  if (const auto* x = std::get_if<ReportX>(&s)) {
    if (x->bits.size() != static_cast<std::size_t>(ctx.n - 1) ||
        std::any_of(x->bits.begin(), x->bits.end(), [](std::uint8_t b) { return b > 1; })) {
      return fail(Category::Format, Rule::Structure, link, r, "malformed faulty-random vector");
    }
  }
  const AgentId reporter = reporter_of(s);
  if (!link.touches(reporter)) {
    return fail(Category::RoundNumber, Rule::Claim8, link, r, "reporter is not an endpoint");
  }
  if (recv.source.is_own()) {
    if (reporter != ctx.sender || !link.touches(ctx.sender)) {
      return fail(Category::Format, Rule::SourceTagForm, link, r, "own source on a foreign state");
    }
  } else if (recv.source.sender < 1 || recv.source.sender > ctx.n || recv.source.sender == ctx.sender ||
             recv.source.round < 1 || recv.source.round > r - 1) {
    return fail(Category::Format, Rule::SourceTagForm, link, r, "invalid relay tag");
  }

  // 2. source
  if (!recv.source.is_own()) {
    const AgentId via = recv.source.sender;
    const Round when = recv.source.round;
    bool heard = via == ctx.self;
    if (auto it = ctx.heard_from.find(when); it != ctx.heard_from.end() && it->second.count(via) > 0) heard = true;
    if (heard && !ctx.hs.contains(link, s)) {
      return fail(Category::Source, Rule::Claim13, link, r, "relayed state never seen from its source");
    }
    if (when == r - 1) {
      const StateTuple* hop = state_in(ctx.received, link_of(ctx.sender, via));
      if (hop == nullptr || !is_r(*hop) || round_of(*hop) != r - 1) {
        return fail(Category::Source, Rule::Claim14, link, r, "relay hop not correct in the previous round");
      }
    }
  }

  // 3. random numbers
  if (const auto* rr = std::get_if<ReportR>(&s)) {
    if (auto known = ctx.randoms.lookup(link.other(reporter), rr->round); known && *known != rr->rand) {
      return fail(Category::RandomNumber, Rule::RandomMismatch, link, r, "message random differs");
    }
  } else if (const auto* x = std::get_if<ReportX>(&s)) {
    if (reporter == ctx.self) {
      if (const auto* own = ctx.xrandoms.own(x->round, link); own != nullptr && *own != x->bits) {
        return fail(Category::RandomNumber, Rule::XRandomMismatch, link, r, "own faulty randoms differ");
      }
    } else if (auto known = ctx.xrandoms.lookup(reporter, x->round, link);
               known && x->bits[xbit_index(reporter, ctx.self)] != *known) {
      return fail(Category::RandomNumber, Rule::XRandomMismatch, link, r, "faulty random differs");
    }
  }

  // 4. round relations against the current local state
  auto it = ctx.ns.find(link);
  if (it == ctx.ns.end() || is_o(it->second.state)) return std::nullopt;
  const StateTuple& local = it->second.state;
  const Round lr = round_of(local);
  const AgentId li = reporter_of(local);
  const Round rr = sr;
  const AgentId ri = reporter;
  switch (classify_case(ctx.self, link, local, s)) {
    case MergeCase::Case1:
      if (!(rr < lr)) return fail(Category::RoundNumber, Rule::Claim9, link, r, "received correct state not older");
      break;
    case MergeCase::Case2:
      return fail(Category::RoundNumber, Rule::Case2, link, r, "faulty report on a link heard from this round");
    case MergeCase::Case3:
      if (!(rr <= lr)) return fail(Category::RoundNumber, Rule::Claim10, link, r, "correct state after failure");
      break;
    case MergeCase::Case4:
      if (ri == ctx.self ? local != s : std::abs(lr - rr) > 1) {
        return fail(Category::RoundNumber, Rule::Claim11, link, r, "endpoint failure rounds disagree");
      }
      break;
    case MergeCase::Case5:
      if (ri == li ? local != s : (ri != ctx.self || rr != lr + 1)) {
        return fail(Category::RoundNumber, Rule::Claim12, link, r, "endpoint failure rounds disagree");
      }
      break;
    case MergeCase::Case7:
      if (ri == li ? !(lr < rr) : !(lr <= rr)) {
        return fail(Category::RoundNumber, Rule::Case7Relation, link, r, "failure before a correct report");
      }
      break;
    case MergeCase::Case8:
      if (ri == li ? !(lr > rr) : !(lr >= rr)) {
        return fail(Category::RoundNumber, Rule::Case8Relation, link, r, "correct report after failure");
      }
      break;
    case MergeCase::Case9:
      if (ri == li ? local != s : std::abs(lr - rr) > 1) {
        return fail(Category::RoundNumber, Rule::Case9Relation, link, r, "failure reports disagree");
      }
      break;
    default:
      break;
  }
  return std::nullopt;
}

std::optional<Inconsistency> merge_state(MergeContext& ctx, LinkId link, const NsEntry& recv) {
  const StateTuple& s = recv.state;
  const Round r = ctx.round;
  auto append = [&]() -> std::optional<Inconsistency> {
    if (auto v = ctx.hs.append(link, s)) return fail(Category::History, Rule::HistoryInvariant, link, r, v->detail);
    return std::nullopt;
  };
  auto adopt = [&]() -> std::optional<Inconsistency> {
    ctx.ns[link] = NsEntry{s, SourceTag::relayed(ctx.sender, r)};
    return append();
  };

  auto it = ctx.ns.find(link);
  const StateTuple local = it == ctx.ns.end() ? StateTuple{ReportO{}} : it->second.state;
  const Round lr = round_of(local);
  const Round rr = round_of(s);
  switch (classify_case(ctx.self, link, local, s)) {
    case MergeCase::Case10:
      return std::nullopt;
    case MergeCase::Case11:
      return adopt();
    case MergeCase::Case1:
    case MergeCase::Case3:
      return append();
    case MergeCase::Case2:
      return fail(Category::RoundNumber, Rule::Case2, link, r, "faulty report on a link heard from this round");
    case MergeCase::Case4:
      if (rr == lr || rr == lr + 1) return append();
      if (rr == lr - 1) return adopt();
      return std::nullopt;
    case MergeCase::Case5:
      return std::nullopt;
    case MergeCase::Case6:
      return rr <= lr ? append() : adopt();
    case MergeCase::Case7:
      return adopt();
    case MergeCase::Case8:
      return append();
    case MergeCase::Case9:
      if (reporter_of(s) == reporter_of(local)) return std::nullopt;
      return lr <= rr ? append() : adopt();
  }
  return std::nullopt;
}

std::optional<Inconsistency> verify_and_update(const VerifierView& view, NewStates& ns, HistoryStates& hs,
                                               std::span<const IncomingStates> incoming) {
  const AgentId i = view.self;
  const Round r = view.round;

  // Direct links: heard-from agents are correct this round, everyone else
  // is faulty from the first round they went silent.
  std::vector<bool> heard(static_cast<std::size_t>(view.n + 1), false);
  for (const IncomingStates& in : incoming) heard[static_cast<std::size_t>(in.sender)] = true;
  for (const IncomingStates& in : incoming) {
    const LinkId l = link_of(i, in.sender);
    const StateTuple s = ReportR{r, i, in.msg_random};
    ns[l] = NsEntry{s, SourceTag::own()};
    if (auto v = hs.append(l, s)) return fail(Category::History, Rule::HistoryInvariant, l, r, v->detail);
  }
  for (AgentId j = 1; j <= view.n; ++j) {
    if (j == i || heard[static_cast<std::size_t>(j)]) continue;
    const LinkId l = link_of(i, j);
    if (auto it = ns.find(l); it != ns.end() && is_x(it->second.state)) continue;
    const auto* bits = view.xrandoms.own(r, l);
    const StateTuple s = ReportX{r, i, bits != nullptr ? *bits : std::vector<std::uint8_t>(view.n - 1, 0)};
    ns[l] = NsEntry{s, SourceTag::own()};
    if (auto v = hs.append(l, s)) return fail(Category::History, Rule::HistoryInvariant, l, r, v->detail);
  }

  const auto context = [&](const IncomingStates& in) {
    return MergeContext{i, r, view.n, view.t, ns, hs, in.sender, *in.states, view.randoms, view.xrandoms,
                        view.heard_from};
  };

  for (const IncomingStates& in : incoming) {
    if (auto err = verify_msg_chain(context(in))) return err;
  }

  for (const IncomingStates& in : incoming) {
    for (const auto& entry : *in.states) {
      const LinkId& l = entry.first;
      if (l.lo < 1 || l.hi > view.n || l.lo >= l.hi) {
        return fail(Category::Format, Rule::Structure, l, r, "invalid link id");
      }
    }
  }

  const std::vector<LinkId> links = all_links(view.n);
  for (const IncomingStates& in : incoming) {
    MergeContext ctx = context(in);
    for (const LinkId& l : links) {
      auto it = in.states->find(l);
      if (it == in.states->end()) continue;  // case 10
      if (auto err = verify_state(ctx, l, it->second)) return err;
      if (auto err = merge_state(ctx, l, it->second)) return err;
    }
  }
  return std::nullopt;
}

}  // namespace rcons
