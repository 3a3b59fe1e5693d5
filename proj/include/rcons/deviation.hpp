#pragma once

#include <string>
#include <vector>

#include "rcons/agent.hpp"

namespace rcons {

// A single deviant agent's strategy.
//   1  split shares: a fake value's shares to some recipients
//   2  garbage shares
//   3  constant randoms and proposal
//   4  payload of the wrong kind in round `round`
//   5  keep running with more than t lost peers, optionally guessing randoms
//   6  lie about one link state in round `round` (sub_case 1..8)
//   7  corrupt a relayed message random in round `round`
//   8  corrupt forwarded shares in round t+3
//   9  announce its own value as the consensus in round t+4
//   10 pretend to crash from round `round`
struct Deviation {
  int type = 0;
  AgentId agent = 0;
  Round round = 0;  // 0 = the type's default
  int sub_case = 1;
  bool guess = true;
  std::uint64_t proposal = 0;  // type 3
};

constexpr int kDeviationTypes = 10;
constexpr int kLinkLieCases = 8;

// Round the deviation acts in when `round` is unset. Link-state lies about
// relayed failures (cases 7 and 8) need a later round to be applicable.
Round default_round(int type, int t, int sub_case = 1);
Round effective_round(const Deviation& d, int t);

// Throws std::invalid_argument for an unknown type, sub-case, agent or round.
void validate(const Deviation& d, int n, int t);

Behavior behavior_for(const Deviation& d, int t);

std::string describe(const Deviation& d);

// Rewrites the deviant's outgoing messages for round r. Returns true when
// anything changed.
bool tamper(const Protocol& proto, const Deviation& d, const AgentState& deviant, Round r,
            std::vector<RoundMessage>& outbox, Rng& rng);

}  // namespace rcons
