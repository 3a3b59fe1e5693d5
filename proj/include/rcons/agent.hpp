#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "rcons/decision.hpp"
#include "rcons/inconsistency.hpp"
#include "rcons/link_model.hpp"
#include "rcons/secret_sharing.hpp"
#include "rcons/verification.hpp"

namespace rcons {

struct SharePair {
  FieldElement q;
  FieldElement b;
  friend bool operator==(const SharePair&, const SharePair&) = default;
};

struct Round1Payload {
  SharePair share;
  NewStates ns;
  std::vector<std::uint8_t> xbits;
  std::uint32_t rand = 0;
};

struct MidPayload {
  NewStates ns;
  std::vector<std::uint8_t> xbits;
  std::uint32_t rand = 0;
};

// shares[l] = (q_l(sender), b_l(sender))
struct PreFinalPayload {
  NewStates ns;
  std::map<AgentId, SharePair> shares;
  std::uint32_t rand = 0;
};

struct FinalPayload {
  std::set<int> consensus;
};

using Payload = std::variant<Round1Payload, MidPayload, PreFinalPayload, FinalPayload>;

struct RoundMessage {
  AgentId sender = 0;
  AgentId recipient = 0;
  Round round = 0;
  Payload payload;
};

// Index of the payload alternative expected in round r of a t-resilient run.
std::size_t expected_payload(Round r, int t);

enum class Outcome { Undecided, Bottom, NoDecision, Value };

struct Decision {
  Outcome outcome = Outcome::Undecided;
  int value = -1;
  Round round = 0;
  friend bool operator==(const Decision&, const Decision&) = default;
};

std::string to_string(const Decision& d);

struct Protocol {
  int n = 0;
  int t = 0;
  int domain_size = 0;  // |V|; values are 0..domain_size-1
  PrimeField field;

  Round last_round() const { return t + 4; }
  Round final_exchange() const { return t + 3; }
};

// Hooks for the deviations that change the agent's own logic rather than
// its outgoing messages.
struct Behavior {
  bool constant_randoms = false;
  std::uint64_t fixed_proposal = 0;  // used with constant_randoms
  bool ignore_lost_limit = false;
  bool guess_randoms = false;
  Round pretend_crash_from = 0;  // 0 = never
};

struct Guess {
  AgentId peer = 0;
  Round round = 0;
  std::uint32_t value = 0;
};

struct Machinery {
  std::vector<int> newly_faulty;
  std::optional<Round> m_star;
  std::vector<AgentId> decision_set;
  std::optional<ElectionResult> elected;
  bool reconstructed = false;
};

struct AgentState {
  AgentId id = 0;
  int value = 0;
  FieldElement proposal;
  LinearPolynomial q;
  LinearPolynomial b;
  Behavior behavior;
  Rng rng;

  std::set<AgentId> lost;
  NewStates ns;
  HistoryStates hs;
  RandomRegistry randoms;
  XRandomRegistry xrandoms;
  HeardFrom heard_from;
  std::map<Round, std::uint32_t> my_randoms;

  // Shares of l's polynomials held by this agent, q_l(id), b_l(id).
  std::map<AgentId, SharePair> my_shares;
  // collected[l][h] = (q_l(h), b_l(h)) as forwarded by h in round t+3.
  std::map<AgentId, std::map<AgentId, SharePair>> collected;

  std::vector<RoundMessage> inbox;  // accepted messages of the current round, by sender
  std::set<int> consensus;
  Decision decision;
  std::optional<Inconsistency> inconsistency;
  std::optional<Machinery> machinery;
  std::vector<Guess> guesses;

  bool running() const { return decision.outcome == Outcome::Undecided; }
};

// Throws std::invalid_argument for a value outside the domain.
AgentState init_agent(const Protocol& proto, AgentId id, int value, Rng rng, Behavior behavior = {});

// One message per peer outside the lost set, ascending recipient.
std::vector<RoundMessage> send_phase(const Protocol& proto, const AgentState& s, Round r);

// `inbox` holds the messages the network delivered to this agent in round r.
void receive_phase(const Protocol& proto, AgentState& s, Round r, std::vector<RoundMessage> inbox);

void compute_phase(const Protocol& proto, AgentState& s, Round r);

}  // namespace rcons
