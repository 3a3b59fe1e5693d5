#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "rcons/inconsistency.hpp"
#include "rcons/link_model.hpp"

namespace rcons {

// Message randoms known to one agent, keyed by (sender, round). Write-once.
class RandomRegistry {
 public:
  // Returns false when a different value is already registered.
  bool record(AgentId agent, Round r, std::uint32_t value);
  std::optional<std::uint32_t> lookup(AgentId agent, Round r) const;

  friend bool operator==(const RandomRegistry&, const RandomRegistry&) = default;

 private:
  std::map<std::pair<AgentId, Round>, std::uint32_t> values_;
};

// Faulty-random bits known to one agent. For another generator only the bit
// addressed to this agent is known; for the holder itself the whole vector.
class XRandomRegistry {
 public:
  bool record(AgentId generator, Round r, LinkId link, std::uint8_t bit);
  void record_own(Round r, LinkId link, std::vector<std::uint8_t> bits);

  std::optional<std::uint8_t> lookup(AgentId generator, Round r, LinkId link) const;
  const std::vector<std::uint8_t>* own(Round r, LinkId link) const;

  friend bool operator==(const XRandomRegistry&, const XRandomRegistry&) = default;

 private:
  std::map<std::tuple<AgentId, Round, LinkId>, std::uint8_t> bits_;
  std::map<std::pair<Round, LinkId>, std::vector<std::uint8_t>> own_;
};

// Index of `agent` inside a bit vector produced by `generator` (one entry
// per other agent, ascending id).
std::size_t xbit_index(AgentId generator, AgentId agent);

// Agents heard from in each round; the holder's connected set T per round.
using HeardFrom = std::map<Round, std::set<AgentId>>;

// Everything one agent needs to check and fold in a single received
// link-state message.
struct MergeContext {
  AgentId self = 0;
  Round round = 0;
  int n = 0;
  int t = 0;
  NewStates& ns;
  HistoryStates& hs;
  AgentId sender = 0;
  const NewStates& received;
  const RandomRegistry& randoms;
  const XRandomRegistry& xrandoms;
  const HeardFrom& heard_from;
};

// Checks that the sender's states are consistent with a legal relay history
// seen from the sender's own connectivity at round - 1.
std::optional<Inconsistency> verify_msg_chain(const MergeContext& ctx);

// Format, source, random-number and round-number checks for one received
// link state against the current local view.
std::optional<Inconsistency> verify_state(const MergeContext& ctx, LinkId link, const NsEntry& recv);

// Folds one verified state into the local NS/HS following the case table.
std::optional<Inconsistency> merge_state(MergeContext& ctx, LinkId link, const NsEntry& recv);

enum class MergeCase { Case1 = 1, Case2, Case3, Case4, Case5, Case6, Case7, Case8, Case9, Case10, Case11 };

// Which case of the table (local, received) falls into.
MergeCase classify_case(AgentId self, LinkId link, const StateTuple& local, const StateTuple& recv);

struct IncomingStates {
  AgentId sender = 0;
  const NewStates* states = nullptr;
  std::uint32_t msg_random = 0;
};

struct VerifierView {
  AgentId self = 0;
  Round round = 0;
  int n = 0;
  int t = 0;
  const RandomRegistry& randoms;
  const XRandomRegistry& xrandoms;
  const HeardFrom& heard_from;
};

// One round of link-state processing: record this round's direct-link
// detections, run message-chain verification over every sender, then verify
// and merge every link of every sender in ascending (sender, k, p) order.
// `incoming` must be sorted by sender.
std::optional<Inconsistency> verify_and_update(const VerifierView& view, NewStates& ns, HistoryStates& hs,
                                               std::span<const IncomingStates> incoming);

}  // namespace rcons
