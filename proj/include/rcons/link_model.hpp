#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "rcons/types.hpp"

namespace rcons {

// Unordered agent pair, stored with lo < hi.
struct LinkId {
  AgentId lo = 0;
  AgentId hi = 0;

  bool touches(AgentId a) const { return a == lo || a == hi; }
  AgentId other(AgentId a) const { return a == lo ? hi : lo; }

  friend bool operator==(const LinkId&, const LinkId&) = default;
  friend auto operator<=>(const LinkId&, const LinkId&) = default;
};

// Throws std::domain_error for a == b or non-positive ids.
LinkId link_of(AgentId a, AgentId b);

// Every link of an n-agent system in the fixed (k ascending, p > k) order.
std::vector<LinkId> all_links(int n);

// Correct-link report: reporter received the other endpoint's round message
// and quotes its message random.
struct ReportR {
  Round round = 0;
  AgentId reporter = 0;
  std::uint32_t rand = 0;
  friend bool operator==(const ReportR&, const ReportR&) = default;
};

// Faulty-link report: carries the reporter's faulty-random bits for the link,
// one per other agent, ordered by agent id.
struct ReportX {
  Round round = 0;
  AgentId reporter = 0;
  std::vector<std::uint8_t> bits;
  friend bool operator==(const ReportX&, const ReportX&) = default;
};

struct ReportO {
  friend bool operator==(const ReportO&, const ReportO&) = default;
};

using StateTuple = std::variant<ReportO, ReportR, ReportX>;

inline bool is_r(const StateTuple& s) { return std::holds_alternative<ReportR>(s); }
inline bool is_x(const StateTuple& s) { return std::holds_alternative<ReportX>(s); }
inline bool is_o(const StateTuple& s) { return std::holds_alternative<ReportO>(s); }
Round round_of(const StateTuple& s);      // 0 for O
AgentId reporter_of(const StateTuple& s);  // 0 for O

// Where a link state came from: relayed by `sender` in `round`, or the
// holder's own detection (sender == 0).
struct SourceTag {
  AgentId sender = 0;
  Round round = 0;

  static SourceTag own() { return {}; }
  static SourceTag relayed(AgentId sender, Round round) { return {sender, round}; }
  bool is_own() const { return sender == 0; }
  friend bool operator==(const SourceTag&, const SourceTag&) = default;
};

struct NsEntry {
  StateTuple state;
  SourceTag source;
  friend bool operator==(const NsEntry&, const NsEntry&) = default;
};

// Latest known state per link. A missing link is an unknown (O) state.
using NewStates = std::map<LinkId, NsEntry>;

enum class LinkClass { Correct, Faulty, Unknown };

struct HistoryViolation {
  LinkId link;
  Round round = 0;
  std::string detail;
};

// Per-round, per-link endpoint reports (at most one per endpoint).
class HistoryStates {
 public:
  using Key = std::pair<LinkId, Round>;

  // Adds an R or X tuple under (link, round of tuple). Re-adding an
  // identical tuple is a no-op.
  std::optional<HistoryViolation> append(LinkId link, const StateTuple& tuple);

  bool contains(LinkId link, const StateTuple& tuple) const;
  const std::vector<StateTuple>* tuples(LinkId link, Round r) const;

  // Faulty if any X is recorded for (link, r) or the link was marked faulty
  // from an earlier round by mark_faulty_from; Correct if only R tuples;
  // Unknown otherwise. Throws std::domain_error for r < 1.
  LinkClass classify(LinkId link, Round r) const;

  void mark_faulty_from(LinkId link, Round r);
  std::optional<Round> faulty_from(LinkId link) const;

  const std::map<Key, std::vector<StateTuple>>& entries() const { return entries_; }
  const std::map<LinkId, Round>& faulty_marks() const { return faulty_from_; }

  friend bool operator==(const HistoryStates&, const HistoryStates&) = default;

 private:
  std::map<Key, std::vector<StateTuple>> entries_;
  std::map<LinkId, Round> faulty_from_;
};

// Back-fills faulty classification from every X state held in ns through
// final_round. Called once, after the last link-state exchange.
void last_update(HistoryStates& hs, const NewStates& ns, Round final_round);

nlohmann::json to_json(const StateTuple& s);
StateTuple state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NewStates& ns);
std::string to_string(LinkClass c);

}  // namespace rcons
